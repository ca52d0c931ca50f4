// Two independent timers may run in either order.
setTimeout(function first() {
  console.log("a");
}, 10);
setTimeout(function second() {
  console.log("b");
}, 20);
