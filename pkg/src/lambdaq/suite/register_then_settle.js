// Callbacks wait on a pending promise that a timer settles later.
var settle;
var p = new Promise(function executor(resolve) {
  settle = resolve;
});
p.then(function onValue(v) {
  return v + 1;
});
setTimeout(function fire() {
  settle(41);
}, 10);
