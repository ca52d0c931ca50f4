// A timer registered inside another timer runs after it.
setTimeout(function outer() {
  setTimeout(function inner() {
    console.log("inner");
  }, 0);
}, 0);
