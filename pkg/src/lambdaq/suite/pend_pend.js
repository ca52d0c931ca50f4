// A callback returns a pending promise; the outer chain waits for it.
var p = Promise.resolve(1);
p.then(function outer(v) {
  return new Promise(function executor(resolve) {
    setTimeout(function later() {
      resolve(v + 1);
    }, 5);
  });
}).then(function after(v) {
  return v * 10;
});
