// Calling a number raises a TypeError inside the executor.
var handler = 42;
var p = new Promise(function executor(resolve) {
  handler();
  resolve(1);
});
p.catch(function onError(e) {
  return e.name;
});
