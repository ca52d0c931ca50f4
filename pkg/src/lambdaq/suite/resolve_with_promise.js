// Resolving a promise with another promise adopts its state.
var inner = Promise.resolve(5);
var outer = new Promise(function executor(resolve) {
  resolve(inner);
});
outer.then(function adopted(v) {
  return v;
});
