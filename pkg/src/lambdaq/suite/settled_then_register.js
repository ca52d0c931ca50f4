// Registering on an already fulfilled promise schedules the callback at once.
var p = new Promise(function executor(resolve) {
  resolve("ready");
});
p.then(function first(v) {
  return v;
});
p.then(function second(v) {
  return v;
});
