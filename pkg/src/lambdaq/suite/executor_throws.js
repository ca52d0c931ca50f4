// An exception inside an executor rejects the promise.
var p = new Promise(function executor(resolve, reject) {
  throw new Error("boom");
});
p.then(function never(v) {
  return v;
}, function handled(e) {
  return e.message;
});
