// A throwing callback rejects its dependent; catch recovers.
Promise.resolve(3).then(function thrower(v) {
  throw new Error("bad value");
}).then(function skipped(v) {
  return v;
}).catch(function recover(e) {
  return e.message;
}).then(function done(msg) {
  console.log(msg);
});
