// A rejection passes through fulfill-only links until a handler.
Promise.reject(new Error("nope")).then(function a(v) {
  return v;
}).then(function b(v) {
  return v;
}, function c(e) {
  return 0;
});
