// setImmediate callbacks are timer jobs with extra arguments.
setImmediate(function withArgs(a, b) {
  return a + b;
}, 1, 2);
Promise.resolve("x").then(function first(v) {
  return v;
});
