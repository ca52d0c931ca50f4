// A straight chain of then callbacks passing values along.
var p = Promise.resolve(1);
p.then(function inc(v) {
  return v + 1;
}).then(function double(v) {
  return v * 2;
}).then(function show(v) {
  console.log(v);
});
