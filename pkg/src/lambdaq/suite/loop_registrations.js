// The same callback registered in a loop on one promise.
var p = Promise.resolve(0);
var count = 0;
function tick(v) {
  count = count + 1;
  return count;
}
for (var i = 0; i < 3; i++) {
  p.then(tick);
}
