// Resolving with a thenable object calls its then method asynchronously.
var thenable = {
  then: function thenMethod(onFul, onRej) {
    onFul(7);
  }
};
Promise.resolve(thenable).then(function got(v) {
  return v + 1;
});
