// One timer initializes state that a nested timer reads.
var state = {};
setTimeout(function init() {
  state.value = { ready: true };
  setTimeout(function use() {
    var r = state.value.ready;
    return r;
  }, 0);
}, 0);
