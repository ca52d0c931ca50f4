// One function registered three times along a chain.
function foo(){}

var x = Promise.resolve()
.then(foo)
.then(function ff1(){})
.then(foo)
.then(function ff2(){})
.then(foo)
.then(function ff3(){});
