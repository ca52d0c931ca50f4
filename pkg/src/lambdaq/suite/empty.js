// No asynchronous work at all.
var x = 1;
var y = x + 2;
