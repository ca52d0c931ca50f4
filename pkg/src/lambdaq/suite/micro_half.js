// Two timers, each followed by a promise job.
setTimeout(function t1() {
  Promise.resolve().then(function j1() {
    console.log("j1");
  });
}, 0);
setTimeout(function t2() {
  Promise.resolve().then(function j2() {
    console.log("j2");
  });
}, 0);
