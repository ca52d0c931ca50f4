// Promise jobs run before timer jobs.
setTimeout(function timer() {
  console.log("timer");
}, 0);
Promise.resolve().then(function job() {
  console.log("job");
});
