// A property read on undefined inside a callback rejects its promise.
var config;
Promise.resolve().then(function readConfig() {
  return config.port;
}).catch(function fallback(e) {
  return 8080;
});
