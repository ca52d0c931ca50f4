// The error branch is ignored, so reading from err fails on success.
fs.readFile("/etc/hosts", function loaded(err, data) {
  var msg = err.message;
  return msg;
});
