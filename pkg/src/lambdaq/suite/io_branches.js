// fs.open reports either an error or a descriptor.
fs.open("/tmp/x", "r", 420, function opened(err, fd) {
  if (err) {
    console.log(err.message);
  } else {
    console.log(fd);
  }
});
