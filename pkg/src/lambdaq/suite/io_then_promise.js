// An I/O callback resolves a promise that a chain waits on.
var p = new Promise(function executor(resolve, reject) {
  fs.readFile("a.txt", function loaded(err, data) {
    if (err) {
      reject(err);
    } else {
      resolve(data);
    }
  });
});
p.then(function parse(data) {
  return data.length;
}).catch(function failed(e) {
  return -1;
});
