// Callback 1 stores the response; callback 2 reads it back.
var honoka = {};

function request(url) {
  return new Promise(function executor(resolve, reject) {
    http.get(url, function onResponse(res) {
      resolve(res);
    });
  });
}

request("http://example.org").then(function storeResponse(res) {
  honoka.response = res;
  return res.body;
}).then(function readHeaders(body) {
  var headers = honoka.response.headers;
  return headers;
});
