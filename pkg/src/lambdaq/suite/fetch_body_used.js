// A response body may be consumed only once.
function Response(body) {
  this.body = body;
  this.bodyUsed = false;
  this.text = function text() {
    if (this.bodyUsed) {
      return Promise.reject(new TypeError("body used already"));
    }
    this.bodyUsed = true;
    return Promise.resolve(this.body);
  };
  this.formData = function formData() {
    if (this.bodyUsed) {
      return Promise.reject(new TypeError("body used already"));
    }
    this.bodyUsed = true;
    return Promise.resolve(this.body);
  };
}

function fetch(url) {
  return new Promise(function executor(resolve) {
    http.get(url, function onResponse(res) {
      resolve(new Response(res.body));
    });
  });
}

fetch("http://example.org").then(function readText(response) {
  return response.text();
}).then(function useText(text) {
  return text.length;
});
