#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace tas {

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
  bool timed_out = false;      // no response within the timeout
  bool transport_error = false;  // connection-level failure
  std::string error;
};

// POST transport used by the remote provider and the remote web adapter.
// Tests inject their own implementation.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_curl_transport();

}  // namespace tas
