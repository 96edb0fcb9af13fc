#include <chrono>

#include "ctst/backends.hpp"
#include "ctst/error.hpp"

#include <httplib.h>

namespace ctst {

namespace {

class HttpTransport final : public Transport {
 public:
  HttpTransport(const std::string& base_url, int timeout_ms) : timeout_ms_(timeout_ms) {
    const auto scheme_end = base_url.find("://");
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpResult post(const std::string& path, const std::string& body,
                  const std::vector<std::pair<std::string, std::string>>& headers) override {
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(timeout_ms_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(prefix_ + path, h, body, "application/json");
    HttpResult out;
    if (!res) {
      out.transport_error = true;
      out.error = httplib::to_string(res.error());
      const auto elapsed = std::chrono::steady_clock::now() - started;
      out.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                      (res.error() == httplib::Error::Read && elapsed >= timeout);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string origin_;
  std::string prefix_;
  int timeout_ms_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url, int timeout_ms) {
  return std::make_unique<HttpTransport>(base_url, timeout_ms);
}

}  // namespace ctst
