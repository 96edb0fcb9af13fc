#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctst::mock {

// One canned reply. `body` is sent as-is when it is a string, dumped otherwise.
struct CannedResponse {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
  int delay_ms = 0;
};

struct EndpointScript {
  std::vector<CannedResponse> sequence;     // consumed in arrival order
  std::optional<CannedResponse> fallback;   // served once the sequence is exhausted
};

// Per-endpoint scripted replies. With `synthetic` set, requests that reach an
// endpoint with nothing scripted get a deterministic generated reply keyed on
// the request content.
struct Script {
  std::map<std::string, EndpointScript> endpoints;  // keyed by path
  bool synthetic = true;
  int delay_ms = 0;                                 // added to every request
  std::set<std::string> judge_models{"mock-judge"};  // chat models answering with "Score: N"
  std::size_t token_len = 4;                         // synthetic /v1/score tokenization width

  // Checks every 2xx canned body against the client-side wire decoders.
  void validate() const;

  static Script from_json(const nlohmann::json& j);
  static Script load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct LoggedRequest {
  std::size_t seq = 0;
  std::string path;
  std::string body;  // verbatim
  bool authorized = false;  // an Authorization header was present (its value is never stored)
  int status = 0;
  std::chrono::steady_clock::time_point started;
  std::chrono::steady_clock::time_point finished;
};

// HTTP test double. Binds to loopback; port 0 picks a free port.
class MockServer {
 public:
  explicit MockServer(Script script);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Throws Error when the port cannot be bound.
  void start(int port = 0, const std::string& host = "127.0.0.1");
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  int port() const noexcept;
  std::string base_url() const;

  std::vector<LoggedRequest> request_log() const;
  std::size_t request_count(std::string_view path = {}) const;
  std::size_t max_in_flight() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// --- deterministic generators (shared by the server and by fixture tooling) ---

// Fixed-width pseudo-tokenization of `text`. Token boundaries restart at the
// first character after `marker` (its first occurrence), so no token straddles
// the response span. Every token carries logprob = -per_token_nll except the
// first, which is a null-logprob sentinel. Offsets are code points.
// Throws InputError when per_token_nll <= 0, token_len == 0, token_len exceeds
// the text length, or a non-empty marker is absent.
nlohmann::json synth_logprobs(std::string_view text, std::string_view marker, double per_token_nll,
                              std::size_t token_len);

nlohmann::json synth_chat(const nlohmann::json& request, const Script& script);
nlohmann::json synth_score(const nlohmann::json& request, const Script& script);
nlohmann::json synth_classify(const nlohmann::json& request);
nlohmann::json synth_embeddings(const nlohmann::json& request);

}  // namespace ctst::mock
