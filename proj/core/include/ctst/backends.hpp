#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctst/cache.hpp"
#include "ctst/scheduler.hpp"
#include "ctst/style.hpp"

namespace ctst {

enum class BackendKind { chat_generation, logprob_scoring, classifier, embedding, judge };

std::string_view to_string(BackendKind k) noexcept;
BackendKind parse_backend_kind(std::string_view s);

// Base in which a scoring backend reports log-probabilities. Everything
// downstream works in natural log.
enum class LogBase { e, two, ten };

LogBase parse_log_base(std::string_view s);
double to_natural_log(double value, LogBase base) noexcept;

struct RetryPolicy {
  int max_retries = 3;
  int base_delay_ms = 200;  // doubled after every failed attempt
  int timeout_ms = 60000;
};

// Endpoint + model + knobs for one backend role. base_url is either
// "http(s)://host[:port][/prefix]" or "file://<path>" for an offline fixture.
struct BackendProfile {
  BackendKind kind = BackendKind::chat_generation;
  std::string base_url;
  std::string model_name;
  nlohmann::json params = nlohmann::json::object();
  double rate_limit = 8.0;  // requests per second
  std::size_t max_parallel = 4;
  RetryPolicy retry;
  std::string api_key_env = "CTST_API_KEY";
  LogBase logprob_base = LogBase::e;

  void validate() const;
  bool is_file() const noexcept;
  // Path of a file backend with any "{task}" placeholder substituted.
  std::filesystem::path file_path(std::string_view task = {}) const;

  // Relative file:// paths resolve against base_dir.
  static BackendProfile from_json(const nlohmann::json& j, BackendKind default_kind,
                                  const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

// One scored token. Offsets are code-point positions in the scored string,
// half-open. A sentinel token has no conditional probability (typically the
// first token of an echo-style scorer) and is excluded from NLL sums.
struct TokenScore {
  std::string text;
  double logprob = 0.0;
  std::size_t start = 0;
  std::size_t end = 0;
  bool sentinel = false;
};

// Tokens must tile `text` exactly: ordered, non-overlapping, gap-free, each
// token's text equal to its span, logprob <= 0. Throws ContractViolation
// naming the first offending index.
void validate_token_partition(std::string_view text, std::span<const TokenScore> tokens);

// Decodes {"tokens": [{"text", "logprob" (number|null), "start", "end"}], "logprob_base"?}.
// Only index 0 may carry a null (sentinel) logprob. Validates the partition.
std::vector<TokenScore> parse_token_scores(const nlohmann::json& payload, std::string_view text, LogBase base);

struct Classification {
  Direction label;
  double confidence = 0.0;
};

// Decodes {"results": [{"label", "confidence"}]} for `expected` inputs.
std::vector<Classification> parse_classifications(const nlohmann::json& payload, Task task, std::size_t expected);

// Decodes an OpenAI-style embeddings payload; vectors are returned in input order.
std::vector<std::vector<double>> parse_embeddings(const nlohmann::json& payload, std::size_t expected);

// Extracts choices[0].message.content (or choices[0].text).
std::string parse_chat_completion(const nlohmann::json& payload);

struct HttpResult {
  int status = 0;
  std::string body;
  bool transport_error = false;
  bool timed_out = false;
  std::string error;
};

// Seam for the wire layer; tests substitute scripted transports.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResult post(const std::string& path, const std::string& body,
                          const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

std::unique_ptr<Transport> make_http_transport(const std::string& base_url, int timeout_ms);

struct BackendStats {
  std::size_t network_requests = 0;  // HTTP attempts actually sent
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  std::size_t file_lookups = 0;
};

// Client for one BackendProfile. Thread-safe: calls may be issued from a
// parallel_map; sends are bounded by max_parallel and the rate limit.
class BackendClient {
 public:
  explicit BackendClient(BackendProfile profile, std::shared_ptr<ResponseCache> cache = nullptr,
                         bool read_cache = true);
  ~BackendClient();

  BackendClient(const BackendClient&) = delete;
  BackendClient& operator=(const BackendClient&) = delete;

  std::string generate(std::string_view prompt, const nlohmann::json& decode_params = nlohmann::json::object());
  // `attempt` > 0 addresses a distinct cache entry so a judge retry is a real re-query.
  std::string judge(std::string_view judge_prompt, int attempt = 0);
  std::vector<TokenScore> score_logprobs(std::string_view text);
  std::vector<Classification> classify(std::span<const std::string> texts, Task task);
  std::vector<std::vector<double>> embed(std::span<const std::string> texts);

  BackendStats stats() const;
  const BackendProfile& profile() const noexcept { return profile_; }
  std::size_t max_in_flight_observed() const noexcept { return gate_.max_observed(); }

  void set_transport(std::unique_ptr<Transport> transport);

 private:
  using Validator = std::function<void(const nlohmann::json&)>;

  nlohmann::json call(const std::string& path, const nlohmann::json& body, int attempt, const Validator& validate);
  std::string send_with_retry(const std::string& path, const std::string& body);
  std::string chat(std::string_view prompt, const nlohmann::json& decode_params, int attempt);
  std::string endpoint(std::string_view fallback) const;
  std::size_t batch_size() const;

  // Offline fixtures.
  struct FileData;
  const FileData& file_data(std::string_view task = {});

  BackendProfile profile_;
  std::shared_ptr<ResponseCache> cache_;
  bool read_cache_;
  std::unique_ptr<Transport> transport_;
  RateLimiter rate_;
  ConcurrencyGate gate_;

  std::atomic<std::size_t> network_requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> file_lookups_{0};

  std::mutex file_mutex_;
  std::map<std::string, std::unique_ptr<FileData>> file_data_;
};

}  // namespace ctst
