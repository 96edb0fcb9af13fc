#include "ctst/backends.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/text.hpp"

namespace ctst {

using nlohmann::json;

std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::chat_generation: return "chat_generation";
    case BackendKind::logprob_scoring: return "logprob_scoring";
    case BackendKind::classifier: return "classifier";
    case BackendKind::embedding: return "embedding";
    case BackendKind::judge: return "judge";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view s) {
  for (auto k : {BackendKind::chat_generation, BackendKind::logprob_scoring, BackendKind::classifier,
                 BackendKind::embedding, BackendKind::judge}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown backend kind '" + std::string(s) + "'");
}

LogBase parse_log_base(std::string_view s) {
  if (s == "e" || s == "ln" || s == "natural") return LogBase::e;
  if (s == "2") return LogBase::two;
  if (s == "10") return LogBase::ten;
  throw InputError("unknown logprob base '" + std::string(s) + "'");
}

double to_natural_log(double value, LogBase base) noexcept {
  switch (base) {
    case LogBase::e: return value;
    case LogBase::two: return value * std::log(2.0);
    case LogBase::ten: return value * std::log(10.0);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Profile

namespace {
constexpr std::string_view kFileScheme = "file://";
}

void BackendProfile::validate() const {
  if (base_url.empty()) throw InputError("backend profile: base_url is required");
  if (!(rate_limit > 0)) throw InputError("backend profile: rate_limit must be > 0");
  if (max_parallel < 1) throw InputError("backend profile: max_parallel must be >= 1");
  if (retry.max_retries < 0) throw InputError("backend profile: max_retries must be >= 0");
  if (retry.timeout_ms <= 0) throw InputError("backend profile: timeout_ms must be > 0");
  if (!is_file() && base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw InputError("backend profile: unsupported base_url '" + base_url + "'");
  }
  if (!is_file() && model_name.empty()) throw InputError("backend profile: model_name is required");
}

bool BackendProfile::is_file() const noexcept { return base_url.rfind(kFileScheme, 0) == 0; }

std::filesystem::path BackendProfile::file_path(std::string_view task) const {
  std::string p = base_url.substr(kFileScheme.size());
  for (auto pos = p.find("{task}"); pos != std::string::npos; pos = p.find("{task}")) {
    p.replace(pos, 6, task);
  }
  return p;
}

BackendProfile BackendProfile::from_json(const json& j, BackendKind default_kind,
                                         const std::filesystem::path& base_dir) {
  BackendProfile p;
  try {
    p.kind = j.contains("kind") ? parse_backend_kind(j.at("kind").get<std::string>()) : default_kind;
    p.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model_name")) p.model_name = j.at("model_name").get<std::string>();
    else if (j.contains("model")) p.model_name = j.at("model").get<std::string>();
    if (j.contains("params")) p.params = j.at("params");
    p.rate_limit = j.value("rate_limit", p.rate_limit);
    p.max_parallel = j.value("max_parallel", p.max_parallel);
    p.api_key_env = j.value("api_key_env", p.api_key_env);
    if (j.contains("logprob_base")) p.logprob_base = parse_log_base(j.at("logprob_base").get<std::string>());
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      p.retry.max_retries = r.value("max_retries", p.retry.max_retries);
      p.retry.base_delay_ms = r.value("base_delay_ms", p.retry.base_delay_ms);
      p.retry.timeout_ms = r.value("timeout_ms", p.retry.timeout_ms);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("backend profile: ") + e.what());
  }
  if (p.is_file() && !base_dir.empty()) {
    std::filesystem::path fp = p.base_url.substr(kFileScheme.size());
    if (fp.is_relative()) p.base_url = std::string(kFileScheme) + (base_dir / fp).lexically_normal().string();
  }
  p.validate();
  return p;
}

json BackendProfile::to_json() const {
  std::string base = "e";
  if (logprob_base == LogBase::two) base = "2";
  if (logprob_base == LogBase::ten) base = "10";
  return json{{"kind", std::string(ctst::to_string(kind))},
              {"base_url", base_url},
              {"model_name", model_name},
              {"params", params},
              {"rate_limit", rate_limit},
              {"max_parallel", max_parallel},
              {"api_key_env", api_key_env},
              {"logprob_base", base},
              {"retry",
               {{"max_retries", retry.max_retries},
                {"base_delay_ms", retry.base_delay_ms},
                {"timeout_ms", retry.timeout_ms}}}};
}

// ---------------------------------------------------------------------------
// Wire decoding shared by the client and the mock server contract checks.

void validate_token_partition(std::string_view text, std::span<const TokenScore> tokens) {
  const std::size_t cp_len = text::codepoint_length(text);
  std::vector<std::size_t> byte_at;
  byte_at.reserve(cp_len + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) byte_at.push_back(i);
  }
  byte_at.push_back(text.size());

  auto bad = [](std::size_t i, const std::string& why) {
    return ContractViolation("token " + std::to_string(i) + ": " + why);
  };
  std::size_t expected = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.start != expected) {
      throw bad(i, t.start < expected ? "overlaps previous token" : "leaves a gap before it");
    }
    if (t.start >= t.end) throw bad(i, "empty or inverted span");
    if (t.end > cp_len) throw bad(i, "span runs past end of text");
    const std::string_view span = text.substr(byte_at[t.start], byte_at[t.end] - byte_at[t.start]);
    if (span != t.text) throw bad(i, "text does not match its span");
    if (t.sentinel && i != 0) throw bad(i, "only the first token may be a sentinel");
    if (!t.sentinel && !(t.logprob <= 0.0)) throw bad(i, "logprob must be <= 0");
    expected = t.end;
  }
  if (expected != cp_len) throw bad(tokens.size(), "tokens do not cover the whole text");
}

std::vector<TokenScore> parse_token_scores(const json& payload, std::string_view text, LogBase base) {
  if (!payload.is_object() || !payload.contains("tokens") || !payload["tokens"].is_array()) {
    throw ContractViolation("scoring response lacks a 'tokens' list");
  }
  if (auto it = payload.find("logprob_base"); it != payload.end() && it->is_string()) {
    base = parse_log_base(it->get<std::string>());
  }
  std::vector<TokenScore> out;
  const auto& tokens = payload["tokens"];
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    try {
      TokenScore ts;
      ts.text = t.at("text").get<std::string>();
      ts.start = t.at("start").get<std::size_t>();
      ts.end = t.at("end").get<std::size_t>();
      const auto& lp = t.at("logprob");
      if (lp.is_null()) {
        if (i != 0) throw ContractViolation("token " + std::to_string(i) + ": null logprob is only allowed first");
        ts.sentinel = true;
      } else {
        ts.logprob = to_natural_log(lp.get<double>(), base);
        if (!std::isfinite(ts.logprob)) throw ContractViolation("token " + std::to_string(i) + ": non-finite logprob");
        // Float noise from real backends.
        if (ts.logprob > 0.0 && ts.logprob < 1e-6) ts.logprob = 0.0;
      }
      out.push_back(std::move(ts));
    } catch (const json::exception& e) {
      throw ContractViolation("token " + std::to_string(i) + ": " + e.what());
    }
  }
  validate_token_partition(text, out);
  return out;
}

std::vector<Classification> parse_classifications(const json& payload, Task task, std::size_t expected) {
  if (!payload.is_object() || !payload.contains("results") || !payload["results"].is_array()) {
    throw ContractViolation("classifier response lacks a 'results' list");
  }
  const auto& results = payload["results"];
  if (results.size() != expected) {
    throw ContractViolation("classifier returned " + std::to_string(results.size()) + " results for " +
                            std::to_string(expected) + " inputs");
  }
  const auto allowed = directions_of(task);
  std::vector<Classification> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    try {
      const std::string label = text::to_lower(results[i].at("label").get<std::string>());
      const double conf = results[i].at("confidence").get<double>();
      auto it = std::find_if(allowed.begin(), allowed.end(), [&](Direction d) { return to_string(d) == label; });
      if (it == allowed.end()) {
        throw ContractViolation("result " + std::to_string(i) + ": label '" + label + "' is not a " +
                                std::string(to_string(task)) + " label");
      }
      if (!(conf >= 0.0 && conf <= 1.0)) {
        throw ContractViolation("result " + std::to_string(i) + ": confidence outside [0,1]");
      }
      out.push_back(Classification{*it, conf});
    } catch (const json::exception& e) {
      throw ContractViolation("result " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::vector<double>> parse_embeddings(const json& payload, std::size_t expected) {
  if (!payload.is_object() || !payload.contains("data") || !payload["data"].is_array()) {
    throw ContractViolation("embedding response lacks a 'data' list");
  }
  const auto& data = payload["data"];
  if (data.size() != expected) {
    throw ContractViolation("embedding backend returned " + std::to_string(data.size()) + " vectors for " +
                            std::to_string(expected) + " inputs");
  }
  std::vector<std::vector<double>> out(expected);
  std::vector<bool> seen(expected, false);
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      const std::size_t idx = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
      if (idx >= expected || seen[idx]) throw ContractViolation("embedding " + std::to_string(i) + ": bad index");
      seen[idx] = true;
      out[idx] = data[i].at("embedding").get<std::vector<double>>();
      for (double v : out[idx]) {
        if (!std::isfinite(v)) throw ContractViolation("embedding " + std::to_string(i) + ": non-finite value");
      }
    } catch (const json::exception& e) {
      throw ContractViolation("embedding " + std::to_string(i) + ": " + e.what());
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].size() != out[0].size()) {
      throw ContractViolation("embedding " + std::to_string(i) + ": dimension " + std::to_string(out[i].size()) +
                              " differs from " + std::to_string(out[0].size()));
    }
  }
  return out;
}

std::string parse_chat_completion(const json& payload) {
  try {
    const auto& choice = payload.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("chat response lacks choices[0].message.content: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Client

struct BackendClient::FileData {
  std::map<std::string, std::map<int, std::string>> completions;  // prompt -> attempt -> text
  std::map<std::string, json> token_payloads;
  std::map<std::string, std::vector<double>> embeddings;
  std::vector<std::optional<Classification>> predictions;
  std::vector<std::string> raw_labels;
};

BackendClient::BackendClient(BackendProfile profile, std::shared_ptr<ResponseCache> cache, bool read_cache)
    : profile_(std::move(profile)),
      cache_(std::move(cache)),
      read_cache_(read_cache),
      rate_(profile_.rate_limit),
      gate_(profile_.max_parallel) {
  profile_.validate();
  if (!profile_.is_file()) transport_ = make_http_transport(profile_.base_url, profile_.retry.timeout_ms);
}

BackendClient::~BackendClient() = default;

void BackendClient::set_transport(std::unique_ptr<Transport> transport) { transport_ = std::move(transport); }

BackendStats BackendClient::stats() const {
  return BackendStats{network_requests_.load(), cache_hits_.load(), retries_.load(), file_lookups_.load()};
}

std::string BackendClient::endpoint(std::string_view fallback) const {
  if (auto it = profile_.params.find("path"); it != profile_.params.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return std::string(fallback);
}

std::size_t BackendClient::batch_size() const {
  const auto n = profile_.params.value("batch_size", std::size_t{16});
  return n == 0 ? 1 : n;
}

std::string BackendClient::send_with_retry(const std::string& path, const std::string& body) {
  if (!transport_) throw InputError("backend '" + profile_.model_name + "' has no transport");
  std::vector<std::pair<std::string, std::string>> headers;
  if (!profile_.api_key_env.empty()) {
    if (const char* key = std::getenv(profile_.api_key_env.c_str()); key && *key) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  auto excerpt = [](const std::string& s) { return s.size() > 200 ? s.substr(0, 200) + "..." : s; };

  for (int attempt = 0;; ++attempt) {
    HttpResult r;
    {
      ConcurrencyGate::Permit permit(gate_);
      rate_.acquire();
      ++network_requests_;
      r = transport_->post(path, body, headers);
    }
    if (!r.transport_error && r.status >= 200 && r.status < 300) return r.body;

    const bool transient = r.transport_error || r.status >= 500 || r.status == 429 || r.status == 408;
    if (!transient) throw BackendError(r.status, excerpt(r.body));
    if (attempt >= profile_.retry.max_retries) {
      if (r.timed_out) {
        throw TimeoutError("backend '" + profile_.base_url + "' timed out after " + std::to_string(attempt + 1) +
                           " attempt(s)");
      }
      if (r.transport_error) throw BackendError(0, r.error);
      throw BackendError(r.status, excerpt(r.body));
    }
    ++retries_;
    const auto delay = std::chrono::milliseconds(static_cast<long long>(profile_.retry.base_delay_ms) << attempt);
    std::this_thread::sleep_for(delay);
  }
}

json BackendClient::call(const std::string& path, const json& body, int attempt, const Validator& validate) {
  const CacheKey key = CacheKey::of(to_string(profile_.kind), profile_.model_name, body, attempt);
  if (cache_ && read_cache_) {
    if (auto hit = cache_->get(key)) {
      try {
        json payload = json::parse(*hit);
        validate(payload);
        ++cache_hits_;
        return payload;
      } catch (const std::exception&) {
        // Corrupt or stale entry: fall through and refetch.
      }
    }
  }
  const std::string raw = send_with_retry(path, body.dump());
  json payload;
  try {
    payload = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("backend returned invalid JSON: ") + e.what());
  }
  validate(payload);
  if (cache_) cache_->put(key, raw);
  return payload;
}

const BackendClient::FileData& BackendClient::file_data(std::string_view task) {
  std::lock_guard lock(file_mutex_);
  const std::string slot(task);
  if (auto it = file_data_.find(slot); it != file_data_.end()) return *it->second;

  auto data = std::make_unique<FileData>();
  const auto path = profile_.file_path(task);
  switch (profile_.kind) {
    case BackendKind::chat_generation:
    case BackendKind::judge:
      for (const auto& row : io::read_jsonl(path)) {
        try {
          data->completions[row.at("prompt").get<std::string>()][row.value("attempt", 0)] =
              row.at("completion").get<std::string>();
        } catch (const json::exception& e) {
          throw InputError(path.string() + ": " + e.what());
        }
      }
      break;
    case BackendKind::logprob_scoring:
      for (auto& row : io::read_jsonl(path)) {
        if (!row.contains("text") || !row["text"].is_string()) throw InputError(path.string() + ": row without text");
        std::string t = row["text"].get<std::string>();
        data->token_payloads[t] = std::move(row);
      }
      break;
    case BackendKind::embedding:
      for (const auto& row : io::read_jsonl(path)) {
        try {
          data->embeddings[row.at("text").get<std::string>()] = row.at("embedding").get<std::vector<double>>();
        } catch (const json::exception& e) {
          throw InputError(path.string() + ": " + e.what());
        }
      }
      break;
    case BackendKind::classifier: {
      for (const auto& line : io::read_lines(path)) {
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(line, "\t");
        if (cols.size() < 3) throw InputError(path.string() + ": expected idx<TAB>label<TAB>confidence");
        std::size_t idx = 0;
        try {
          idx = std::stoul(cols[0]);
        } catch (const std::exception&) {
          if (cols[0] == "idx") continue;  // header
          throw InputError(path.string() + ": bad index '" + cols[0] + "'");
        }
        if (data->raw_labels.size() <= idx) {
          data->raw_labels.resize(idx + 1);
          data->predictions.resize(idx + 1);
        }
        data->raw_labels[idx] = text::trim_copy(cols[1]);
        data->predictions[idx] = Classification{Direction::formal, std::stod(cols[2])};
      }
      break;
    }
  }
  const auto& ref = *data;
  file_data_.emplace(slot, std::move(data));
  return ref;
}

std::string BackendClient::chat(std::string_view prompt, const json& decode_params, int attempt) {
  if (profile_.is_file()) {
    ++file_lookups_;
    const auto& fd = file_data();
    auto it = fd.completions.find(std::string(prompt));
    if (it == fd.completions.end()) {
      throw BackendError(404, "no fixture completion for prompt " + text::sha256_hex(prompt).substr(0, 12));
    }
    auto at = it->second.find(attempt);
    return at != it->second.end() ? at->second : it->second.begin()->second;
  }
  json messages = json::array();
  if (auto it = profile_.params.find("system_prompt"); it != profile_.params.end() && it->is_string()) {
    messages.push_back({{"role", "system"}, {"content", *it}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt}});
  json body{{"model", profile_.model_name}, {"messages", messages}, {"temperature", 0}, {"max_tokens", 256}};
  for (const auto& [k, v] : profile_.params.items()) {
    if (k == "path" || k == "batch_size" || k == "system_prompt") continue;
    body[k] = v;
  }
  for (const auto& [k, v] : decode_params.items()) body[k] = v;
  const json payload =
      call(endpoint("/v1/chat/completions"), body, attempt, [](const json& p) { (void)parse_chat_completion(p); });
  return parse_chat_completion(payload);
}

std::string BackendClient::generate(std::string_view prompt, const json& decode_params) {
  if (profile_.kind != BackendKind::chat_generation) {
    throw InputError("generate() requires a chat_generation backend");
  }
  return chat(prompt, decode_params, 0);
}

std::string BackendClient::judge(std::string_view judge_prompt, int attempt) {
  if (profile_.kind != BackendKind::judge) throw InputError("judge() requires a judge backend");
  return chat(judge_prompt, json::object(), attempt);
}

std::vector<TokenScore> BackendClient::score_logprobs(std::string_view text) {
  if (profile_.kind != BackendKind::logprob_scoring) {
    throw InputError("score_logprobs() requires a logprob_scoring backend");
  }
  if (text.empty()) throw InputError("score_logprobs() requires non-empty text");
  if (profile_.is_file()) {
    ++file_lookups_;
    const auto& fd = file_data();
    auto it = fd.token_payloads.find(std::string(text));
    if (it == fd.token_payloads.end()) {
      throw BackendError(404, "no fixture token scores for text " + text::sha256_hex(text).substr(0, 12));
    }
    return parse_token_scores(it->second, text, profile_.logprob_base);
  }
  const json body{{"model", profile_.model_name}, {"text", text}};
  const LogBase base = profile_.logprob_base;
  const json payload = call(endpoint("/v1/score"), body, 0,
                            [&](const json& p) { (void)parse_token_scores(p, text, base); });
  return parse_token_scores(payload, text, base);
}

std::vector<Classification> BackendClient::classify(std::span<const std::string> texts, Task task) {
  if (profile_.kind != BackendKind::classifier) throw InputError("classify() requires a classifier backend");
  if (texts.empty()) throw InputError("classify() requires at least one text");
  if (profile_.is_file()) {
    ++file_lookups_;
    const auto& fd = file_data(to_string(task));
    json results = json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (i >= fd.predictions.size() || !fd.predictions[i]) {
        throw ContractViolation("prediction file has no row for index " + std::to_string(i));
      }
      results.push_back({{"label", fd.raw_labels[i]}, {"confidence", fd.predictions[i]->confidence}});
    }
    return parse_classifications(json{{"results", results}}, task, texts.size());
  }
  std::vector<Classification> out;
  const std::size_t step = batch_size();
  for (std::size_t lo = 0; lo < texts.size(); lo += step) {
    const auto chunk = texts.subspan(lo, std::min(step, texts.size() - lo));
    const json body{{"model", profile_.model_name},
                    {"task", std::string(to_string(task))},
                    {"texts", std::vector<std::string>(chunk.begin(), chunk.end())}};
    const std::size_t n = chunk.size();
    const json payload = call(endpoint("/v1/classify"), body, 0,
                              [&](const json& p) { (void)parse_classifications(p, task, n); });
    auto part = parse_classifications(payload, task, n);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<std::vector<double>> BackendClient::embed(std::span<const std::string> texts) {
  if (profile_.kind != BackendKind::embedding) throw InputError("embed() requires an embedding backend");
  if (texts.empty()) throw InputError("embed() requires at least one text");
  std::vector<std::vector<double>> out;
  if (profile_.is_file()) {
    ++file_lookups_;
    const auto& fd = file_data();
    json data = json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto it = fd.embeddings.find(texts[i]);
      if (it == fd.embeddings.end()) {
        throw BackendError(404, "no fixture embedding for text " + text::sha256_hex(texts[i]).substr(0, 12));
      }
      data.push_back({{"index", i}, {"embedding", it->second}});
    }
    return parse_embeddings(json{{"data", data}}, texts.size());
  }
  const std::size_t step = batch_size();
  for (std::size_t lo = 0; lo < texts.size(); lo += step) {
    const auto chunk = texts.subspan(lo, std::min(step, texts.size() - lo));
    const json body{{"model", profile_.model_name}, {"input", std::vector<std::string>(chunk.begin(), chunk.end())}};
    const std::size_t n = chunk.size();
    const json payload =
        call(endpoint("/v1/embeddings"), body, 0, [&](const json& p) { (void)parse_embeddings(p, n); });
    auto part = parse_embeddings(payload, n);
    for (auto& v : part) {
      if (!out.empty() && v.size() != out.front().size()) {
        throw ContractViolation("embedding dimension changed between batches");
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace ctst
