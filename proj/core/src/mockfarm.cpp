#include "ctst/mockfarm.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "ctst/backends.hpp"
#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/style.hpp"
#include "ctst/text.hpp"

namespace ctst::mock {

using nlohmann::json;

namespace {

constexpr std::string_view kChatPath = "/v1/chat/completions";
constexpr std::string_view kScorePath = "/v1/score";
constexpr std::string_view kClassifyPath = "/v1/classify";
constexpr std::string_view kEmbedPath = "/v1/embeddings";
constexpr std::string_view kResponseMarker = "###Response: ";

CannedResponse canned_from_json(const json& j) {
  CannedResponse c;
  c.status = j.value("status", 200);
  c.body = j.contains("body") ? j.at("body") : json::object();
  c.delay_ms = j.value("delay_ms", 0);
  if (c.status < 100 || c.status > 599) throw InputError("script: status " + std::to_string(c.status) + " out of range");
  if (c.delay_ms < 0) throw InputError("script: negative delay_ms");
  return c;
}

json canned_to_json(const CannedResponse& c) {
  return json{{"status", c.status}, {"body", c.body}, {"delay_ms", c.delay_ms}};
}

std::string body_text(const json& body) { return body.is_string() ? body.get<std::string>() : body.dump(); }

void validate_payload(std::string_view path, const json& body) {
  if (body.is_string()) return;  // raw bodies are allowed on purpose (malformed-response tests)
  if (path == kChatPath) {
    (void)parse_chat_completion(body);
  } else if (path == kScorePath) {
    std::string text;
    for (const auto& t : body.at("tokens")) text += t.at("text").get<std::string>();
    (void)parse_token_scores(body, text, LogBase::e);
  } else if (path == kClassifyPath) {
    if (!body.contains("results") || !body["results"].is_array()) {
      throw ContractViolation("classifier payload lacks 'results'");
    }
    for (const auto& r : body["results"]) {
      (void)parse_direction(text::to_lower(r.at("label").get<std::string>()));
      const double c = r.at("confidence").get<double>();
      if (!(c >= 0.0 && c <= 1.0)) throw ContractViolation("classifier confidence outside [0,1]");
    }
  } else if (path == kEmbedPath) {
    (void)parse_embeddings(body, body.at("data").size());
  }
}

std::string last_user_message(const json& request) {
  const auto& msgs = request.at("messages");
  for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
    if (it->value("role", "") == "user") return it->at("content").get<std::string>();
  }
  throw InputError("chat request has no user message");
}

json chat_payload(const std::string& content) {
  return json{{"object", "chat.completion"},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", "stop"}}})}};
}

std::string hex8(std::uint64_t h) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(8, '0');
  for (int i = 7; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Script

void Script::validate() const {
  if (token_len == 0) throw InputError("script: token_len must be >= 1");
  for (const auto& [path, ep] : endpoints) {
    auto check = [&](const CannedResponse& c, const std::string& where) {
      if (c.status < 200 || c.status >= 300) return;
      try {
        validate_payload(path, c.body);
      } catch (const std::exception& e) {
        throw InputError("script: " + path + " " + where + ": " + e.what());
      }
    };
    for (std::size_t i = 0; i < ep.sequence.size(); ++i) check(ep.sequence[i], "sequence[" + std::to_string(i) + "]");
    if (ep.fallback) check(*ep.fallback, "fallback");
  }
}

Script Script::from_json(const json& j) {
  Script s;
  try {
    s.synthetic = j.value("synthetic", true);
    s.delay_ms = j.value("delay_ms", 0);
    s.token_len = j.value("token_len", std::size_t{4});
    if (j.contains("judge_models")) s.judge_models = j.at("judge_models").get<std::set<std::string>>();
    if (j.contains("endpoints")) {
      for (const auto& [path, ep] : j.at("endpoints").items()) {
        EndpointScript es;
        for (const auto& c : ep.value("sequence", json::array())) es.sequence.push_back(canned_from_json(c));
        if (ep.contains("fallback")) es.fallback = canned_from_json(ep.at("fallback"));
        s.endpoints[path] = std::move(es);
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("script: ") + e.what());
  }
  s.validate();
  return s;
}

Script Script::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json Script::to_json() const {
  json eps = json::object();
  for (const auto& [path, ep] : endpoints) {
    json seq = json::array();
    for (const auto& c : ep.sequence) seq.push_back(canned_to_json(c));
    json e{{"sequence", seq}};
    if (ep.fallback) e["fallback"] = canned_to_json(*ep.fallback);
    eps[path] = e;
  }
  return json{{"synthetic", synthetic},
              {"delay_ms", delay_ms},
              {"judge_models", judge_models},
              {"token_len", token_len},
              {"endpoints", eps}};
}

// ---------------------------------------------------------------------------
// Generators

json synth_logprobs(std::string_view text, std::string_view marker, double per_token_nll, std::size_t token_len) {
  if (!(per_token_nll > 0.0) || !std::isfinite(per_token_nll)) throw InputError("synth_logprobs: per_token_nll must be > 0");
  if (token_len == 0) throw InputError("synth_logprobs: token_len must be >= 1");
  if (auto bad = text::find_invalid_utf8(text)) throw InputError("synth_logprobs: invalid UTF-8");
  const std::size_t n = text::codepoint_length(text);
  if (token_len > n) {
    throw InputError("synth_logprobs: token_len " + std::to_string(token_len) + " exceeds text length " +
                     std::to_string(n));
  }
  std::size_t split = 0;
  if (!marker.empty()) {
    const auto pos = text.find(marker);
    if (pos == std::string_view::npos) throw InputError("synth_logprobs: marker not found in text");
    split = text::codepoint_length(text.substr(0, pos + marker.size()));
  }

  json tokens = json::array();
  auto emit_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t s = lo; s < hi; s += token_len) {
      const std::size_t e = std::min(hi, s + token_len);
      const std::size_t b0 = text::byte_offset_of(text, s);
      const std::size_t b1 = text::byte_offset_of(text, e);
      json t{{"text", std::string(text.substr(b0, b1 - b0))}, {"start", s}, {"end", e}};
      t["logprob"] = tokens.empty() ? json(nullptr) : json(-per_token_nll);
      tokens.push_back(std::move(t));
    }
  };
  emit_range(0, split);
  emit_range(split, n);
  return json{{"tokens", tokens}, {"logprob_base", "e"}};
}

json synth_chat(const json& request, const Script& script) {
  const std::string model = request.value("model", "");
  const std::string prompt = last_user_message(request);
  const std::uint64_t h = text::fnv1a(model + "\x1f" + prompt);

  if (script.judge_models.contains(model)) {
    const int score = 35 + static_cast<int>(h % 61);
    return chat_payload("The reply addresses the query and reads naturally.\nScore: " + std::to_string(score));
  }

  // Echo the style word the prompt asks for (when the model "complies") so
  // the synthetic classifier has something to find.
  std::string style;
  std::size_t best = std::string::npos;
  for (Direction d : kAllDirections) {
    const auto w = std::string(style_word(d));
    // Whole-word, capitalized match; "Formal" must not hit inside "Informal".
    for (auto pos = prompt.find(w); pos != std::string::npos; pos = prompt.find(w, pos + 1)) {
      const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(prompt[pos - 1]));
      const auto end = pos + w.size();
      const bool right_ok = end >= prompt.size() || !std::isalpha(static_cast<unsigned char>(prompt[end]));
      if (left_ok && right_ok && (best == std::string::npos || pos < best)) {
        best = pos;
        style = w;
      }
    }
  }
  static constexpr std::string_view kOpeners[] = {"Sure", "Well", "Honestly", "Of course", "I think", "Indeed"};
  static constexpr std::string_view kBodies[] = {"that sounds good to me", "I would be glad to help",
                                                 "let us talk about it later", "it is a lovely day",
                                                 "I am not sure about that", "thank you for asking"};
  std::string reply = std::string(kOpeners[h % 6]) + ", " + std::string(kBodies[(h >> 8) % 6]) + ".";
  if (!style.empty() && (h >> 16) % 4 != 0) reply += " (" + text::to_lower(style) + ")";
  reply += " #" + hex8(h >> 24);
  return chat_payload(reply);
}

json synth_score(const json& request, const Script& script) {
  const std::string t = request.at("text").get<std::string>();
  if (t.empty()) throw InputError("score request with empty text");
  const auto pos = t.find(kResponseMarker);
  const std::string_view marker = pos == std::string::npos ? std::string_view{} : kResponseMarker;
  const std::string_view response = pos == std::string::npos ? std::string_view(t) : std::string_view(t).substr(pos + kResponseMarker.size());
  // Planted per-token NLL in [1, 4], a function of the response text only.
  const double nll = 1.0 + static_cast<double>(text::fnv1a(response) % 3001) / 1000.0;
  const std::size_t len = std::min<std::size_t>(script.token_len, text::codepoint_length(t));
  return synth_logprobs(t, marker, nll, len);
}

json synth_classify(const json& request) {
  const Task task = parse_task(request.at("task").get<std::string>());
  const auto labels = directions_of(task);
  json results = json::array();
  for (const auto& item : request.at("texts")) {
    const std::string s = item.get<std::string>();
    const std::string lower = text::to_lower(s);
    std::optional<Direction> hit;
    for (Direction d : labels) {
      const std::string tag = "(" + std::string(to_string(d)) + ")";
      if (lower.find(tag) != std::string::npos) hit = d;
    }
    const std::uint64_t h = text::fnv1a(std::string(to_string(task)) + "\x1f" + s);
    const Direction label = hit ? *hit : labels[h % 2];
    const double conf = hit ? 0.9 : 0.5 + static_cast<double>((h >> 8) % 40) / 100.0;
    results.push_back({{"label", std::string(to_string(label))}, {"confidence", conf}});
  }
  return json{{"results", results}};
}

json synth_embeddings(const json& request) {
  constexpr std::size_t kDim = 16;
  const auto& input = request.at("input");
  std::vector<std::string> texts;
  if (input.is_string()) {
    texts.push_back(input.get<std::string>());
  } else {
    for (const auto& s : input) texts.push_back(s.get<std::string>());
  }
  json data = json::array();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    // Hashed bag of lowercase words plus a bias term: similar texts land close.
    std::vector<double> v(kDim, 0.0);
    v[0] = 1.0;
    std::string word;
    auto flush = [&] {
      if (!word.empty()) v[1 + text::fnv1a(word) % (kDim - 1)] += 1.0;
      word.clear();
    };
    for (char c : texts[i]) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else {
        flush();
      }
    }
    flush();
    data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", v}});
  }
  return json{{"object", "list"}, {"data", data}};
}

// ---------------------------------------------------------------------------
// Server

struct MockServer::Impl {
  Script script;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string host;

  mutable std::mutex mutex;  // guards log and cursors
  std::vector<LoggedRequest> log;
  std::map<std::string, std::size_t> cursor;

  std::atomic<std::size_t> in_flight{0};
  std::atomic<std::size_t> max_in_flight{0};

  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopped = false;

  void handle(const httplib::Request& req, httplib::Response& res) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t now = ++in_flight;
    for (std::size_t prev = max_in_flight.load(); now > prev && !max_in_flight.compare_exchange_weak(prev, now);) {
    }

    std::size_t seq = 0;
    std::optional<CannedResponse> canned;
    {
      std::lock_guard lock(mutex);
      seq = log.size();
      log.push_back(LoggedRequest{seq, req.path, req.body, req.has_header("Authorization"), 0, started, started});
      if (auto it = script.endpoints.find(req.path); it != script.endpoints.end()) {
        auto& pos = cursor[req.path];
        if (pos < it->second.sequence.size()) {
          canned = it->second.sequence[pos++];
        } else if (it->second.fallback) {
          canned = it->second.fallback;
        }
      }
    }

    int delay = script.delay_ms + (canned ? canned->delay_ms : 0);
    if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));

    int status = 200;
    std::string body;
    if (canned) {
      status = canned->status;
      body = body_text(canned->body);
    } else if (!script.synthetic) {
      status = 404;
      body = json{{"error", "no scripted response for " + req.path}}.dump();
    } else {
      try {
        const json request = json::parse(req.body);
        if (req.path == kChatPath) {
          body = synth_chat(request, script).dump();
        } else if (req.path == kScorePath) {
          body = synth_score(request, script).dump();
        } else if (req.path == kClassifyPath) {
          body = synth_classify(request).dump();
        } else if (req.path == kEmbedPath) {
          body = synth_embeddings(request).dump();
        } else {
          status = 404;
          body = json{{"error", "unknown endpoint " + req.path}}.dump();
        }
      } catch (const std::exception& e) {
        status = 400;
        body = json{{"error", e.what()}}.dump();
      }
    }
    res.status = status;
    res.set_content(body, "application/json");

    {
      std::lock_guard lock(mutex);
      log[seq].status = status;
      log[seq].finished = std::chrono::steady_clock::now();
    }
    --in_flight;
  }
};

MockServer::MockServer(Script script) : impl_(std::make_unique<Impl>()) {
  script.validate();
  impl_->script = std::move(script);
}

MockServer::~MockServer() { stop(); }

void MockServer::start(int port, const std::string& host) {
  auto& im = *impl_;
  if (im.thread.joinable()) throw Error("mock server already running");
  im.server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  // httplib's defaults include SO_REUSEPORT, which would let a second server
  // share a busy port and split its traffic. Keep only SO_REUSEADDR.
  im.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  im.server.Post(R"(/.*)", [&im](const httplib::Request& req, httplib::Response& res) { im.handle(req, res); });
  if (port == 0) {
    im.port = im.server.bind_to_any_port(host);
    if (im.port < 0) throw Error("mock server: cannot bind " + host);
  } else {
    if (!im.server.bind_to_port(host, port)) throw Error("mock server: port " + std::to_string(port) + " unavailable");
    im.port = port;
  }
  im.host = host;
  im.stopped = false;
  im.thread = std::thread([&im] { im.server.listen_after_bind(); });
  im.server.wait_until_ready();
}

void MockServer::stop() {
  auto& im = *impl_;
  if (im.thread.joinable()) {
    im.server.stop();
    im.thread.join();
  }
  {
    std::lock_guard lock(im.stop_mutex);
    im.stopped = true;
  }
  im.stop_cv.notify_all();
}

void MockServer::wait() {
  auto& im = *impl_;
  std::unique_lock lock(im.stop_mutex);
  im.stop_cv.wait(lock, [&] { return im.stopped; });
}

int MockServer::port() const noexcept { return impl_->port; }

std::string MockServer::base_url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

std::vector<LoggedRequest> MockServer::request_log() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

std::size_t MockServer::request_count(std::string_view path) const {
  std::lock_guard lock(impl_->mutex);
  if (path.empty()) return impl_->log.size();
  std::size_t n = 0;
  for (const auto& r : impl_->log) n += r.path == path;
  return n;
}

std::size_t MockServer::max_in_flight() const noexcept { return impl_->max_in_flight.load(); }

}  // namespace ctst::mock
