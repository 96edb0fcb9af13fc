#include "ctst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ctst/csv.hpp"
#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/text.hpp"

namespace ctst {

using nlohmann::json;

std::string_view to_string(MetricKind m) noexcept {
  switch (m) {
    case MetricKind::acc_label_match: return "acc_label_match";
    case MetricKind::bleu: return "bleu";
    case MetricKind::embed_sim: return "embed_sim";
    case MetricKind::judge: return "judge";
    case MetricKind::nll_score: return "nll_score";
  }
  return "?";
}

MetricKind parse_metric(std::string_view s) {
  if (s == "acc_label_match" || s == "acc") return MetricKind::acc_label_match;
  if (s == "bleu") return MetricKind::bleu;
  if (s == "embed_sim" || s == "embed") return MetricKind::embed_sim;
  if (s == "judge") return MetricKind::judge;
  if (s == "nll_score" || s == "nll") return MetricKind::nll_score;
  throw InputError("unknown metric '" + std::string(s) + "'");
}

std::string_view display_name(MetricKind m) noexcept {
  switch (m) {
    case MetricKind::acc_label_match: return "ACC%";
    case MetricKind::bleu: return "BLEU";
    case MetricKind::embed_sim: return "Embed";
    case MetricKind::judge: return "Judge";
    case MetricKind::nll_score: return "NLL";
  }
  return "?";
}

std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::degenerate: return "degenerate";
    case RecordStatus::unscored: return "unscored";
  }
  return "?";
}

RecordStatus parse_record_status(std::string_view s) {
  if (s == "ok") return RecordStatus::ok;
  if (s == "degenerate") return RecordStatus::degenerate;
  if (s == "unscored") return RecordStatus::unscored;
  throw InputError("unknown record status '" + std::string(s) + "'");
}

void validate(const MetricRecord& r) {
  if (r.status != RecordStatus::ok) return;
  const double v = r.value;
  bool in_range = std::isfinite(v);
  switch (r.metric) {
    case MetricKind::acc_label_match: in_range = in_range && (v == 0.0 || v == 1.0); break;
    case MetricKind::bleu:
    case MetricKind::judge: in_range = in_range && v >= 0.0 && v <= 100.0; break;
    case MetricKind::embed_sim: in_range = in_range && v >= -100.0 && v <= 100.0; break;
    case MetricKind::nll_score: in_range = in_range && v > 0.0; break;
  }
  if (!in_range) {
    throw ContractViolation("metric record " + r.sample_id + "/" + r.model_id + "/" + std::string(to_string(r.metric)) +
                            " has out-of-range value " + std::to_string(v));
  }
}

json to_json(const MetricRecord& r) {
  json j{{"sample_id", r.sample_id},
         {"dataset_id", r.dataset_id},
         {"model_id", r.model_id},
         {"task", std::string(to_string(r.style.task()))},
         {"direction", std::string(to_string(r.style.direction()))},
         {"metric", std::string(to_string(r.metric))},
         {"status", std::string(to_string(r.status))},
         {"detail", r.detail}};
  if (r.status == RecordStatus::unscored) {
    j["value"] = nullptr;
  } else {
    j["value"] = r.value;
  }
  return j;
}

MetricRecord record_from_json(const json& j) {
  try {
    MetricRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.dataset_id = j.value("dataset_id", std::string());
    r.model_id = j.at("model_id").get<std::string>();
    r.style = StyleTask::make(parse_task(j.at("task").get<std::string>()),
                              parse_direction(j.at("direction").get<std::string>()));
    r.metric = parse_metric(j.at("metric").get<std::string>());
    r.status = parse_record_status(j.value("status", std::string("ok")));
    const auto& v = j.at("value");
    r.value = v.is_null() ? 0.0 : v.get<double>();
    if (v.is_null() && r.status == RecordStatus::ok) throw InputError("scored record without a value");
    if (j.contains("detail")) r.detail = j.at("detail");
    validate(r);
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed metric record: ") + e.what());
  }
}

void sort_records(std::vector<MetricRecord>& records) {
  auto key = [](const MetricRecord& r) {
    return std::tie(r.sample_id, r.model_id, r.style, r.metric);
  };
  std::stable_sort(records.begin(), records.end(),
                   [&](const MetricRecord& a, const MetricRecord& b) { return key(a) < key(b); });
}

std::string records_to_jsonl(std::span<const MetricRecord> records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  return io::to_jsonl(rows);
}

std::string records_to_csv(std::span<const MetricRecord> records) {
  std::string out = csv::format_row(
      {"sample_id", "dataset_id", "model_id", "task", "direction", "metric", "value", "status", "detail"});
  for (const auto& r : records) {
    out += csv::format_row({r.sample_id, r.dataset_id, r.model_id, std::string(to_string(r.style.task())),
                            std::string(to_string(r.style.direction())), std::string(to_string(r.metric)),
                            r.status == RecordStatus::unscored ? std::string() : json(r.value).dump(),
                            std::string(to_string(r.status)), r.detail.dump()});
  }
  return out;
}

std::vector<MetricRecord> read_records(const std::filesystem::path& path) {
  std::vector<MetricRecord> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(record_from_json(row));
  return out;
}

double style_accuracy(std::span<const LabelPair> labels) {
  if (labels.empty()) throw InputError("style_accuracy: empty label list");
  const Task task = task_of(labels.front().target);
  std::size_t matches = 0;
  for (const auto& l : labels) {
    if (task_of(l.target) != task || task_of(l.predicted) != task) {
      throw InputError("style_accuracy: labels from more than one task");
    }
    matches += l.predicted == l.target;
  }
  return 100.0 * static_cast<double>(matches) / static_cast<double>(labels.size());
}

double embedding_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("embedding_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DegenerateInput("embedding_similarity: empty vectors");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateInput("embedding_similarity: zero vector");
  const double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  return 100.0 * std::clamp(cosine, -1.0, 1.0);
}

std::string nll_combined_text(std::string_view query, std::string_view response) {
  std::string out;
  out.reserve(kSpeakerMarker.size() + query.size() + 1 + kResponseMarker.size() + response.size());
  out += kSpeakerMarker;
  out += query;
  out += ' ';
  out += kResponseMarker;
  out += response;
  return out;
}

std::size_t nll_response_start(std::string_view query) {
  return text::codepoint_length(kSpeakerMarker) + text::codepoint_length(query) + 1 +
         text::codepoint_length(kResponseMarker);
}

NllBreakdown nll_from_tokens(std::span<const TokenScore> tokens, std::size_t response_start) {
  NllBreakdown b;
  for (const auto& t : tokens) {
    if (t.sentinel) continue;
    b.total_nll -= t.logprob;
    if (t.start >= response_start) {
      b.response_nll -= t.logprob;
      ++b.response_token_count;
    }
  }
  if (b.response_token_count == 0) throw DegenerateInput("NLL: no scored tokens inside the response span");
  b.mean_nll = b.response_nll / static_cast<double>(b.response_token_count);
  if (b.mean_nll < kMinMeanNll) {
    b.degenerate = true;
    b.score = kMaxNllScore;
  } else {
    b.score = 100.0 / b.mean_nll;
  }
  return b;
}

NllBreakdown nll_appropriateness(std::string_view query, std::string_view response, const LogprobScorer& scorer) {
  if (text::trim(response).empty()) throw InputError("NLL: empty response");
  const std::string combined = nll_combined_text(query, response);
  const auto tokens = scorer(combined);
  validate_token_partition(combined, tokens);
  return nll_from_tokens(tokens, nll_response_start(query));
}

}  // namespace ctst
