#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctst/backends.hpp"
#include "ctst/style.hpp"

namespace ctst {

enum class MetricKind { acc_label_match, bleu, embed_sim, judge, nll_score };

inline constexpr std::array<MetricKind, 5> kAllMetrics = {MetricKind::acc_label_match, MetricKind::bleu,
                                                          MetricKind::embed_sim, MetricKind::judge,
                                                          MetricKind::nll_score};

std::string_view to_string(MetricKind m) noexcept;
// Accepts the canonical name or a short alias: acc, bleu, embed, judge, nll.
MetricKind parse_metric(std::string_view s);
// Column label used in tables: "ACC%", "BLEU", "Embed", "Judge", "NLL".
std::string_view display_name(MetricKind m) noexcept;

// ok: counts toward means. degenerate / unscored: excluded from means,
// reduce coverage.
enum class RecordStatus { ok, degenerate, unscored };

std::string_view to_string(RecordStatus s) noexcept;
RecordStatus parse_record_status(std::string_view s);

struct MetricRecord {
  std::string sample_id;
  std::string dataset_id;
  std::string model_id;
  StyleTask style = StyleTask::of(Direction::formal);
  MetricKind metric = MetricKind::bleu;
  double value = 0.0;
  RecordStatus status = RecordStatus::ok;
  nlohmann::json detail = nlohmann::json::object();
};

// Checks the per-metric value range for scored records.
void validate(const MetricRecord& r);

nlohmann::json to_json(const MetricRecord& r);
MetricRecord record_from_json(const nlohmann::json& j);

// Canonical order: (sample_id, model_id, task, direction, metric).
void sort_records(std::vector<MetricRecord>& records);
std::string records_to_jsonl(std::span<const MetricRecord> records);
std::string records_to_csv(std::span<const MetricRecord> records);
std::vector<MetricRecord> read_records(const std::filesystem::path& path);

// --- style strength -------------------------------------------------------

struct LabelPair {
  Direction predicted;
  Direction target;
};

// 100 * matches / total. All labels must belong to one task.
double style_accuracy(std::span<const LabelPair> labels);

// --- embedding similarity ---------------------------------------------------

// 100 * cosine(a, b). Throws DegenerateInput for a zero vector.
double embedding_similarity(std::span<const double> a, std::span<const double> b);

// --- NLL appropriateness ----------------------------------------------------

inline constexpr std::string_view kSpeakerMarker = "###Speaker: ";
inline constexpr std::string_view kResponseMarker = "###Response: ";
inline constexpr double kMinMeanNll = 1e-6;
inline constexpr double kMaxNllScore = 1e8;

struct NllBreakdown {
  double total_nll = 0.0;     // all non-sentinel tokens
  double response_nll = 0.0;  // tokens starting inside the response span
  std::size_t response_token_count = 0;
  double mean_nll = 0.0;
  double score = 0.0;         // 100 / mean_nll
  bool degenerate = false;    // mean_nll < kMinMeanNll; score capped at kMaxNllScore
};

// "###Speaker: {query} ###Response: {response}"
std::string nll_combined_text(std::string_view query, std::string_view response);
// Code-point offset of the first response character in the combined text.
std::size_t nll_response_start(std::string_view query);

// A token belongs to the response iff start >= response_start. Sentinel
// tokens never contribute.
NllBreakdown nll_from_tokens(std::span<const TokenScore> tokens, std::size_t response_start);

using LogprobScorer = std::function<std::vector<TokenScore>(const std::string&)>;

NllBreakdown nll_appropriateness(std::string_view query, std::string_view response, const LogprobScorer& scorer);

}  // namespace ctst
