#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctst/backends.hpp"
#include "ctst/corpus.hpp"
#include "ctst/metrics.hpp"
#include "ctst/report.hpp"
#include "ctst/style.hpp"

namespace ctst::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInput = 2;

enum class SourceFormat { daily_dialog, bst, store };

struct DatasetConfig {
  corpus::DatasetId id = corpus::DatasetId::daily_dialog;
  std::filesystem::path path;
  SourceFormat format = SourceFormat::daily_dialog;
  std::string delimiter = "__eou__";
  std::string id_prefix;  // empty: dataset default
};

struct ModelConfig {
  std::string id;  // row label in every output
  BackendProfile profile;
};

struct TemplatePaths {
  std::optional<std::filesystem::path> generation;
  std::optional<std::filesystem::path> exemplar;
  std::optional<std::filesystem::path> judge;
};

// Everything a run needs. Relative paths in the file resolve against the
// directory holding the config file.
struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::size_t slice_size = 1000;
  std::size_t few_shot = corpus::kDefaultFewShot;
  std::vector<Direction> directions{kAllDirections.begin(), kAllDirections.end()};
  std::vector<ModelConfig> models;
  std::optional<BackendProfile> judge;
  std::optional<BackendProfile> scorer;
  std::optional<BackendProfile> classifier;
  std::optional<BackendProfile> embedding;
  std::vector<MetricKind> metrics{MetricKind::acc_label_match, MetricKind::judge, MetricKind::nll_score};
  TemplatePaths templates;
  std::filesystem::path cache_dir = ".ctst-cache";
  bool use_cache = true;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> human_csv;
  std::vector<report::Format> formats{report::Format::markdown, report::Format::csv, report::Format::json};

  // Throws InputError naming the offending field or path.
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

// Parses "formal,informal" / "all".
std::vector<Direction> parse_direction_list(const std::string& csv);
// Parses "acc,nll" / "all".
std::vector<MetricKind> parse_metric_list(const std::string& csv);
// Parses "markdown,csv" / "all".
std::vector<report::Format> parse_format_list(const std::string& csv);

// File names inside output_dir.
namespace files {
inline constexpr const char* kSamples = "samples.jsonl";
inline constexpr const char* kExemplars = "exemplars.jsonl";
inline constexpr const char* kResponses = "responses.jsonl";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kScoresCsv = "scores.csv";
inline constexpr const char* kScoresMeta = "scores.meta.json";
inline constexpr const char* kCorrelationCsv = "correlation.csv";
inline constexpr const char* kCorrelationMd = "correlation.md";
inline constexpr const char* kLeaderboard = "leaderboard";  // + "." + extension
}  // namespace files

// One generated response.
struct StyledResponse {
  std::string sample_id;
  std::string dataset_id;
  std::string model_id;
  StyleTask style = StyleTask::of(Direction::formal);
  std::string response;

  friend bool operator==(const StyledResponse&, const StyledResponse&) = default;
};

nlohmann::json to_json(const StyledResponse& r);
StyledResponse response_from_json(const nlohmann::json& j);
std::vector<StyledResponse> read_responses(const std::filesystem::path& path);

// Human annotations, averaged over annotators per (sample, model, direction, dimension).
enum class Dimension { appropriateness, style_strength };

struct HumanScore {
  std::string sample_id;
  std::string model_id;
  Direction direction = Direction::formal;
  Dimension dimension = Dimension::appropriateness;
  double score = 0.0;
};

std::vector<HumanScore> read_human_csv(const std::filesystem::path& path);

// Human dimension a metric is compared against.
Dimension dimension_for(MetricKind m) noexcept;

// Every stage writes its artifacts into output_dir, prints a short summary to
// `log`, and returns one of the kExit* codes. Input/config errors are caught
// and reported as kExitInput; failed backend calls leave partial artifacts in
// place and yield kExitPartial.
int cmd_ingest(const RunConfig& config, std::ostream& log);
int cmd_generate(const RunConfig& config, std::ostream& log);
int cmd_score(const RunConfig& config, std::ostream& log);
int cmd_correlate(const RunConfig& config, std::ostream& log);
int cmd_report(const RunConfig& config, std::ostream& log);
// ingest -> generate -> score -> [correlate when human_csv is set] -> report.
int cmd_run(const RunConfig& config, std::ostream& log);

}  // namespace ctst::pipeline
