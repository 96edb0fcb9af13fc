#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctst/metrics.hpp"
#include "ctst/stats.hpp"
#include "ctst/style.hpp"

namespace ctst::report {

struct Cell {
  std::optional<double> mean;  // absent when nothing was scored
  std::size_t scored = 0;
  std::size_t total = 0;
};

struct LeaderboardRow {
  std::string dataset_id;  // empty when datasets are merged
  std::string model_id;
  std::map<std::pair<Direction, MetricKind>, Cell> cells;
  // Per metric, over every direction: scored / total.
  std::map<MetricKind, double> coverage;
};

struct GroupingConfig {
  std::vector<Direction> directions{kAllDirections.begin(), kAllDirections.end()};
  std::vector<MetricKind> metrics{MetricKind::acc_label_match, MetricKind::judge, MetricKind::nll_score};
  bool split_by_dataset = true;
  // Empty: rows ordered by (dataset, model_id). Otherwise by this cell, descending.
  std::optional<std::pair<Direction, MetricKind>> sort_by;
};

// One row per (dataset, model). Cell means sum values in sorted order so the
// result does not depend on record order. acc_label_match means are scaled
// to percent.
std::vector<LeaderboardRow> build_leaderboard(std::span<const MetricRecord> records, const GroupingConfig& config);

enum class Format { csv, markdown, json };

Format parse_format(std::string_view s);
std::string_view extension(Format f) noexcept;

// Key/value lines embedded as a footer (Markdown, CSV) or "metadata" (JSON).
using Metadata = std::map<std::string, std::string>;

// Byte-deterministic. Markdown and CSV use one decimal; JSON keeps full
// precision. Markdown bolds the best value per column within a dataset.
std::string emit(std::span<const LeaderboardRow> rows, const GroupingConfig& config, Format format,
                 const Metadata& metadata);

// --- correlation tables ---------------------------------------------------

struct CorrelationTable {
  std::vector<std::string> scopes;  // column order, e.g. formal, informal, positive, negative, overall
  std::vector<stats::CorrelationReport> reports;
};

// Markdown: Method | Metric | <scopes...>, values x100 with one decimal.
std::string correlation_markdown(const CorrelationTable& table);
// CSV: one row per report with raw values and sample counts.
std::string correlation_csv(const CorrelationTable& table);

}  // namespace ctst::report
