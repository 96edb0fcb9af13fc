#include "ctst/report.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ctst/csv.hpp"
#include "ctst/error.hpp"
#include "ctst/text.hpp"

namespace ctst::report {

using nlohmann::json;

namespace {

double scale(MetricKind m, double v) { return m == MetricKind::acc_label_match ? 100.0 * v : v; }

std::string column_label(Direction d, MetricKind m) {
  return std::string(style_word(d)) + " " + std::string(display_name(m));
}

std::string coverage_label(MetricKind m) { return std::string(display_name(m)) + " cov%"; }

}  // namespace

std::vector<LeaderboardRow> build_leaderboard(std::span<const MetricRecord> records, const GroupingConfig& config) {
  if (records.empty()) throw InputError("leaderboard: no metric records");

  using RowKey = std::pair<std::string, std::string>;
  std::map<RowKey, std::map<std::pair<Direction, MetricKind>, std::vector<double>>> values;
  std::map<RowKey, std::map<std::pair<Direction, MetricKind>, std::size_t>> totals;
  std::set<RowKey> keys;

  for (const auto& r : records) {
    RowKey key{config.split_by_dataset ? r.dataset_id : std::string(), r.model_id};
    keys.insert(key);
    const auto cell = std::make_pair(r.style.direction(), r.metric);
    ++totals[key][cell];
    if (r.status == RecordStatus::ok) values[key][cell].push_back(r.value);
  }

  std::vector<LeaderboardRow> rows;
  for (const auto& key : keys) {
    LeaderboardRow row;
    row.dataset_id = key.first;
    row.model_id = key.second;
    for (MetricKind m : config.metrics) {
      std::size_t scored_all = 0;
      std::size_t total_all = 0;
      for (Direction d : config.directions) {
        Cell c;
        const auto ck = std::make_pair(d, m);
        if (auto t = totals[key].find(ck); t != totals[key].end()) c.total = t->second;
        if (auto v = values[key].find(ck); v != values[key].end() && !v->second.empty()) {
          auto sorted = v->second;
          std::sort(sorted.begin(), sorted.end());
          double sum = 0.0;
          for (double x : sorted) sum += x;
          c.scored = sorted.size();
          c.mean = scale(m, sum / static_cast<double>(sorted.size()));
        }
        scored_all += c.scored;
        total_all += c.total;
        row.cells[ck] = c;
      }
      row.coverage[m] = total_all == 0 ? 0.0 : static_cast<double>(scored_all) / static_cast<double>(total_all);
    }
    rows.push_back(std::move(row));
  }

  if (config.sort_by) {
    const auto ck = *config.sort_by;
    std::stable_sort(rows.begin(), rows.end(), [&](const LeaderboardRow& a, const LeaderboardRow& b) {
      if (a.dataset_id != b.dataset_id) return a.dataset_id < b.dataset_id;
      const auto& ca = a.cells.at(ck).mean;
      const auto& cb = b.cells.at(ck).mean;
      if (ca.has_value() != cb.has_value()) return ca.has_value();
      if (ca && *ca != *cb) return *ca > *cb;
      return a.model_id < b.model_id;
    });
  }
  return rows;
}

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "json") return Format::json;
  throw InputError("unknown report format '" + std::string(s) + "'");
}

std::string_view extension(Format f) noexcept {
  switch (f) {
    case Format::csv: return "csv";
    case Format::markdown: return "md";
    case Format::json: return "json";
  }
  return "txt";
}

namespace {

std::string emit_csv(std::span<const LeaderboardRow> rows, const GroupingConfig& config, const Metadata& metadata) {
  csv::Row header{"dataset", "model"};
  for (Direction d : config.directions) {
    for (MetricKind m : config.metrics) header.push_back(column_label(d, m));
  }
  for (MetricKind m : config.metrics) header.push_back(coverage_label(m));
  std::string out = csv::format_row(header);
  for (const auto& row : rows) {
    csv::Row r{row.dataset_id, row.model_id};
    for (Direction d : config.directions) {
      for (MetricKind m : config.metrics) {
        const auto& c = row.cells.at({d, m});
        r.push_back(c.mean ? text::format_fixed(*c.mean, 1) : std::string());
      }
    }
    for (MetricKind m : config.metrics) r.push_back(text::format_fixed(100.0 * row.coverage.at(m), 1));
    out += csv::format_row(r);
  }
  out += "\r\n";
  for (const auto& [k, v] : metadata) out += csv::format_row({"# " + k, v});
  return out;
}

std::string emit_markdown(std::span<const LeaderboardRow> rows, const GroupingConfig& config,
                          const Metadata& metadata) {
  // Best value per (dataset, column).
  std::map<std::pair<std::string, std::pair<Direction, MetricKind>>, double> best;
  for (const auto& row : rows) {
    for (const auto& [ck, c] : row.cells) {
      if (!c.mean) continue;
      auto key = std::make_pair(row.dataset_id, ck);
      auto it = best.find(key);
      if (it == best.end() || *c.mean > it->second) best[key] = *c.mean;
    }
  }

  std::string out = "| Dataset | Model |";
  std::string rule = "|---|---|";
  for (Direction d : config.directions) {
    for (MetricKind m : config.metrics) {
      out += " " + column_label(d, m) + " |";
      rule += "---:|";
    }
  }
  for (MetricKind m : config.metrics) {
    out += " " + coverage_label(m) + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";

  for (const auto& row : rows) {
    out += "| " + (row.dataset_id.empty() ? std::string("all") : row.dataset_id) + " | " + row.model_id + " |";
    for (Direction d : config.directions) {
      for (MetricKind m : config.metrics) {
        const auto& c = row.cells.at({d, m});
        if (!c.mean) {
          out += " - |";
          continue;
        }
        const std::string v = text::format_fixed(*c.mean, 1);
        const bool is_best = text::format_fixed(best.at({row.dataset_id, {d, m}}), 1) == v && rows.size() > 1;
        out += " " + (is_best ? "**" + v + "**" : v) + " |";
      }
    }
    for (MetricKind m : config.metrics) out += " " + text::format_fixed(100.0 * row.coverage.at(m), 1) + " |";
    out += "\n";
  }
  if (!metadata.empty()) {
    out += "\n";
    for (const auto& [k, v] : metadata) out += "- " + k + ": `" + v + "`\n";
  }
  return out;
}

std::string emit_json(std::span<const LeaderboardRow> rows, const GroupingConfig& config, const Metadata& metadata) {
  json doc;
  doc["metadata"] = json::object();
  for (const auto& [k, v] : metadata) doc["metadata"][k] = v;
  json cols = json::array();
  for (Direction d : config.directions) {
    for (MetricKind m : config.metrics) {
      cols.push_back({{"direction", std::string(to_string(d))}, {"metric", std::string(to_string(m))}});
    }
  }
  doc["columns"] = cols;
  json out_rows = json::array();
  for (const auto& row : rows) {
    json r{{"dataset_id", row.dataset_id}, {"model_id", row.model_id}};
    json cells = json::object();
    for (Direction d : config.directions) {
      for (MetricKind m : config.metrics) {
        const auto& c = row.cells.at({d, m});
        cells[std::string(to_string(d))][std::string(to_string(m))] = {
            {"mean", c.mean ? json(*c.mean) : json(nullptr)},
            {"scored", c.scored},
            {"total", c.total},
            {"coverage", c.total == 0 ? 0.0 : static_cast<double>(c.scored) / static_cast<double>(c.total)}};
      }
    }
    r["cells"] = cells;
    json cov = json::object();
    for (MetricKind m : config.metrics) cov[std::string(to_string(m))] = row.coverage.at(m);
    r["coverage"] = cov;
    out_rows.push_back(std::move(r));
  }
  doc["rows"] = out_rows;
  return doc.dump(2) + "\n";
}

}  // namespace

std::string emit(std::span<const LeaderboardRow> rows, const GroupingConfig& config, Format format,
                 const Metadata& metadata) {
  if (rows.empty()) throw InputError("emit: no leaderboard rows");
  switch (format) {
    case Format::csv: return emit_csv(rows, config, metadata);
    case Format::markdown: return emit_markdown(rows, config, metadata);
    case Format::json: return emit_json(rows, config, metadata);
  }
  throw InputError("emit: unknown format");
}

std::string correlation_markdown(const CorrelationTable& table) {
  std::string out = "| Method | Metric |";
  std::string rule = "|---|---|";
  for (const auto& s : table.scopes) {
    std::string label = s;
    if (!label.empty()) label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    out += " " + label + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";

  std::vector<std::pair<stats::CorrKind, std::string>> row_keys;
  for (const auto& r : table.reports) {
    auto key = std::make_pair(r.kind, r.metric);
    if (std::find(row_keys.begin(), row_keys.end(), key) == row_keys.end()) row_keys.push_back(key);
  }
  for (const auto& [kind, metric] : row_keys) {
    out += std::string("| ") + (kind == stats::CorrKind::pearson ? "Pearson" : "Kendall's Tau") + " | " + metric + " |";
    for (const auto& scope : table.scopes) {
      auto it = std::find_if(table.reports.begin(), table.reports.end(), [&](const stats::CorrelationReport& r) {
        return r.kind == kind && r.metric == metric && r.scope == scope;
      });
      if (it == table.reports.end() || !it->value) {
        out += " - |";
      } else {
        out += " " + text::format_fixed(100.0 * *it->value, 1) + " |";
      }
    }
    out += "\n";
  }
  return out;
}

std::string correlation_csv(const CorrelationTable& table) {
  std::string out =
      csv::format_row({"method", "metric", "scope", "value", "samples_used", "samples_skipped_degenerate"});
  for (const auto& r : table.reports) {
    out += csv::format_row({std::string(stats::to_string(r.kind)), r.metric, r.scope,
                            r.value ? json(*r.value).dump() : std::string(), std::to_string(r.samples_used),
                            std::to_string(r.samples_skipped_degenerate)});
  }
  return out;
}

}  // namespace ctst::report
