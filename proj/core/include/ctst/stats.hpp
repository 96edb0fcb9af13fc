#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctst::stats {

// Product-moment correlation. nullopt when either vector is constant.
// Throws InputError on length mismatch or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Kendall tau-b (tie-corrected), O(n log n) via Knight's merge-sort count.
// nullopt when either vector is entirely tied.
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

enum class CorrKind { pearson, kendall };

std::string_view to_string(CorrKind k) noexcept;
std::optional<double> correlate(CorrKind kind, std::span<const double> x, std::span<const double> y);

// n samples x m models, row-major. A cell participates only when present.
class ScoreMatrix {
 public:
  ScoreMatrix(std::vector<std::string> sample_ids, std::vector<std::string> model_ids);

  std::size_t samples() const noexcept { return sample_ids_.size(); }
  std::size_t models() const noexcept { return model_ids_.size(); }
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }

  void set(std::size_t sample, std::size_t model, double human, double metric);
  void clear(std::size_t sample, std::size_t model);

  bool present(std::size_t sample, std::size_t model) const { return mask_.at(index(sample, model)) != 0; }
  double human(std::size_t sample, std::size_t model) const { return human_.at(index(sample, model)); }
  double metric(std::size_t sample, std::size_t model) const { return metric_.at(index(sample, model)); }

 private:
  std::size_t index(std::size_t s, std::size_t m) const { return s * model_ids_.size() + m; }

  std::vector<std::string> sample_ids_;
  std::vector<std::string> model_ids_;
  std::vector<double> human_;
  std::vector<double> metric_;
  std::vector<unsigned char> mask_;
};

struct CorrelationReport {
  std::string scope;   // direction name or "overall"
  std::string metric;
  CorrKind kind = CorrKind::pearson;
  std::optional<double> value;
  std::size_t samples_used = 0;
  std::size_t samples_skipped_degenerate = 0;
  std::vector<double> per_sample;  // defined per-sample values, in sample order
};

// Mean over samples of rho(human row, metric row), using only present cells.
// Rows with fewer than two present cells or an undefined rho are skipped and
// counted. Throws InputError if the matrix has fewer than two models.
CorrelationReport sample_level_corr(const ScoreMatrix& matrix, CorrKind kind);

// Pools per-sample values across reports (the "overall" column).
CorrelationReport pool_reports(std::span<const CorrelationReport> reports, std::string scope = "overall");

}  // namespace ctst::stats
