#include "ctst/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctst/error.hpp"

namespace ctst::stats {

namespace {

void check_shapes(std::span<const double> x, std::span<const double> y, std::string_view who) {
  if (x.size() != y.size()) {
    throw InputError(std::string(who) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw InputError(std::string(who) + ": need at least two points");
}

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Sum of t(t-1)/2 over runs of equal values in a sorted range.
template <class It, class Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    It run_end = std::next(first);
    while (run_end != last && eq(*first, *run_end)) ++run_end;
    const auto t = static_cast<std::uint64_t>(std::distance(first, run_end));
    total += t * (t - 1) / 2;
    first = run_end;
  }
  return total;
}

// Bottom-up merge sort on v; returns the number of inversions (swaps).
std::uint64_t sort_counting_swaps(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> buf(n);
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo;
      std::size_t j = mid;
      std::size_t k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += mid - i;
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  check_shapes(x, y, "pearson");
  if (constant(x) || constant(y)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_shapes(x, y, "kendall_tau");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {x[i], y[i]};
  std::sort(pts.begin(), pts.end());

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t ties_x =
      tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::uint64_t ties_xy = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = pts[i].second;
  const std::uint64_t swaps = sort_counting_swaps(ys);
  const std::uint64_t ties_y = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (n0 == ties_x || n0 == ties_y) return std::nullopt;
  // concordant - discordant
  const double s = static_cast<double>(n0) - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                   static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x)) * std::sqrt(static_cast<double>(n0 - ties_y));
  return std::clamp(s / denom, -1.0, 1.0);
}

std::string_view to_string(CorrKind k) noexcept { return k == CorrKind::pearson ? "pearson" : "kendall"; }

std::optional<double> correlate(CorrKind kind, std::span<const double> x, std::span<const double> y) {
  return kind == CorrKind::pearson ? pearson(x, y) : kendall_tau(x, y);
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> sample_ids, std::vector<std::string> model_ids)
    : sample_ids_(std::move(sample_ids)), model_ids_(std::move(model_ids)) {
  const std::size_t cells = sample_ids_.size() * model_ids_.size();
  human_.assign(cells, 0.0);
  metric_.assign(cells, 0.0);
  mask_.assign(cells, 0);
}

void ScoreMatrix::set(std::size_t sample, std::size_t model, double human, double metric) {
  const std::size_t i = index(sample, model);
  human_.at(i) = human;
  metric_.at(i) = metric;
  mask_.at(i) = 1;
}

void ScoreMatrix::clear(std::size_t sample, std::size_t model) { mask_.at(index(sample, model)) = 0; }

CorrelationReport sample_level_corr(const ScoreMatrix& matrix, CorrKind kind) {
  if (matrix.models() < 2) throw InputError("sample-level correlation needs at least two models");
  CorrelationReport report;
  report.kind = kind;
  std::vector<double> h;
  std::vector<double> m;
  for (std::size_t s = 0; s < matrix.samples(); ++s) {
    h.clear();
    m.clear();
    for (std::size_t j = 0; j < matrix.models(); ++j) {
      if (!matrix.present(s, j)) continue;
      h.push_back(matrix.human(s, j));
      m.push_back(matrix.metric(s, j));
    }
    std::optional<double> rho;
    if (h.size() >= 2) rho = correlate(kind, h, m);
    if (rho) {
      report.per_sample.push_back(*rho);
    } else {
      ++report.samples_skipped_degenerate;
    }
  }
  report.samples_used = report.per_sample.size();
  if (!report.per_sample.empty()) {
    double sum = 0.0;
    for (double v : report.per_sample) sum += v;
    report.value = sum / static_cast<double>(report.per_sample.size());
  }
  return report;
}

CorrelationReport pool_reports(std::span<const CorrelationReport> reports, std::string scope) {
  CorrelationReport out;
  out.scope = std::move(scope);
  if (!reports.empty()) {
    out.metric = reports.front().metric;
    out.kind = reports.front().kind;
  }
  for (const auto& r : reports) {
    out.per_sample.insert(out.per_sample.end(), r.per_sample.begin(), r.per_sample.end());
    out.samples_skipped_degenerate += r.samples_skipped_degenerate;
  }
  out.samples_used = out.per_sample.size();
  if (!out.per_sample.empty()) {
    double sum = 0.0;
    for (double v : out.per_sample) sum += v;
    out.value = sum / static_cast<double>(out.per_sample.size());
  }
  return out;
}

}  // namespace ctst::stats
