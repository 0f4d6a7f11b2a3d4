#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace drasp {

/// Mean score per system id.
std::map<std::string, double> system_aggregate(const std::vector<std::pair<std::string, double>>& clip_scores);

double mse(std::span<const double> x, std::span<const double> y);

/// Pearson correlation. Throws "degenerate input" when either side has zero variance.
double lcc(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman correlation: Pearson correlation of average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b, (n_c - n_d) / sqrt((n0 - n1)(n0 - n2)), counted in
/// O(n log n) by sorting and merge-sort inversion counting.
double ktau(std::span<const double> x, std::span<const double> y);

struct SystemMetrics {
  double mse = 0.0;
  double lcc = 0.0;
  double srcc = 0.0;
  double ktau = 0.0;
};

struct MetricReport {
  std::map<std::string, SystemMetrics> heads;
  std::size_t system_count = 0;
};

/// Metrics between per-system predictions and per-system truth over the
/// systems present in both maps (which must coincide).
SystemMetrics system_metrics(const std::map<std::string, double>& predicted, const std::map<std::string, double>& truth);

}  // namespace drasp
