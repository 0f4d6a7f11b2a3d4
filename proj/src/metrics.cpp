#include "drasp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace drasp {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
  if (x.size() < min_len) throw std::invalid_argument("need at least " + std::to_string(min_len) + " values");
}

// Number of inversions of v, sorting it in place.
std::int64_t count_swaps(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_swaps(v, scratch, lo, mid) + count_swaps(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum over runs of equal values of t(t-1)/2; `sorted` must be sorted.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run * (run - 1) / 2);
      run = 1;
    }
  }
  return total;
}

}  // namespace

std::map<std::string, double> system_aggregate(const std::vector<std::pair<std::string, double>>& clip_scores) {
  if (clip_scores.empty()) throw std::invalid_argument("empty input");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [system, score] : clip_scores) {
    auto& [total, count] = acc[system];
    total += score;
    ++count;
  }
  std::map<std::string, double> out;
  for (const auto& [system, tc] : acc) out.emplace(system, tc.first / static_cast<double>(tc.second));
  return out;
}

double mse(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 1);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - y[i]) * (x[i] - y[i]);
  return total / static_cast<double>(x.size());
}

double lcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("degenerate input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return lcc(rx, ry);
}

double ktau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
  const std::int64_t n1 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  // Pairs tied in both x and y.
  const std::int64_t n3 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> scratch(n);
  const std::int64_t swaps = count_swaps(ys, scratch, 0, n);
  const std::int64_t n2 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const std::int64_t denom_x = n0 - n1;
  const std::int64_t denom_y = n0 - n2;
  if (denom_x == 0 || denom_y == 0) throw std::invalid_argument("degenerate input");
  const std::int64_t numerator = n0 - n1 - n2 + n3 - 2 * swaps;  // concordant - discordant
  return static_cast<double>(numerator) / std::sqrt(static_cast<double>(denom_x) * static_cast<double>(denom_y));
}

SystemMetrics system_metrics(const std::map<std::string, double>& predicted, const std::map<std::string, double>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction and truth cover different systems");
  std::vector<double> p, t;
  for (const auto& [system, value] : truth) {
    auto it = predicted.find(system);
    if (it == predicted.end()) throw std::invalid_argument("no prediction for system " + system);
    p.push_back(it->second);
    t.push_back(value);
  }
  return {mse(p, t), lcc(p, t), srcc(p, t), ktau(p, t)};
}

}  // namespace drasp
