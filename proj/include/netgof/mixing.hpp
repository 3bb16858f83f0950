#pragma once

// Block sums over a Delta-partition and an empirical beta-mixing estimate across replications.

#include "netgof/partition.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace netgof {

struct BlockSums {
  std::map<Cell, double> U;
  std::map<Cell, int> sizes;
  std::map<int, int> max_size;  // S_k

  double at(int k, int m) const {
    auto it = U.find(Cell{k, m});
    if (it == U.end()) throw ConfigError("no block (" + std::to_string(k) + "," + std::to_string(m) + ")");
    return it->second;
  }
};

/// U_{k,m} = sum over the block of (Z - centering). Missing centering entries count as 0.
inline BlockSums block_sums(const std::map<Pair, double>& Z, const PartitionAssignment& p,
                            const std::map<Pair, double>& centering = {}) {
  BlockSums out;
  for (const auto& [pair, cell] : p.assign) {
    auto z = Z.find(pair);
    if (z == Z.end()) throw ConfigError("Z undefined for covered pair " + to_string(pair));
    auto c = centering.find(pair);
    out.U[cell] += z->second - (c == centering.end() ? 0.0 : c->second);
    ++out.sizes[cell];
  }
  for (const auto& [cell, n] : out.sizes) out.max_size[cell.k] = std::max(out.max_size[cell.k], n);
  return out;
}

struct BetaEstimate {
  double beta = 0.0;
  int replications = 0;
  int bins = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Bin index = number of equiprobable quantile thresholds <= v.
inline std::vector<int> quantile_bins(const std::vector<double>& v, int bins) {
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> thresholds;
  for (int j = 1; j < bins; ++j) thresholds.push_back(sorted[std::min(n - 1, j * n / bins)]);
  std::vector<int> out(n);
  for (std::size_t r = 0; r < n; ++r)
    out[r] = static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), v[r]) - thresholds.begin());
  return out;
}

}  // namespace detail

/// beta-hat = 1/2 sum_{a,b} |P(past in S_a, U_{k,M} in S_b) - P(past in S_a) P(U_{k,M} in S_b)| with
/// past = sum_{m < M} U_{k,m} and equiprobable quantile bins. A lower bound of the population
/// coefficient: the finite partition and the scalar reduction both lose information.
inline BetaEstimate estimate_beta(std::span<const BlockSums> samples, int k, int M, int bins = 4) {
  if (samples.size() < 200) throw ConfigError("beta estimation needs at least 200 replications");
  if (bins < 2) throw ConfigError("beta estimation needs at least 2 bins");
  if (M < 2) throw ConfigError("beta estimation needs M >= 2");
  BetaEstimate out;
  out.replications = static_cast<int>(samples.size());
  out.bins = bins;
  std::vector<double> past, next;
  for (const auto& s : samples) {
    double acc = 0.0;
    for (int m = 1; m < M; ++m) acc += s.at(k, m);
    past.push_back(acc);
    next.push_back(s.at(k, M));
  }
  auto constant = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; }); };
  if (constant(past) || constant(next)) {
    out.warnings.push_back("constant block sums; beta set to 0");
    return out;
  }
  const auto a = detail::quantile_bins(past, bins);
  const auto b = detail::quantile_bins(next, bins);
  const double n = static_cast<double>(samples.size());
  Mat joint = Mat::Zero(bins, bins);
  for (std::size_t r = 0; r < samples.size(); ++r) joint(a[r], b[r]) += 1.0 / n;
  const Vec pa = joint.rowwise().sum();
  const Vec pb = joint.colwise().sum().transpose();
  out.beta = 0.5 * (joint - pa * pb.transpose()).cwiseAbs().sum();
  return out;
}

}  // namespace netgof
