#pragma once

// Threshold-adoption model on a stochastic block network: a connected pair adopts (single jump of N
// from 0 to 1) once its perception plus the delayed, accumulated adoption time of neighboring pairs
// exceeds a threshold.

#include "netgof/network.hpp"
#include "netgof/process.hpp"
#include "netgof/random.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

namespace netgof {

struct BlockModel {
  std::vector<double> membership;  // group probabilities, sums to 1
  Mat Q;                           // connection probabilities between groups

  int groups() const { return static_cast<int>(membership.size()); }
};

struct AdoptionParams {
  double alpha0 = 0.1;
  double theta0 = 0.5;
  double delay = 1.0;  // default delta_0 for every neighboring pair of pairs
  /// Optional heterogeneous delays keyed by (influenced pair, influencing pair); looked up in both orders.
  std::optional<std::map<std::pair<Pair, Pair>, double>> delay_table;
  /// Optional fixed perceptions; pairs not listed draw U ~ Uniform[0, 1).
  std::map<Pair, double> perception;
};

struct AdoptionResult {
  DynamicNetwork network;
  EventLog log;
  std::vector<int> group;
  std::map<Pair, double> perception;
  std::map<Pair, double> adoption_time;  // only pairs that adopted within [0, T]
};

namespace detail {

inline double lookup_delay(const AdoptionParams& prm, Pair target, Pair source) {
  if (!prm.delay_table) return prm.delay;
  const auto& tab = *prm.delay_table;
  if (auto it = tab.find({target, source}); it != tab.end()) return it->second;
  if (auto it = tab.find({source, target}); it != tab.end()) return it->second;
  throw ConfigError("missing delay between " + to_string(target) + " and " + to_string(source));
}

}  // namespace detail

/// Event-driven propagation on a fixed static network: each adoption schedules the start of its
/// influence on neighboring pairs after their delays; between events every pair's score is linear.
inline AdoptionResult simulate_adoption_on(const DynamicNetwork& net, const AdoptionParams& prm, std::uint64_t seed) {
  if (prm.alpha0 < 0.0) throw ConfigError("alpha0 must be nonnegative");
  const double T = net.horizon();
  std::vector<Pair> pairs;
  for (const auto& [p, list] : net.activity()) pairs.push_back(p);
  const int m = static_cast<int>(pairs.size());
  std::map<Pair, int> index;
  for (int k = 0; k < m; ++k) index.emplace(pairs[k], k);

  std::map<int, std::vector<int>> incident;
  for (int k = 0; k < m; ++k) {
    incident[pairs[k].i].push_back(k);
    incident[pairs[k].j].push_back(k);
  }
  std::vector<std::vector<int>> nbrs(m);
  std::vector<std::vector<double>> delays(m);  // delays[target][k] for source nbrs[target][k]
  for (int k = 0; k < m; ++k) {
    for (int v : {pairs[k].i, pairs[k].j})
      for (int f : incident[v])
        if (f != k) nbrs[k].push_back(f);
    std::sort(nbrs[k].begin(), nbrs[k].end());
    nbrs[k].erase(std::unique(nbrs[k].begin(), nbrs[k].end()), nbrs[k].end());
    for (int f : nbrs[k]) {
      const double d = detail::lookup_delay(prm, pairs[k], pairs[f]);
      if (!(d > 0.0)) throw ConfigError("delays must be positive");
      delays[k].push_back(d);
    }
  }

  AdoptionResult res{net, EventLog(T), {}, {}, {}};
  std::vector<double> value(m), slope(m, 0.0), last(m, 0.0);
  std::vector<int> version(m, 0);
  std::vector<char> adopted(m, 0);
  for (int k = 0; k < m; ++k) {
    auto it = prm.perception.find(pairs[k]);
    if (it != prm.perception.end()) {
      value[k] = it->second;
    } else {
      auto rng = pair_stream(seed, kTagAdoptionPerception, pairs[k]);
      value[k] = uniform01(rng);
    }
    res.perception[pairs[k]] = value[k];
  }

  // (time, kind, pair index, version); kind 0 = crossing, 1 = influence start.
  using Item = std::tuple<double, int, int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (int k = 0; k < m; ++k)
    if (value[k] > prm.theta0) queue.emplace(0.0, 0, k, version[k]);

  while (!queue.empty()) {
    const auto [t, kind, k, ver] = queue.top();
    queue.pop();
    if (adopted[k]) continue;
    if (kind == 0) {
      if (ver != version[k]) continue;
      adopted[k] = 1;
      res.adoption_time[pairs[k]] = t;
      for (std::size_t a = 0; a < nbrs[k].size(); ++a) {
        const int f = nbrs[k][a];
        if (adopted[f]) continue;
        // influence of k on f starts after delta_{f,k}
        const auto& fn = nbrs[f];
        const auto pos = std::lower_bound(fn.begin(), fn.end(), k) - fn.begin();
        const double start = t + delays[f][pos];
        if (start <= T) queue.emplace(start, 1, f, 0);
      }
    } else {
      value[k] += slope[k] * (t - last[k]);
      last[k] = t;
      slope[k] += prm.alpha0;
      if (slope[k] > 0.0) {
        const double cross = t + std::max(0.0, (prm.theta0 - value[k]) / slope[k]);
        ++version[k];
        if (cross <= T) queue.emplace(cross, 0, k, version[k]);
      }
    }
  }

  std::map<Pair, std::vector<double>> ev;
  for (const auto& [p, t] : res.adoption_time) ev[p].push_back(t);
  res.log = EventLog(T, std::move(ev));
  return res;
}

/// Draws the static network from the block model, then runs the propagation.
inline AdoptionResult simulate_adoption(int n, const BlockModel& model, const AdoptionParams& prm, double horizon,
                                        std::uint64_t seed) {
  const int G = model.groups();
  if (G < 1 || model.Q.rows() != G || model.Q.cols() != G) throw ConfigError("block model dimensions disagree");
  if ((model.Q.array() < 0.0).any() || (model.Q.array() > 1.0).any()) throw ConfigError("Q entries must lie in [0, 1]");
  std::vector<int> group(n);
  auto mrng = keyed_stream(seed, kTagAdoptionMembership);
  for (int v = 0; v < n; ++v) {
    const double u = uniform01(mrng);
    double acc = 0.0;
    group[v] = G - 1;
    for (int g = 0; g < G; ++g) {
      acc += model.membership[g];
      if (u < acc) {
        group[v] = g;
        break;
      }
    }
  }
  std::vector<Pair> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto rng = pair_stream(seed, kTagAdoptionNetwork, Pair{i, j});
      if (uniform01(rng) < model.Q(group[i], group[j])) edges.push_back({i, j});
    }
  auto net = DynamicNetwork::static_network(n, horizon, edges);
  auto res = simulate_adoption_on(net, prm, seed);
  res.group = std::move(group);
  return res;
}

}  // namespace netgof
