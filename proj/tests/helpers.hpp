#pragma once

#include "netgof/netgof.hpp"

#include <queue>
#include <random>
#include <set>

namespace netgof::testing {

inline DynamicNetwork random_static_network(int n, double p, double T, std::mt19937_64& rng) {
  std::vector<Pair> pairs;
  std::bernoulli_distribution coin(p);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) pairs.push_back({i, j});
  return DynamicNetwork::static_network(n, T, pairs);
}

// Each pair gets up to two random activity intervals.
inline DynamicNetwork random_dynamic_network(int n, double p, double T, std::mt19937_64& rng) {
  std::vector<DynamicNetwork::Record> recs;
  std::uniform_real_distribution<double> u(0.0, T);
  std::bernoulli_distribution coin(p);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!coin(rng)) continue;
      for (int r = 0; r < 2; ++r) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        recs.push_back({{i, j}, {a, b}});
      }
    }
  return DynamicNetwork(n, T, recs);
}

// Reference line-graph distance: explicit BFS over vertex-sharing edges, no caching.
inline double bfs_line_distance(const std::vector<Pair>& edges, Pair from, Pair to) {
  auto share = [](Pair a, Pair b) { return a.i == b.i || a.i == b.j || a.j == b.i || a.j == b.j; };
  const auto src = std::find(edges.begin(), edges.end(), from);
  const auto dst = std::find(edges.begin(), edges.end(), to);
  if (src == edges.end() || dst == edges.end()) return kInf;
  std::vector<int> dist(edges.size(), -1);
  std::queue<std::size_t> q;
  dist[src - edges.begin()] = 0;
  q.push(src - edges.begin());
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (std::size_t v = 0; v < edges.size(); ++v)
      if (dist[v] < 0 && share(edges[u], edges[v])) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  const int d = dist[dst - edges.begin()];
  return d < 0 ? kInf : d;
}

// Random piecewise-constant covariates with values in [-1, 1] (first coordinate 1).
inline CovariateField random_piecewise_covariates(const DynamicNetwork& net, int q, std::mt19937_64& rng, int knots = 3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), tt(0.0, net.horizon());
  std::map<Pair, std::vector<std::pair<double, Vec>>> kn;
  for (const auto& [p, list] : net.activity()) {
    for (int k = 0; k < knots; ++k) {
      Vec x(q);
      x[0] = 1.0;
      for (int a = 1; a < q; ++a) x[a] = u(rng);
      kn[p].push_back({k == 0 ? 0.0 : tt(rng), x});
    }
  }
  return CovariateField::piecewise_field(q, std::move(kn), 1.0);
}

}  // namespace netgof::testing
