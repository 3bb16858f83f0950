#pragma once

#include "netgof/network.hpp"

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace netgof {

/// Line-graph distances between the edges active at one time point. Two active edges are adjacent
/// when they share a vertex; inactive pairs are at infinite distance from everything.
class PairDistanceSnapshot {
 public:
  static constexpr int kUnreached = -1;

  /// cap <= 0 selects the default cap 2n. Distances beyond the cap are reported as infinite.
  PairDistanceSnapshot(const DynamicNetwork& net, double t, int cap = 0)
      : t_(t), net_(&net), cap_(cap > 0 ? cap : 2 * std::max(1, net.vertex_count())) {
    if (t < 0.0 || t > net.horizon()) throw DomainError("snapshot time outside [0, T]");
    edges_ = net.active_pairs(t);
    for (std::size_t e = 0; e < edges_.size(); ++e) index_.emplace(edges_[e], static_cast<int>(e));
    build_adjacency();
    const std::size_t m = edges_.size();
    dist_.assign(m * m, kUnreached);
    std::vector<int> queue;
    queue.reserve(m);
    for (std::size_t s = 0; s < m; ++s) {
      int* row = dist_.data() + s * m;
      row[s] = 0;
      queue.clear();
      queue.push_back(static_cast<int>(s));
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        if (row[u] >= cap_) continue;
        for (int w : adjacency_[u])
          if (row[w] == kUnreached) {
            row[w] = row[u] + 1;
            queue.push_back(w);
          }
      }
    }
  }

  double time() const { return t_; }
  int cap() const { return cap_; }
  const DynamicNetwork& network() const { return *net_; }
  const std::vector<Pair>& active_edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

  std::optional<int> index_of(Pair p) const {
    auto it = index_.find(net_->canonical(p));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Distance by edge index; kUnreached means infinite.
  int raw(int a, int b) const { return dist_[static_cast<std::size_t>(a) * edges_.size() + b]; }

  double distance_by_index(int a, int b) const {
    const int d = raw(a, b);
    return d == kUnreached ? kInf : static_cast<double>(d);
  }

  double distance(Pair u, Pair v) const {
    auto a = index_of(u);
    auto b = index_of(v);
    if (!a || !b) return kInf;
    return distance_by_index(*a, *b);
  }

  /// Distance of a pair to a set J: minimum over J.
  double distance_to_set(Pair u, std::span<const Pair> set) const {
    double best = kInf;
    for (const auto& v : set) best = std::min(best, distance(u, v));
    return best;
  }

  const std::vector<int>& neighbors(int edge) const { return adjacency_[edge]; }

  /// Connected component id per active edge (components of the line graph, ignoring the cap).
  std::vector<int> components() const {
    std::vector<int> comp(edges_.size(), -1);
    int next = 0;
    for (std::size_t s = 0; s < edges_.size(); ++s) {
      if (comp[s] >= 0) continue;
      std::deque<int> q{static_cast<int>(s)};
      comp[s] = next;
      while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int w : adjacency_[u])
          if (comp[w] < 0) {
            comp[w] = next;
            q.push_back(w);
          }
      }
      ++next;
    }
    return comp;
  }

 private:
  void build_adjacency() {
    std::map<int, std::vector<int>> incident;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incident[edges_[e].i].push_back(static_cast<int>(e));
      incident[edges_[e].j].push_back(static_cast<int>(e));
    }
    adjacency_.assign(edges_.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      auto& nb = adjacency_[e];
      for (int v : {edges_[e].i, edges_[e].j})
        for (int f : incident[v])
          if (f != static_cast<int>(e)) nb.push_back(f);
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  double t_;
  const DynamicNetwork* net_;
  int cap_;
  std::vector<Pair> edges_;
  std::map<Pair, int> index_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> dist_;
};

inline PairDistanceSnapshot pair_distance_snapshot(const DynamicNetwork& net, double t, int cap = 0) {
  return PairDistanceSnapshot(net, t, cap);
}

struct HubReport {
  double m = 1.0;
  double F = 1.0;
  Interval window;
  std::map<Pair, int> per_pair;
  int max_count = 0;
  std::map<Pair, int> hub_flags;
  int hub_count = 0;
};

/// Neighbor-activity counts K_m^{(i,j)}(a,b) for the pairs in A, using distances at time a.
inline HubReport hub_report(const DynamicNetwork& net, std::span<const Pair> A, double m, double F, double a, double b) {
  if (!(a <= b) || a < 0.0 || b > net.horizon()) throw DomainError("hub window must lie in [0, T]");
  if (m < 1.0 || F < 1.0) throw DomainError("hub radius and threshold must be at least 1");
  HubReport rep;
  rep.m = m;
  rep.F = F;
  rep.window = {a, b};
  if (A.empty()) return rep;
  const PairDistanceSnapshot snap(net, a);
  std::vector<char> active_in_window(snap.size());
  for (std::size_t e = 0; e < snap.size(); ++e) active_in_window[e] = net.active_during(snap.active_edges()[e], a, b) ? 1 : 0;
  for (const auto& raw_pair : A) {
    const Pair kl = net.canonical(raw_pair);
    int count = 0;
    if (auto idx = snap.index_of(kl)) {
      for (std::size_t e = 0; e < snap.size(); ++e)
        if (active_in_window[e] && snap.distance_by_index(static_cast<int>(e), *idx) < m) ++count;
    }
    rep.per_pair[kl] = count;
    rep.max_count = std::max(rep.max_count, count);
    const int flag = count >= F ? 1 : 0;
    rep.hub_flags[kl] = flag;
    rep.hub_count += flag;
  }
  return rep;
}

}  // namespace netgof
