#pragma once

#include "netgof/types.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace netgof {

/// Vertex set {0..n-1} plus, per pair, the sorted disjoint activity intervals on which the pair is
/// connected. Immutable once built.
class DynamicNetwork {
 public:
  struct Record {
    Pair pair;
    Interval interval;
  };

  DynamicNetwork() = default;

  /// Overlapping or touching intervals of the same pair are merged. Intervals are clipped to [0, T].
  DynamicNetwork(int n, double horizon, std::span<const Record> records, bool directed = false)
      : n_(n), horizon_(horizon), directed_(directed) {
    if (n < 0) throw DomainError("vertex count must be nonnegative");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    std::map<Pair, std::vector<Interval>> raw;
    for (const auto& r : records) {
      const Pair p = canonical(r.pair);
      const double a = std::max(0.0, r.interval.start);
      const double b = std::min(horizon_, r.interval.end);
      if (!(a < b)) continue;
      raw[p].push_back({a, b});
    }
    for (auto& [p, list] : raw) {
      std::sort(list.begin(), list.end(), [](const Interval& x, const Interval& y) { return x.start < y.start; });
      std::vector<Interval> merged;
      for (const auto& iv : list) {
        if (!merged.empty() && iv.start <= merged.back().end)
          merged.back().end = std::max(merged.back().end, iv.end);
        else
          merged.push_back(iv);
      }
      activity_.emplace(p, std::move(merged));
    }
  }

  /// Every listed pair active on all of [0, T).
  static DynamicNetwork static_network(int n, double horizon, std::span<const Pair> pairs, bool directed = false) {
    std::vector<Record> recs;
    recs.reserve(pairs.size());
    for (const auto& p : pairs) recs.push_back({p, {0.0, horizon}});
    return DynamicNetwork(n, horizon, recs, directed);
  }

  int vertex_count() const { return n_; }
  double horizon() const { return horizon_; }
  bool directed() const { return directed_; }

  /// r_n: number of ordered (directed) or unordered pairs without loops.
  double pair_count() const {
    const double n = n_;
    return directed_ ? n * (n - 1.0) : n * (n - 1.0) / 2.0;
  }

  const std::map<Pair, std::vector<Interval>>& activity() const { return activity_; }

  /// Validates the pair and maps it to its stored orientation.
  Pair canonical(Pair p) const {
    if (p.i == p.j) throw DomainError("loop pair " + to_string(p) + " is not part of L_n");
    if (p.i < 0 || p.j < 0 || p.i >= n_ || p.j >= n_) throw DomainError("vertex out of range in " + to_string(p));
    return directed_ ? p : make_undirected(p.i, p.j);
  }

  const std::vector<Interval>& intervals(Pair p) const {
    static const std::vector<Interval> kEmpty;
    auto it = activity_.find(canonical(p));
    return it == activity_.end() ? kEmpty : it->second;
  }

  bool edge_active(Pair p, double t) const {
    const auto& list = intervals(p);
    if (t < 0.0 || t > horizon_) throw DomainError("time outside [0, T]");
    auto it = std::upper_bound(list.begin(), list.end(), t, [](double v, const Interval& iv) { return v < iv.start; });
    if (it == list.begin()) return false;
    return std::prev(it)->contains(t);
  }

  /// sup over u in [a, b] of C(u).
  bool active_during(Pair p, double a, double b) const {
    for (const auto& iv : intervals(p))
      if (iv.start <= b && iv.end > a) return true;
    return false;
  }

  /// Lebesgue measure of the activity set inside [a, b).
  double active_time(Pair p, double a, double b) const {
    double total = 0.0;
    for (const auto& iv : intervals(p)) total += std::max(0.0, std::min(b, iv.end) - std::max(a, iv.start));
    return total;
  }

  std::vector<Pair> active_pairs(double t) const {
    std::vector<Pair> out;
    for (const auto& [p, list] : activity_)
      for (const auto& iv : list)
        if (iv.contains(t)) {
          out.push_back(p);
          break;
        }
    return out;
  }

  /// Relabels vertices by perm (old index -> new index).
  DynamicNetwork relabeled(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != n_) throw DomainError("permutation size mismatch");
    std::vector<Record> recs;
    for (const auto& [p, list] : activity_)
      for (const auto& iv : list) recs.push_back({Pair{perm[p.i], perm[p.j]}, iv});
    return DynamicNetwork(n_, horizon_, recs, directed_);
  }

 private:
  int n_ = 0;
  double horizon_ = 1.0;
  bool directed_ = false;
  std::map<Pair, std::vector<Interval>> activity_;
};

/// Rectangular grid (or torus) with vertices at integer coordinates; vertex id is row-major with the
/// first dimension fastest.
struct GridSpec {
  std::vector<int> dims;
  bool torus = false;

  int vertex_count() const {
    int v = 1;
    for (int d : dims) v *= d;
    return v;
  }
  std::vector<int> coords(int id) const {
    std::vector<int> c(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) {
      c[a] = id % dims[a];
      id /= dims[a];
    }
    return c;
  }
  int id(const std::vector<int>& c) const {
    int v = 0, stride = 1;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      v += c[a] * stride;
      stride *= dims[a];
    }
    return v;
  }

  struct GridEdge {
    Pair pair;         // canonical (undirected) pair
    int low_vertex;    // the endpoint with the smaller coordinate along `axis` (before wrap)
    int axis;
  };

  /// Each vertex contributes one edge per axis towards +1 (wrapping on a torus).
  std::vector<GridEdge> edges() const {
    if (dims.empty()) throw DomainError("grid needs at least one dimension");
    for (int d : dims) {
      if (d < 2) throw DomainError("grid side must be at least 2");
      if (torus && d < 3) throw DomainError("torus side must be at least 3");
    }
    std::vector<GridEdge> out;
    const int nv = vertex_count();
    for (int v = 0; v < nv; ++v) {
      auto c = coords(v);
      for (std::size_t a = 0; a < dims.size(); ++a) {
        auto nb = c;
        nb[a] += 1;
        if (nb[a] == dims[a]) {
          if (!torus) continue;
          nb[a] = 0;
        }
        out.push_back({make_undirected(v, id(nb)), v, static_cast<int>(a)});
      }
    }
    return out;
  }

  DynamicNetwork network(double horizon) const {
    std::vector<Pair> pairs;
    for (const auto& e : edges()) pairs.push_back(e.pair);
    return DynamicNetwork::static_network(vertex_count(), horizon, pairs);
  }
};

}  // namespace netgof
