#pragma once

// Delta-partitions of the pair set: typed blocks such that different blocks of the same type are at
// line-graph distance >= Delta. Constructions: grid chessboard, anchor coordinates, classical MDS.

#include "netgof/distance.hpp"
#include "netgof/network.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netgof {

struct Cell {
  int k = 1;  // type; 0 is reserved for per-component blocks of pairs at infinite distance
  int m = 1;  // block number within the type, from 1

  friend auto operator<=>(const Cell&, const Cell&) = default;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct PartitionAssignment {
  double t = 0.0;
  double delta = 1.0;
  int type_count = 1;
  std::map<Pair, Cell> assign;
  bool degenerate = false;
  std::vector<std::string> notes;

  std::vector<Pair> covered() const {
    std::vector<Pair> out;
    for (const auto& [p, c] : assign) out.push_back(p);
    return out;
  }
};

namespace detail {

// Numbers cells within each type from 1 in lexicographic order of their keys.
template <class Key>
void number_blocks(const std::map<Pair, std::pair<int, Key>>& raw, PartitionAssignment& out) {
  std::map<int, std::map<Key, int>> ids;
  for (const auto& [p, tk] : raw) ids[tk.first][tk.second] = 0;
  for (auto& [k, cells] : ids) {
    int next = 1;
    for (auto& [key, id] : cells) id = next++;
  }
  for (const auto& [p, tk] : raw) out.assign[p] = Cell{tk.first, ids[tk.first][tk.second]};
}

}  // namespace detail

/// Chessboard blocks of side delta on a grid or torus. An edge belongs to the block of its lower
/// endpoint (bottom/left convention). On a torus a remainder shorter than delta is merged into the last
/// full block, and an odd number of blocks along a dimension gives that dimension's last block a third
/// class so that wrap-around neighbours differ.
inline PartitionAssignment grid_chessboard(const GridSpec& grid, int delta) {
  if (delta < 1) throw ConfigError("delta must be at least 1");
  const auto edges = grid.edges();
  const std::size_t D = grid.dims.size();
  std::vector<int> blocks(D), classes(D);
  for (std::size_t a = 0; a < D; ++a) {
    const int side = grid.dims[a];
    blocks[a] = grid.torus ? std::max(1, side / delta) : (side + delta - 1) / delta;
    if (blocks[a] == 1)
      classes[a] = 1;
    else if (grid.torus && blocks[a] % 2 == 1)
      classes[a] = 3;
    else
      classes[a] = 2;
  }
  PartitionAssignment out;
  out.t = 0.0;
  out.delta = delta;
  out.type_count = 1;
  for (int c : classes) out.type_count *= c;
  out.degenerate = std::all_of(blocks.begin(), blocks.end(), [](int b) { return b == 1; });
  if (out.degenerate) out.notes.push_back("delta exceeds the grid side: single block");

  std::map<Pair, std::pair<int, std::vector<int>>> raw;
  for (const auto& e : edges) {
    const auto c = grid.coords(e.low_vertex);
    std::vector<int> key(D);
    int k = 0, stride = 1;
    for (std::size_t a = 0; a < D; ++a) {
      const int b = std::min(c[a] / delta, blocks[a] - 1);
      key[D - 1 - a] = b;  // last dimension most significant: row-major block order
      int cls = b % 2;
      if (classes[a] == 3 && b == blocks[a] - 1) cls = 2;
      if (classes[a] == 1) cls = 0;
      k += cls * stride;
      stride *= classes[a];
    }
    raw[e.pair] = {k + 1, key};
  }
  detail::number_blocks(raw, out);
  return out;
}

/// Coordinates are distances to the anchors at time t; cells of side delta in coordinate space are
/// typed by parity (2^d types). Pairs with an infinite coordinate go to one type-0 block per
/// connected component.
inline PartitionAssignment coordinate_partition(const DynamicNetwork& net, double t, const std::vector<Pair>& anchors,
                                                int delta, int cap = 0) {
  if (anchors.empty()) throw ConfigError("coordinate partition needs at least one anchor");
  if (delta < 1) throw ConfigError("delta must be at least 1");
  const PairDistanceSnapshot snap(net, t, cap);
  std::vector<int> anchor_idx;
  for (const auto& a : anchors) {
    auto idx = snap.index_of(a);
    if (!idx) throw ConfigError("anchor " + to_string(a) + " is not active at the snapshot time");
    anchor_idx.push_back(*idx);
  }
  const auto comp = snap.components();
  const int d = static_cast<int>(anchors.size());
  PartitionAssignment out;
  out.t = t;
  out.delta = delta;
  out.type_count = 1 << d;
  std::map<Pair, std::pair<int, std::vector<int>>> raw;
  for (std::size_t e = 0; e < snap.size(); ++e) {
    std::vector<int> key;
    int k = 0;
    bool finite = true;
    for (int a = 0; a < d; ++a) {
      const int dist = snap.raw(static_cast<int>(e), anchor_idx[a]);
      if (dist < 0) {
        finite = false;
        break;
      }
      const int cell = dist / delta;
      key.push_back(cell);
      k |= (cell % 2) << a;
    }
    if (finite)
      raw[snap.active_edges()[e]] = {k + 1, key};
    else
      raw[snap.active_edges()[e]] = {0, std::vector<int>{comp[e]}};
  }
  detail::number_blocks(raw, out);
  return out;
}

struct MdsPartition {
  PartitionAssignment partition;  // partition.delta holds the certified value
  double requested_delta = 1.0;
  double achieved_delta = 0.0;
  int dim_used = 0;
  std::vector<std::string> warnings;
};

/// Classical MDS of each line-graph component (B = -1/2 J D^2 J, top d eigenpairs, negative eigenvalues
/// clipped), chessboard cells of side delta in the embedding, then certification against the true
/// distances.
inline MdsPartition mds_partition(const DynamicNetwork& net, double t, int dim, double delta) {
  if (dim < 1) throw ConfigError("MDS dimension must be at least 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const int big_cap = std::max(2 * net.vertex_count(), static_cast<int>(net.activity().size()) + 1);
  const PairDistanceSnapshot snap(net, t, big_cap);
  const auto comp = snap.components();
  const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  MdsPartition res;
  res.requested_delta = delta;
  int max_positive = 0;
  std::vector<std::vector<double>> embed(snap.size());
  for (int c = 0; c < ncomp; ++c) {
    std::vector<int> members;
    for (std::size_t e = 0; e < snap.size(); ++e)
      if (comp[e] == c) members.push_back(static_cast<int>(e));
    const int m = static_cast<int>(members.size());
    Mat D2(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double d = snap.distance_by_index(members[a], members[b]);
        D2(a, b) = d * d;
      }
    const Mat J = Mat::Identity(m, m) - Mat::Constant(m, m, 1.0 / m);
    const Mat B = -0.5 * J * D2 * J;
    Eigen::SelfAdjointEigenSolver<Mat> eig(B);
    const Vec vals = eig.eigenvalues();  // ascending
    const double top = std::max(0.0, vals.size() ? vals[m - 1] : 0.0);
    int positive = 0;
    for (int a = 0; a < m; ++a)
      if (vals[a] > 1e-9 * std::max(1.0, top)) ++positive;
    if (m > 1 && positive < dim)
      res.warnings.push_back("component " + std::to_string(c) + " has only " + std::to_string(positive) +
                             " positive eigenvalues");
    max_positive = std::max(max_positive, std::min(dim, positive));
    for (int a = 0; a < m; ++a) {
      std::vector<double> y(dim, 0.0);
      for (int r = 0; r < dim && r < m; ++r) {
        const double lam = std::max(0.0, vals[m - 1 - r]);
        y[r] = eig.eigenvectors()(a, m - 1 - r) * std::sqrt(lam);
      }
      embed[members[a]] = std::move(y);
    }
  }
  res.dim_used = std::max(1, max_positive);
  if (res.dim_used < dim) res.warnings.push_back("reduced embedding dimension to " + std::to_string(res.dim_used));
  const int du = res.dim_used;
  auto& out = res.partition;
  out.t = t;
  out.type_count = 1 << du;
  std::map<Pair, std::pair<int, std::vector<int>>> raw;
  for (std::size_t e = 0; e < snap.size(); ++e) {
    std::vector<int> key{comp[e]};
    int k = 0;
    for (int a = 0; a < du; ++a) {
      const long cell = static_cast<long>(std::floor(embed[e][a] / delta));
      key.push_back(static_cast<int>(cell));
      k |= static_cast<int>(((cell % 2) + 2) % 2) << a;
    }
    raw[snap.active_edges()[e]] = {k + 1, key};
  }
  detail::number_blocks(raw, out);

  // Certification: smallest finite distance between different blocks of the same type.
  double worst = kInf;
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < snap.size(); ++e) cells.push_back(out.assign.at(snap.active_edges()[e]));
  for (std::size_t a = 0; a < snap.size(); ++a)
    for (std::size_t b = a + 1; b < snap.size(); ++b)
      if (cells[a].k == cells[b].k && cells[a].m != cells[b].m)
        worst = std::min(worst, snap.distance_by_index(static_cast<int>(a), static_cast<int>(b)));
  res.achieved_delta = std::isfinite(worst) ? worst : delta;
  out.delta = res.achieved_delta;
  return res;
}

struct PartitionReport {
  bool ok = true;
  bool disjoint = true;
  bool separated = true;
  bool covered = true;
  std::optional<double> worst_violation;  // smallest same-type cross-block distance below delta
  double min_same_type_distance = kInf;
  int violations = 0;
  int uncovered = 0;       // active pairs without a cell
  int inactive_assigned = 0;
  int assigned = 0;
  int blocks = 0;
};

/// Exhaustive check of disjointness, same-type separation and coverage of the active pairs.
inline PartitionReport validate_partition(const PartitionAssignment& p, const DynamicNetwork& net, double t) {
  PartitionReport rep;
  const PairDistanceSnapshot snap(net, t, std::max(2 * net.vertex_count(), static_cast<int>(std::ceil(p.delta)) + 1));
  std::map<Pair, Cell> canon;
  for (const auto& [pair, cell] : p.assign) {
    const Pair c = net.canonical(pair);
    if (!canon.emplace(c, cell).second) rep.disjoint = false;
  }
  rep.assigned = static_cast<int>(canon.size());
  std::map<Cell, int> block_ids;
  for (const auto& [pair, cell] : canon) block_ids.emplace(cell, 0);
  rep.blocks = static_cast<int>(block_ids.size());

  std::vector<int> snap_index;
  std::vector<Cell> cells;
  for (const auto& [pair, cell] : canon) {
    auto idx = snap.index_of(pair);
    if (!idx) {
      ++rep.inactive_assigned;
      continue;
    }
    snap_index.push_back(*idx);
    cells.push_back(cell);
  }
  for (const auto& e : snap.active_edges())
    if (!canon.count(e)) ++rep.uncovered;
  rep.covered = rep.uncovered == 0;

  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      if (cells[a].k != cells[b].k || cells[a].m == cells[b].m) continue;
      const double d = snap.distance_by_index(snap_index[a], snap_index[b]);
      rep.min_same_type_distance = std::min(rep.min_same_type_distance, d);
      if (d < p.delta) {
        ++rep.violations;
        rep.separated = false;
        rep.worst_violation = rep.worst_violation ? std::min(*rep.worst_violation, d) : d;
      }
    }
  rep.ok = rep.disjoint && rep.separated;
  return rep;
}

}  // namespace netgof
