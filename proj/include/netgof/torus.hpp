#pragma once

// Spatial AR field on the edges of a 2D torus: A = (I - alpha0 C)^{-1} eps, eps iid N(0, 1), where C is
// the 0/1 adjacency between edges sharing a vertex.

#include "netgof/distance.hpp"
#include "netgof/network.hpp"
#include "netgof/random.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <vector>

namespace netgof {

class TorusField {
 public:
  TorusField(int side, double alpha0) : side_(side), alpha0_(alpha0), grid_{{side, side}, true} {
    if (side < 3) throw ConfigError("torus side must be at least 3");
    if (!(alpha0 >= 0.0) || !(6.0 * alpha0 < 1.0)) throw ConfigError("torus coupling needs 0 <= 6 alpha0 < 1");
    for (const auto& e : grid_.edges()) edges_.push_back(e.pair);
    for (std::size_t k = 0; k < edges_.size(); ++k) index_.emplace(edges_[k], static_cast<int>(k));
    std::map<int, std::vector<int>> incident;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      incident[edges_[k].i].push_back(static_cast<int>(k));
      incident[edges_[k].j].push_back(static_cast<int>(k));
    }
    neighbors_.resize(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      auto& nb = neighbors_[k];
      for (int v : {edges_[k].i, edges_[k].j})
        for (int f : incident[v])
          if (f != static_cast<int>(k)) nb.push_back(f);
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      if (nb.size() != 6) throw NumericError("torus edge without exactly six neighbours");
    }
    const int r = edge_count();
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < r; ++k) {
      trip.emplace_back(k, k, 1.0);
      for (int f : neighbors_[k]) trip.emplace_back(k, f, -alpha0_);
    }
    system_.resize(r, r);
    system_.setFromTriplets(trip.begin(), trip.end());
    solver_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    solver_->compute(system_);
    if (solver_->info() != Eigen::Success) throw NumericError("torus AR system is singular");
  }

  int side() const { return side_; }
  double alpha0() const { return alpha0_; }
  const GridSpec& grid() const { return grid_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  /// phi: edge index -> vertex pair.
  const std::vector<Pair>& edges() const { return edges_; }
  int index_of(Pair p) const { return index_.at(make_undirected(p.i, p.j)); }
  const std::vector<int>& neighbors(int k) const { return neighbors_[k]; }

  Mat adjacency() const {
    Mat C = Mat::Zero(edge_count(), edge_count());
    for (int k = 0; k < edge_count(); ++k)
      for (int f : neighbors_[k]) C(k, f) = 1.0;
    return C;
  }

  DynamicNetwork network(double horizon = 1.0) const { return grid_.network(horizon); }

  Vec solve(const Vec& eps) const {
    Vec a = solver_->solve(eps);
    if (solver_->info() != Eigen::Success || !a.allFinite()) throw NumericError("torus AR solve failed");
    return a;
  }

 private:
  int side_;
  double alpha0_;
  GridSpec grid_;
  std::vector<Pair> edges_;
  std::map<Pair, int> index_;
  std::vector<std::vector<int>> neighbors_;
  Eigen::SparseMatrix<double> system_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> solver_;
};

struct TorusSample {
  Vec A;                        // indexed like TorusField::edges()
  std::vector<char> indicator;  // 1(A >= theta0)
};

/// One fixed-time snapshot. eps uses a stream keyed by (seed, t).
inline TorusSample simulate_torus_ar(const TorusField& field, double t, std::uint64_t seed, double theta0 = 0.0) {
  if (!(t > 0.0)) throw DomainError("torus snapshot time must be positive");
  auto rng = keyed_stream(seed, kTagTorus, bits_of(t));
  Vec eps(field.edge_count());
  for (int k = 0; k < eps.size(); ++k) eps[k] = standard_normal(rng);
  TorusSample s;
  s.A = field.solve(eps);
  s.indicator.resize(s.A.size());
  for (int k = 0; k < s.A.size(); ++k) s.indicator[k] = s.A[k] >= theta0 ? 1 : 0;
  return s;
}

struct TorusCovariance {
  Mat cov;                                // (I - aC)^{-1} (I - aC)^{-T}
  double neumann_gap = 0.0;               // max |cov - truncated Neumann series|
  std::vector<double> max_abs_by_distance;  // index = line-graph distance
  std::vector<double> analytic_bound;     // sum_{j >= d} (j + 1) (6 a)^j
  std::vector<double> decay_ratio;        // max(d + 1) / max(d)
  double c_star = 0.0;                    // max_d max(d) / (6 a)^{d / 2}
  bool within_analytic_bound = true;
  bool nonincreasing = true;
};

inline TorusCovariance torus_covariance(const TorusField& field) {
  const int r = field.edge_count();
  const double a = field.alpha0();
  const Mat C = field.adjacency();
  const Mat M = Mat::Identity(r, r) - a * C;
  const Mat Minv = M.partialPivLu().inverse();
  TorusCovariance out;
  out.cov = Minv * Minv.transpose();

  // Second route: (I - aC)^{-2} = sum_j (j + 1) a^j C^j for the symmetric C.
  Mat series = Mat::Identity(r, r);
  Mat power = Mat::Identity(r, r);
  for (int j = 1; j < 2000; ++j) {
    power = (a * C) * power;
    const Mat term = (j + 1.0) * power;
    series += term;
    if (term.cwiseAbs().maxCoeff() < 1e-17) break;
  }
  out.neumann_gap = (out.cov - series).cwiseAbs().maxCoeff();

  const auto net = field.network();
  const PairDistanceSnapshot snap(net, 0.0, 4 * field.side());
  const auto& edges = field.edges();
  std::vector<int> snap_idx(r);
  for (int k = 0; k < r; ++k) snap_idx[k] = *snap.index_of(edges[k]);
  for (int x = 0; x < r; ++x)
    for (int y = 0; y < r; ++y) {
      const int d = snap.raw(snap_idx[x], snap_idx[y]);
      if (d < 0) continue;
      if (static_cast<int>(out.max_abs_by_distance.size()) <= d) out.max_abs_by_distance.resize(d + 1, 0.0);
      out.max_abs_by_distance[d] = std::max(out.max_abs_by_distance[d], std::abs(out.cov(x, y)));
    }
  const double rho = 6.0 * a;
  for (std::size_t d = 0; d < out.max_abs_by_distance.size(); ++d) {
    double tail = 0.0;
    if (rho > 0.0) {
      // closed form of sum_{j >= d} (j + 1) rho^j
      tail = std::pow(rho, static_cast<double>(d)) * ((d + 1.0) / (1.0 - rho) + rho / ((1.0 - rho) * (1.0 - rho)));
    } else {
      tail = d == 0 ? 1.0 : 0.0;
    }
    out.analytic_bound.push_back(tail);
    if (out.max_abs_by_distance[d] > tail * (1.0 + 1e-12) + 1e-15) out.within_analytic_bound = false;
    if (rho > 0.0)
      out.c_star = std::max(out.c_star, out.max_abs_by_distance[d] / std::pow(rho, 0.5 * static_cast<double>(d)));
    if (d > 0) {
      const double prev = out.max_abs_by_distance[d - 1];
      out.decay_ratio.push_back(prev > 0.0 ? out.max_abs_by_distance[d] / prev : 0.0);
      if (out.max_abs_by_distance[d] > prev * (1.0 + 1e-12) + 1e-15) out.nonincreasing = false;
    }
  }
  return out;
}

}  // namespace netgof
