#pragma once

// Observed-process containers: event logs, covariate fields and parameter paths.

#include "netgof/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace netgof {

/// Per-pair sorted event times of the counting processes N_ij on [0, T].
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(double horizon) : horizon_(horizon) {}

  /// Sorts each pair's times; rejects repeated times and times outside [0, T].
  EventLog(double horizon, std::map<Pair, std::vector<double>> events) : horizon_(horizon), events_(std::move(events)) {
    for (auto it = events_.begin(); it != events_.end();) {
      auto& times = it->second;
      std::sort(times.begin(), times.end());
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0.0 && times[k] <= horizon_))
          throw DataError("event time outside [0, T] for pair " + to_string(it->first));
        if (k > 0 && times[k] == times[k - 1]) throw DataError("repeated event time for pair " + to_string(it->first));
      }
      if (times.empty())
        it = events_.erase(it);
      else
        ++it;
    }
  }

  double horizon() const { return horizon_; }
  const std::map<Pair, std::vector<double>>& events() const { return events_; }

  const std::vector<double>& times(Pair p) const {
    static const std::vector<double> kEmpty;
    auto it = events_.find(p);
    return it == events_.end() ? kEmpty : it->second;
  }

  std::size_t count(Pair p) const { return times(p).size(); }

  /// N_p(t): number of events in [0, t].
  std::size_t count_until(Pair p, double t) const {
    const auto& v = times(p);
    return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [p, v] : events_) n += v.size();
    return n;
  }

  struct Event {
    double time;
    Pair pair;
  };

  /// All events sorted by time, ties broken by pair order.
  std::vector<Event> sorted() const {
    std::vector<Event> out;
    out.reserve(total());
    for (const auto& [p, v] : events_)
      for (double t : v) out.push_back({t, p});
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.pair < b.pair;
    });
    return out;
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  double horizon_ = 1.0;
  std::map<Pair, std::vector<double>> events_;
};

/// A time span on which a pair's covariate vector is constant.
struct CovariatePiece {
  double start;
  double end;
  Vec x;
};

/// X_ij(t) in R^q with a declared sup-norm bound.
class CovariateField {
 public:
  enum class Kind { Static, Piecewise, Callback };
  using Callback = std::function<Vec(Pair, double)>;

  static CovariateField static_field(int q, std::map<Pair, Vec> values, double bound) {
    CovariateField f(Kind::Static, q, bound);
    for (const auto& [p, x] : values)
      if (x.size() != q) throw ConfigError("covariate dimension mismatch for " + to_string(p));
    f.static_ = std::move(values);
    return f;
  }

  /// Same vector for every pair (e.g. an intercept-only model).
  static CovariateField constant_field(const Vec& x, double bound) {
    CovariateField f(Kind::Static, static_cast<int>(x.size()), bound);
    f.default_ = x;
    return f;
  }

  /// Per pair: knots (time, value); each value holds from its knot until the next knot. Times before
  /// the first knot use the first value.
  static CovariateField piecewise_field(int q, std::map<Pair, std::vector<std::pair<double, Vec>>> knots, double bound) {
    CovariateField f(Kind::Piecewise, q, bound);
    for (auto& [p, list] : knots) {
      if (list.empty()) throw ConfigError("empty covariate knot list for " + to_string(p));
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& kv : list)
        if (kv.second.size() != q) throw ConfigError("covariate dimension mismatch for " + to_string(p));
    }
    f.piecewise_ = std::move(knots);
    return f;
  }

  static CovariateField callback_field(int q, Callback fn, double bound) {
    CovariateField f(Kind::Callback, q, bound);
    f.callback_ = std::move(fn);
    return f;
  }

  Kind kind() const { return kind_; }
  int dim() const { return q_; }
  double bound() const { return bound_; }
  bool piecewise_constant() const { return kind_ != Kind::Callback; }

  bool has(Pair p) const {
    switch (kind_) {
      case Kind::Static: return default_.size() > 0 || static_.count(p) > 0;
      case Kind::Piecewise: return piecewise_.count(p) > 0;
      case Kind::Callback: return true;
    }
    return false;
  }

  Vec eval(Pair p, double t) const {
    switch (kind_) {
      case Kind::Static: {
        auto it = static_.find(p);
        if (it != static_.end()) return it->second;
        if (default_.size() > 0) return default_;
        throw ConfigError("no covariates for pair " + to_string(p));
      }
      case Kind::Piecewise: {
        const auto& list = knots_of(p);
        auto it = std::upper_bound(list.begin(), list.end(), t, [](double v, const auto& kv) { return v < kv.first; });
        if (it == list.begin()) return list.front().second;
        return std::prev(it)->second;
      }
      case Kind::Callback: {
        Vec x = callback_(p, t);
        if (x.size() != q_) throw ConfigError("covariate callback returned wrong dimension");
        return x;
      }
    }
    return Vec();
  }

  /// Constant pieces covering [a, b). Only valid for piecewise-constant kinds.
  std::vector<CovariatePiece> pieces(Pair p, double a, double b) const {
    std::vector<CovariatePiece> out;
    if (!(a < b)) return out;
    if (kind_ == Kind::Callback) throw DomainError("callback covariates have no constant pieces");
    if (kind_ == Kind::Static) {
      out.push_back({a, b, eval(p, a)});
      return out;
    }
    const auto& list = knots_of(p);
    double cur = a;
    Vec val = eval(p, a);
    for (const auto& [tk, xk] : list) {
      if (tk <= a) continue;
      if (tk >= b) break;
      out.push_back({cur, tk, val});
      cur = tk;
      val = xk;
    }
    out.push_back({cur, b, val});
    return out;
  }

  /// Checks the declared bound on sampled points of the given pairs.
  void check_bound(const std::vector<Pair>& pairs, double horizon, int samples_per_pair = 16) const {
    for (const auto& p : pairs)
      for (int s = 0; s < samples_per_pair; ++s) {
        const double t = horizon * (s + 0.5) / samples_per_pair;
        const Vec x = eval(p, t);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound_ * (1.0 + 1e-12))
          throw ConfigError("covariate bound violated for pair " + to_string(p));
      }
  }

  /// Same field with X replaced by A X.
  CovariateField transformed(const Mat& A) const {
    CovariateField f = *this;
    const double scale = A.cwiseAbs().rowwise().sum().maxCoeff();
    f.bound_ = bound_ * scale;
    f.q_ = static_cast<int>(A.rows());
    if (default_.size() > 0) f.default_ = A * default_;
    for (auto& [p, x] : f.static_) x = A * x;
    for (auto& [p, list] : f.piecewise_)
      for (auto& kv : list) kv.second = A * kv.second;
    if (kind_ == Kind::Callback) {
      auto inner = callback_;
      f.callback_ = [inner, A](Pair p, double t) -> Vec { return A * inner(p, t); };
    }
    return f;
  }

  /// Same field with vertex labels permuted (old -> new), for undirected pairs.
  CovariateField relabeled(const std::vector<int>& perm, bool directed = false) const {
    auto map_pair = [&](Pair p) { return directed ? Pair{perm[p.i], perm[p.j]} : make_undirected(perm[p.i], perm[p.j]); };
    CovariateField f = *this;
    f.static_.clear();
    for (const auto& [p, x] : static_) f.static_[map_pair(p)] = x;
    f.piecewise_.clear();
    for (const auto& [p, l] : piecewise_) f.piecewise_[map_pair(p)] = l;
    if (kind_ == Kind::Callback) {
      std::vector<int> inv(perm.size());
      for (std::size_t v = 0; v < perm.size(); ++v) inv[perm[v]] = static_cast<int>(v);
      auto inner = callback_;
      f.callback_ = [inner, inv, directed](Pair p, double t) -> Vec {
        Pair o = directed ? Pair{inv[p.i], inv[p.j]} : make_undirected(inv[p.i], inv[p.j]);
        return inner(o, t);
      };
    }
    return f;
  }

 private:
  CovariateField(Kind k, int q, double bound) : kind_(k), q_(q), bound_(bound) {
    if (q < 1) throw ConfigError("covariate dimension must be at least 1");
    if (!(bound > 0.0)) throw ConfigError("covariate bound must be positive");
  }

  const std::vector<std::pair<double, Vec>>& knots_of(Pair p) const {
    auto it = piecewise_.find(p);
    if (it == piecewise_.end()) throw ConfigError("no covariates for pair " + to_string(p));
    return it->second;
  }

  Kind kind_ = Kind::Static;
  int q_ = 1;
  double bound_ = 1.0;
  Vec default_;
  std::map<Pair, Vec> static_;
  std::map<Pair, std::vector<std::pair<double, Vec>>> piecewise_;
  Callback callback_;
};

/// theta(t) on a time grid, with constant (left-continuous step) or linear interpolation.
class ParameterPath {
 public:
  enum class Interpolation { Constant, Linear };

  ParameterPath(std::vector<double> grid, Mat values, Interpolation interp = Interpolation::Linear)
      : grid_(std::move(grid)), values_(std::move(values)), interp_(interp) {
    if (grid_.empty() || static_cast<Eigen::Index>(grid_.size()) != values_.rows())
      throw ConfigError("parameter path grid and values disagree");
    if (!std::is_sorted(grid_.begin(), grid_.end())) throw ConfigError("parameter path grid must be sorted");
    if (!values_.allFinite()) throw ConfigError("parameter path values must be finite");
  }

  static ParameterPath constant(const Vec& theta, double horizon) {
    Mat v(2, theta.size());
    v.row(0) = theta.transpose();
    v.row(1) = theta.transpose();
    return ParameterPath({0.0, horizon}, v, Interpolation::Constant);
  }

  /// Samples f on a uniform grid of `points` knots over [0, T] with linear interpolation.
  template <class F>
  static ParameterPath from_function(F&& f, int q, double horizon, int points = 201) {
    std::vector<double> g(points);
    Mat v(points, q);
    for (int k = 0; k < points; ++k) {
      g[k] = horizon * k / (points - 1);
      v.row(k) = Vec(f(g[k])).transpose();
    }
    return ParameterPath(std::move(g), std::move(v), Interpolation::Linear);
  }

  int dim() const { return static_cast<int>(values_.cols()); }
  const std::vector<double>& grid() const { return grid_; }
  const Mat& values() const { return values_; }
  Interpolation interpolation() const { return interp_; }

  Vec at(double t) const {
    if (t <= grid_.front()) return values_.row(0).transpose();
    if (t >= grid_.back()) return values_.row(values_.rows() - 1).transpose();
    const auto k = static_cast<Eigen::Index>(std::upper_bound(grid_.begin(), grid_.end(), t) - grid_.begin()) - 1;
    if (interp_ == Interpolation::Constant) return values_.row(k).transpose();
    const double w = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return ((1.0 - w) * values_.row(k) + w * values_.row(k + 1)).transpose();
  }

  /// Grid knots strictly inside (a, b).
  std::vector<double> knots_in(double a, double b) const {
    std::vector<double> out;
    for (double g : grid_)
      if (g > a && g < b) out.push_back(g);
    return out;
  }

  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

 private:
  std::vector<double> grid_;
  Mat values_;
  Interpolation interp_;
};

}  // namespace netgof
