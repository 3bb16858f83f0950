#pragma once

// Kernel-localized and global Cox likelihoods with exact score and Hessian, damped Newton fits, the
// smoothed connectivity p-bar and the plug-in Sigma.

#include "netgof/kernel.hpp"
#include "netgof/network.hpp"
#include "netgof/process.hpp"
#include "netgof/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <vector>

namespace netgof {

/// A span where the pair is active and (for piecewise covariates) X is constant. x is empty when the
/// covariates come from a callback.
struct Segment {
  double a;
  double b;
  Vec x;
};

struct PairData {
  Pair pair;
  std::vector<Segment> segments;
  std::vector<double> times;  // events at which the pair is active
  std::vector<Vec> event_x;
};

/// Immutable per-pair digest of (network, covariates, events) shared by all fits.
class DataView {
 public:
  DataView(const DynamicNetwork& net, const CovariateField& cov, const EventLog& log)
      : net_(net), cov_(cov), horizon_(net.horizon()) {
    if (log.horizon() != net.horizon()) throw ConfigError("event log and network horizons differ");
    for (const auto& [p, list] : net.activity()) {
      PairData pd;
      pd.pair = p;
      for (const auto& iv : list) {
        if (cov.piecewise_constant()) {
          for (auto& piece : cov.pieces(p, iv.start, iv.end)) pd.segments.push_back({piece.start, piece.end, piece.x});
        } else {
          pd.segments.push_back({iv.start, iv.end, Vec()});
        }
      }
      for (double t : log.times(p)) {
        if (t < net.horizon() && net.edge_active(p, t)) {
          pd.times.push_back(t);
          pd.event_x.push_back(cov.eval(p, t));
        } else {
          ++dropped_;
        }
      }
      events_ += pd.times.size();
      pairs_.push_back(std::move(pd));
    }
    for (const auto& [p, v] : log.events())
      if (!net.activity().count(p)) dropped_ += v.size();
  }

  const DynamicNetwork& network() const { return net_; }
  const CovariateField& covariates() const { return cov_; }
  const std::vector<PairData>& pairs() const { return pairs_; }
  double horizon() const { return horizon_; }
  double r_n() const { return net_.pair_count(); }
  int dim() const { return cov_.dim(); }
  std::size_t event_count() const { return events_; }
  /// Events of pairs that were inactive at the event time (impossible under the model; ignored).
  std::size_t dropped_events() const { return dropped_; }

  Vec x_at(const PairData& pd, const Segment& s, double t) const { return s.x.size() ? s.x : cov_.eval(pd.pair, t); }

 private:
  DynamicNetwork net_;
  CovariateField cov_;
  double horizon_;
  std::vector<PairData> pairs_;
  std::size_t events_ = 0;
  std::size_t dropped_ = 0;
};

/// Localization of the likelihood: a kernel window K_{h,t0}, or none (global likelihood on [0, T]).
struct Localization {
  const Kernel* kernel = nullptr;
  double t0 = 0.0;
  double h = 1.0;

  double lo(double T) const { return kernel ? std::max(0.0, t0 - h) : 0.0; }
  double hi(double T) const { return kernel ? std::min(T, t0 + h) : T; }
  double weight(double t) const { return kernel ? kernel->scaled(t, t0, h) : 1.0; }
  double mass(double a, double b) const { return kernel ? kernel->mass(a, b, t0, h) : b - a; }
};

struct LikelihoodTerms {
  double value = 0.0;
  Vec grad;
  Mat hess;
  double exposure = 0.0;  // sum of int K C dt
};

/// value = sum_events K theta'X - sum int K C exp(theta'X); grad and Hessian exact. order: 0 value,
/// 1 adds the gradient, 2 adds the Hessian.
inline LikelihoodTerms likelihood_terms(const DataView& view, const Vec& theta, const Localization& loc, int order = 2) {
  const int q = view.dim();
  if (theta.size() != q) throw ConfigError("parameter dimension does not match covariates");
  LikelihoodTerms out;
  out.grad = Vec::Zero(q);
  out.hess = Mat::Zero(q, q);
  const double T = view.horizon();
  const double lo = loc.lo(T), hi = loc.hi(T);
  for (const auto& pd : view.pairs()) {
    auto first = std::lower_bound(pd.times.begin(), pd.times.end(), lo);
    for (auto it = first; it != pd.times.end() && *it <= hi; ++it) {
      const double w = loc.weight(*it);
      if (w == 0.0) continue;
      const Vec& x = pd.event_x[it - pd.times.begin()];
      out.value += w * theta.dot(x);
      if (order >= 1) out.grad += w * x;
    }
    for (const auto& seg : pd.segments) {
      const double a = std::max(lo, seg.a), b = std::min(hi, seg.b);
      if (!(a < b)) continue;
      auto add = [&](const Vec& x, double w) {
        const double e = std::exp(theta.dot(x));
        out.value -= w * e;
        out.exposure += w;
        if (order >= 1) out.grad -= (w * e) * x;
        if (order >= 2) out.hess.noalias() -= (w * e) * x * x.transpose();
      };
      if (seg.x.size()) {
        add(seg.x, loc.mass(a, b));
      } else {
        std::vector<double> breaks;
        if (loc.kernel)
          for (double k : loc.kernel->kinks()) breaks.push_back(loc.t0 + k * loc.h);
        const double panel = loc.kernel ? loc.h / 20.0 : T / 400.0;
        quad::for_each_node(a, b, panel, breaks, [&](double t, double wt) {
          const double w = wt * loc.weight(t);
          if (w != 0.0) add(view.covariates().eval(pd.pair, t), w);
        });
      }
    }
  }
  return out;
}

inline double local_loglik(const DataView& view, const Vec& theta, double t0, double h, const Kernel& K) {
  return likelihood_terms(view, theta, {&K, t0, h}, 0).value;
}

struct ScoreHessian {
  Vec grad;
  Mat hess;
};

inline ScoreHessian local_score_hessian(const DataView& view, const Vec& theta, double t0, double h, const Kernel& K) {
  auto t = likelihood_terms(view, theta, {&K, t0, h}, 2);
  return {std::move(t.grad), std::move(t.hess)};
}

/// p-bar(t0) = int K_{h,t0}(s) (1/r_n) sum C(s) ds, exact per activity interval.
inline double pbar_hat(const DynamicNetwork& net, double t0, double h, const Kernel& K) {
  if (t0 < 0.0 || t0 > net.horizon()) throw DomainError("t0 outside [0, T]");
  if (net.pair_count() <= 0.0) return 0.0;
  double s = 0.0;
  for (const auto& [p, list] : net.activity())
    for (const auto& iv : list) s += K.mass(iv.start, iv.end, t0, h);
  return s / net.pair_count();
}

/// Sigma-hat(t, theta) = -[sum int K C X X' exp(theta'X)] / [sum int K C].
inline Mat sigma_hat(const DataView& view, const Vec& theta, double t, double h, const Kernel& K) {
  const auto terms = likelihood_terms(view, theta, {&K, t, h}, 2);
  if (!(terms.exposure > 0.0)) throw NoDataInWindow("no exposure in the window around t=" + std::to_string(t));
  Mat s = terms.hess / terms.exposure;  // hess already carries the minus sign
  return 0.5 * (s + s.transpose());
}

struct NewtonResult {
  Vec theta;
  Vec grad;
  Mat hess;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton ascent on a concave objective; eval(theta, order) returns LikelihoodTerms.
template <class Eval>
NewtonResult newton_maximize(Eval&& eval, Vec theta, double tol, int max_iter = 50) {
  NewtonResult r;
  auto cur = eval(theta, 2);
  for (int it = 0;; ++it) {
    r.iterations = it;
    if (cur.grad.norm() <= tol) {
      r.converged = true;
      break;
    }
    if (it >= max_iter) break;
    const Mat neg = -cur.hess;
    Eigen::LDLT<Mat> ldlt(neg);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
      throw NumericError("Hessian is singular");
    const Vec step = ldlt.solve(cur.grad);
    if (!step.allFinite()) throw NumericError("Newton step is not finite");
    // Close to the optimum the predicted gain drops below the rounding noise of the objective; the
    // full step is then taken without a line search.
    if (cur.grad.dot(step) <= 1e-9 * (1.0 + std::abs(cur.value))) {
      theta += step;
      cur = eval(theta, 2);
      continue;
    }
    double scale = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half, scale *= 0.5) {
      const Vec cand = theta + scale * step;
      const double v = eval(cand, 0).value;
      if (std::isfinite(v) && v >= cur.value - 1e-14 * (1.0 + std::abs(cur.value))) {
        theta = cand;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    cur = eval(theta, 2);
  }
  r.theta = theta;
  r.grad = cur.grad;
  r.hess = cur.hess;
  r.value = cur.value;
  return r;
}

struct GlobalFit {
  Vec theta;
  double loglik = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// theta-bar: maximizer of the unkernelized likelihood.
inline GlobalFit fit_global(const DataView& view, std::optional<Vec> init = std::nullopt) {
  if (view.event_count() == 0) throw DataError("global fit needs at least one event");
  const Localization loc{};
  auto eval = [&](const Vec& th, int order) { return likelihood_terms(view, th, loc, order); };
  Vec start = init.value_or(Vec::Zero(view.dim()));
  const double exposure = eval(start, 0).exposure;
  if (!(exposure > 0.0)) throw NoDataInWindow("no exposure on [0, T]");
  auto r = newton_maximize(eval, start, 1e-8 * std::max(1.0, exposure));
  if (!r.converged) throw NonConvergence("global fit did not converge", r.theta);
  return {r.theta, r.value, r.grad.norm(), r.iterations, true};
}

struct LocalFit {
  double t0 = 0.0;
  double h = 0.0;
  Vec theta;
  double grad_norm = 0.0;
  Mat hessian;
  int iterations = 0;
  bool converged = false;
  double kantorovich_r = 0.0;
  double loglik = 0.0;
  double exposure = 0.0;  // r_n * p-bar(t0)
};

struct LocalFitOptions {
  bool check_boundary = true;
  bool throw_on_nonconvergence = true;
  int max_iter = 50;
};

/// theta-hat(t0) by damped Newton from init (default: theta-bar, falling back to 0).
inline LocalFit fit_local(const DataView& view, double t0, double h, const Kernel& K, std::optional<Vec> init = std::nullopt,
                          const LocalFitOptions& opt = {}) {
  if (!(h > 0.0)) throw DomainError("bandwidth must be positive");
  const double T = view.horizon();
  if (opt.check_boundary && (t0 < h - 1e-12 || t0 > T - h + 1e-12))
    throw DomainError("t0 must lie in [h, T - h]");
  const Localization loc{&K, t0, h};
  auto eval = [&](const Vec& th, int order) { return likelihood_terms(view, th, loc, order); };
  if (!init) {
    try {
      init = fit_global(view).theta;
    } catch (const Error&) {
      init = Vec::Zero(view.dim());
    }
  }
  const auto first = eval(*init, 2);
  if (!(first.exposure > 0.0)) throw NoDataInWindow("no active pair in the window around t0=" + std::to_string(t0));

  LocalFit fit;
  fit.t0 = t0;
  fit.h = h;
  fit.exposure = first.exposure;
  {
    Eigen::SelfAdjointEigenSolver<Mat> eig(-first.hess);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin > 0.0) {
      const double B = 1.0 / lmin;
      const double eta = (-first.hess).ldlt().solve(first.grad).norm();
      const double khat = std::sqrt(static_cast<double>(view.dim())) * view.covariates().bound();
      const double tau = init->norm() + 2.0 * eta;
      const double KL = khat * khat * khat * std::exp(tau * khat) * first.exposure;
      fit.kantorovich_r = B * KL * eta;
    } else {
      fit.kantorovich_r = kInf;
    }
  }
  const auto r = newton_maximize(eval, *init, 1e-8 * std::max(1.0, first.exposure), opt.max_iter);
  fit.theta = r.theta;
  fit.grad_norm = r.grad.norm();
  fit.hessian = r.hess;
  fit.iterations = r.iterations;
  fit.converged = r.converged;
  fit.loglik = r.value;
  if (!r.converged && opt.throw_on_nonconvergence)
    throw NonConvergence("local fit at t0=" + std::to_string(t0) + " did not converge", r.theta);
  return fit;
}

}  // namespace netgof
