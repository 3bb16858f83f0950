#pragma once

// L2 test for a constant parameter: T_n, the centering A_n, the variance B (and a martingale-based
// cross-check), standardized value and two-sided p-value.

#include "netgof/likelihood.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace netgof {

/// Continuous weight supported on [lo, hi]. The default plateau is 1 on [delta + taper, T - delta - taper]
/// with cubic smoothstep ramps.
class WeightFunction {
 public:
  static WeightFunction plateau(double horizon, double delta, double taper) {
    if (!(delta >= 0.0) || !(taper >= 0.0)) throw ConfigError("weight cut-off and taper must be nonnegative");
    if (!(delta + taper < horizon - delta - taper)) throw ConfigError("weight function support is empty");
    WeightFunction w;
    w.lo_ = delta;
    w.hi_ = horizon - delta;
    w.delta_ = delta;
    w.taper_ = taper;
    const double lo = w.lo_, hi = w.hi_;
    w.fn_ = [lo, hi, taper](double t) {
      if (t < lo || t > hi) return 0.0;
      auto ramp = [taper](double d) {
        if (taper <= 0.0 || d >= taper) return 1.0;
        const double x = d / taper;
        return x * x * (3.0 - 2.0 * x);
      };
      return std::min(ramp(t - lo), ramp(hi - t));
    };
    return w;
  }

  /// delta = h, taper = h / 2.
  static WeightFunction standard(double horizon, double h) { return plateau(horizon, h, 0.5 * h); }

  static WeightFunction custom(double lo, double hi, std::function<double(double)> fn) {
    if (!(lo < hi)) throw ConfigError("weight support must be a nonempty interval");
    WeightFunction w;
    w.lo_ = lo;
    w.hi_ = hi;
    w.delta_ = lo;
    w.fn_ = [lo, hi, fn = std::move(fn)](double t) { return (t < lo || t > hi) ? 0.0 : fn(t); };
    return w;
  }

  double operator()(double t) const { return fn_(t); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double delta() const { return delta_; }
  double taper() const { return taper_; }

 private:
  WeightFunction() = default;
  double lo_ = 0.0, hi_ = 1.0, delta_ = 0.0, taper_ = 0.0;
  std::function<double(double)> fn_;
};

/// Sigma-hat and p-bar on a time grid, with inverses.
struct SigmaPath {
  std::vector<double> grid;
  std::vector<Mat> sigma;
  std::vector<Mat> inv;
  std::vector<Mat> inv2;
  std::vector<double> pbar;
  std::vector<char> invertible;
  std::vector<double> condition;

  static SigmaPath from_values(std::vector<double> grid, std::vector<Mat> sigmas, std::vector<double> pbars) {
    if (grid.size() != sigmas.size() || grid.size() != pbars.size()) throw ConfigError("sigma path sizes differ");
    SigmaPath p;
    p.grid = std::move(grid);
    p.pbar = std::move(pbars);
    for (auto& s : sigmas) p.push(std::move(s));
    return p;
  }

  void push(Mat s) {
    const int q = static_cast<int>(s.rows());
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(-s);
    const double lmin = eig.eigenvalues().minCoeff(), lmax = eig.eigenvalues().maxCoeff();
    const bool ok = lmax > 0.0 && lmin > 1e-12 * lmax;
    invertible.push_back(ok ? 1 : 0);
    condition.push_back(ok ? lmax / lmin : kInf);
    Mat i = ok ? Mat(s.inverse()) : Mat(Mat::Zero(q, q));
    inv.push_back(i);
    inv2.push_back(i * i);
    sigma.push_back(std::move(s));
  }
};

/// Sigma-hat(t, theta) and p-bar(t) on the grid; points without exposure are flagged non-invertible.
inline SigmaPath sigma_path(const DataView& view, const Vec& theta, double h, const Kernel& K, const std::vector<double>& grid) {
  SigmaPath p;
  const int q = view.dim();
  for (double t : grid) {
    const auto terms = likelihood_terms(view, theta, {&K, t, h}, 2);
    p.grid.push_back(t);
    p.pbar.push_back(view.r_n() > 0.0 ? terms.exposure / view.r_n() : 0.0);
    if (terms.exposure > 0.0)
      p.push(terms.hess / terms.exposure);
    else
      p.push(Mat::Zero(q, q));
  }
  return p;
}

namespace detail {

inline void require_invertible(const SigmaPath& path, const WeightFunction& w, std::size_t k) {
  if (w(path.grid[k]) > 0.0 && (!path.invertible[k] || !(path.pbar[k] > 0.0)))
    throw TestError("Sigma-hat is singular or p-bar vanishes at t=" + std::to_string(path.grid[k]));
}

}  // namespace detail

/// A_n = (1/r_n) sum_events X(s)' [int h K_{h,t}(s)^2 Sigma_t^{-2} w(t) / p-bar(t) dt] X(s), inner
/// integral by trapezoid on the path grid.
inline double centering_An(const DataView& view, const SigmaPath& path, double h, const Kernel& K, const WeightFunction& w) {
  const auto& g = path.grid;
  const auto cw = quad::trapezoid_weights(g);
  const int q = view.dim();
  std::vector<Mat> M(g.size(), Mat::Zero(q, q));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double wk = w(g[k]);
    if (wk <= 0.0) continue;
    detail::require_invertible(path, w, k);
    M[k] = path.inv2[k] * (cw[k] * h * wk / path.pbar[k]);
  }
  double total = 0.0;
  for (const auto& pd : view.pairs())
    for (std::size_t e = 0; e < pd.times.size(); ++e) {
      const double s = pd.times[e];
      const Vec& x = pd.event_x[e];
      auto k0 = std::lower_bound(g.begin(), g.end(), s - h) - g.begin();
      for (auto k = static_cast<std::size_t>(k0); k < g.size() && g[k] <= s + h; ++k) {
        const double kh = K.scaled(s, g[k], h);
        if (kh == 0.0 || w(g[k]) <= 0.0) continue;
        total += kh * kh * x.dot(M[k] * x);
      }
    }
  return view.r_n() > 0.0 ? total / view.r_n() : 0.0;
}

/// B = 4 K4 int trace(Sigma^{-2}) w^2 by trapezoid on the path grid.
inline double variance_B(const SigmaPath& path, const WeightFunction& w, double K4) {
  std::vector<double> y(path.grid.size(), 0.0);
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    const double wk = w(path.grid[k]);
    if (wk <= 0.0) continue;
    detail::require_invertible(path, w, k);
    y[k] = path.inv2[k].trace() * wk * wk;
  }
  return 4.0 * K4 * quad::trapezoid(path.grid, y);
}

struct MartingaleVarianceOptions {
  std::size_t event_cap = 50000;
  double s_step_fraction = 1.0 / 20.0;  // s grid step as a fraction of h
};

/// Cross-check of B: 4/(h r_n^2) sum_ij int sum_{kl != ij} tau_{ij,kl}(s)^2 C lambda-hat ds with
/// tau_{ij,kl}(s) = X_ij(s)' v_kl(s), v_kl(s) = int_{t0} h K(s - t0) K(t - t0) Sigma^{-2} w / p-bar dt0
/// applied to int_{[0,s)} K_{h,t0}(t) X_kl(t) dM-hat_kl(t), where dM-hat = dN - lambda-hat dt and
/// lambda-hat = exp(theta-bar' X). Piecewise-constant covariates only.
inline double variance_B_martingale(const DataView& view, const SigmaPath& path, double h, const Kernel& K,
                                    const WeightFunction& w, const Vec& theta_bar, const MartingaleVarianceOptions& opt = {}) {
  if (!view.covariates().piecewise_constant())
    throw ConfigError("martingale variance needs piecewise-constant covariates");
  if (view.event_count() > opt.event_cap)
    throw TestError("instance too large for the martingale variance (" + std::to_string(view.event_count()) + " events)");
  const int q = view.dim();
  const double T = view.horizon();
  const auto& g = path.grid;
  const auto cw = quad::trapezoid_weights(g);
  std::vector<Mat> M(g.size(), Mat::Zero(q, q));
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double wk = w(g[k]);
    if (wk <= 0.0) continue;
    detail::require_invertible(path, w, k);
    M[k] = path.inv2[k] * (cw[k] * h * wk / path.pbar[k]);
    ks.push_back(k);
  }
  if (ks.empty()) return 0.0;
  const double s_lo = std::max(0.0, g[ks.front()] - h), s_hi = std::min(T, g[ks.back()] + h);
  const auto sgrid = quad::uniform_grid(s_lo, s_hi, h * opt.s_step_fraction);
  const std::size_t S = sgrid.size();
  const std::size_t P = view.pairs().size();

  // V[p][s]: v_kl(s) for pair p.
  std::vector<std::vector<Vec>> V(P, std::vector<Vec>(S, Vec::Zero(q)));
  for (std::size_t pi = 0; pi < P; ++pi) {
    const auto& pd = view.pairs()[pi];
    std::vector<double> lam(pd.segments.size());
    for (std::size_t sg = 0; sg < pd.segments.size(); ++sg) lam[sg] = std::exp(theta_bar.dot(pd.segments[sg].x));
    for (std::size_t k : ks) {
      const double t0 = g[k];
      for (std::size_t si = 0; si < S; ++si) {
        const double s = sgrid[si];
        const double ks_val = K.scaled(s, t0, h);
        if (ks_val == 0.0) continue;
        Vec a = Vec::Zero(q);
        for (std::size_t e = 0; e < pd.times.size() && pd.times[e] < s; ++e) {
          const double kt = K.scaled(pd.times[e], t0, h);
          if (kt != 0.0) a += kt * pd.event_x[e];
        }
        for (std::size_t sg = 0; sg < pd.segments.size(); ++sg) {
          const auto& seg = pd.segments[sg];
          const double b = std::min(seg.b, s);
          if (!(seg.a < b)) continue;
          a -= (K.mass(seg.a, b, t0, h) * lam[sg]) * seg.x;
        }
        V[pi][si] += ks_val * (M[k] * a);
      }
    }
  }
  std::vector<Mat> Ssum(S, Mat::Zero(q, q));
  for (std::size_t pi = 0; pi < P; ++pi)
    for (std::size_t si = 0; si < S; ++si) Ssum[si].noalias() += V[pi][si] * V[pi][si].transpose();

  double total = 0.0;
  for (std::size_t pi = 0; pi < P; ++pi) {
    const auto& pd = view.pairs()[pi];
    std::vector<double> y(S, 0.0);
    for (std::size_t si = 0; si < S; ++si) {
      const double s = sgrid[si];
      for (const auto& seg : pd.segments) {
        if (!(seg.a <= s && s < seg.b)) continue;
        const double lam = std::exp(theta_bar.dot(seg.x));
        const double self = seg.x.dot(V[pi][si]);
        y[si] = (seg.x.dot(Ssum[si] * seg.x) - self * self) * lam;
        break;
      }
    }
    total += quad::trapezoid(sgrid, y);
  }
  const double rn = view.r_n();
  return 4.0 / (h * rn * rn) * total;
}

struct StatisticPath {
  std::vector<double> grid;  // grid points actually used
  std::vector<Vec> theta;
  std::vector<double> pbar;
  std::vector<double> weight;
  std::vector<int> iterations;
  std::vector<char> converged;
  std::vector<double> excluded;  // grid points without data
  double Tn = 0.0;
};

/// Trapezoid of ||theta-hat - theta-bar||^2 p-bar w over the given grid.
inline double statistic_from_path(const std::vector<double>& grid, const std::vector<Vec>& theta, const Vec& theta_bar,
                                  const std::vector<double>& pbar, const std::vector<double>& weight) {
  std::vector<double> y(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) y[k] = (theta[k] - theta_bar).squaredNorm() * pbar[k] * weight[k];
  return quad::trapezoid(grid, y);
}

/// Local fits along the grid (warm-started), excluding points without data; more than 20% excluded
/// raises a TestError.
inline StatisticPath test_statistic(const DataView& view, double h, const Kernel& K, const WeightFunction& w,
                                    const std::vector<double>& grid, const Vec& theta_bar) {
  StatisticPath out;
  Vec init = theta_bar;
  for (double t0 : grid) {
    try {
      const auto fit = fit_local(view, t0, h, K, init);
      out.grid.push_back(t0);
      out.theta.push_back(fit.theta);
      out.pbar.push_back(fit.exposure / view.r_n());
      out.weight.push_back(w(t0));
      out.iterations.push_back(fit.iterations);
      out.converged.push_back(fit.converged ? 1 : 0);
      init = fit.theta;
    } catch (const NoDataInWindow&) {
      out.excluded.push_back(t0);
    }
  }
  if (out.excluded.size() * 5 > grid.size())
    throw TestError(std::to_string(out.excluded.size()) + " of " + std::to_string(grid.size()) +
                    " grid points have no data in their window");
  out.Tn = statistic_from_path(out.grid, out.theta, theta_bar, out.pbar, out.weight);
  return out;
}

struct TestOptions {
  double h = 0.25;
  Kernel kernel{};
  std::optional<WeightFunction> weight;  // default: WeightFunction::standard(T, h)
  double grid_step_fraction = 0.25;      // t0 grid step / h
  double sigma_step_fraction = 0.05;     // Sigma path step / h
  bool martingale_variance = false;
  MartingaleVarianceOptions martingale{};
};

struct TestResult {
  double Tn = 0.0;
  double An = 0.0;
  double Bhat = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double h = 0.0;
  double r_n = 0.0;
  Vec theta_bar;
  int grid_used = 0;
  int grid_excluded = 0;
  double min_exposure = 0.0;       // min over the grid of r_n p-bar
  double max_condition = 0.0;      // max over the Sigma path of cond(Sigma-hat)
  std::optional<double> Bhat_martingale;
  StatisticPath path;
};

inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

inline TestResult run_test(const DataView& view, const TestOptions& opt) {
  const double h = opt.h;
  if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
  const double T = view.horizon();
  const WeightFunction w = opt.weight ? *opt.weight : WeightFunction::standard(T, h);
  if (w.lo() < h - 1e-12 || w.hi() > T - h + 1e-12) throw DomainError("weight support must lie in [h, T - h]");
  const Kernel& K = opt.kernel;

  TestResult res;
  res.h = h;
  res.r_n = view.r_n();
  res.theta_bar = fit_global(view).theta;
  const auto grid = quad::uniform_grid(w.lo(), w.hi(), h * opt.grid_step_fraction);
  res.path = test_statistic(view, h, K, w, grid, res.theta_bar);
  res.Tn = res.path.Tn;
  res.grid_used = static_cast<int>(res.path.grid.size());
  res.grid_excluded = static_cast<int>(res.path.excluded.size());
  res.min_exposure = kInf;
  for (double p : res.path.pbar) res.min_exposure = std::min(res.min_exposure, p * res.r_n);

  const auto sgrid = quad::uniform_grid(w.lo(), w.hi(), h * opt.sigma_step_fraction);
  const auto spath = sigma_path(view, res.theta_bar, h, K, sgrid);
  for (std::size_t k = 0; k < spath.grid.size(); ++k)
    if (w(spath.grid[k]) > 0.0) res.max_condition = std::max(res.max_condition, spath.condition[k]);
  res.An = centering_An(view, spath, h, K, w);
  res.Bhat = variance_B(spath, w, K.k4());
  if (!(res.Bhat > 0.0) || !std::isfinite(res.Bhat)) throw DegenerateVariance("variance estimate is not positive");
  res.z = (res.r_n * std::sqrt(h) * res.Tn - res.An / std::sqrt(h)) / std::sqrt(res.Bhat);
  res.p_value = two_sided_p(res.z);
  if (opt.martingale_variance)
    res.Bhat_martingale = variance_B_martingale(view, spath, h, K, w, res.theta_bar, opt.martingale);
  return res;
}

}  // namespace netgof
