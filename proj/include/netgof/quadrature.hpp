#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace netgof::quad {

/// exp(a) * expm1(d) / d, the integral of exp(a + d u) over u in [0, 1].
inline double exp_linear_mean(double a, double d) {
  if (std::abs(d) < 1e-8) return std::exp(a) * (1.0 + d / 2.0 + d * d / 6.0);
  return std::exp(a) * std::expm1(d) / d;
}

/// 3-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 3> kGL3Nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
inline constexpr std::array<double, 3> kGL3Weights{0.5555555555555556, 0.8888888888888888, 0.5555555555555556};

/// Calls f(t, weight) on composite 3-point Gauss-Legendre nodes over [a, b] with panels no longer than
/// max_panel; the breakpoints (sorted or not) become panel boundaries.
template <class F>
void for_each_node(double a, double b, double max_panel, std::vector<double> breaks, F&& f) {
  if (!(a < b)) return;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]);
    const double hi = std::min(b, breaks[k + 1]);
    if (!(lo < hi)) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_panel - 1e-9)));
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * width;
      for (int n = 0; n < 3; ++n) f(mid + 0.5 * width * kGL3Nodes[n], 0.5 * width * kGL3Weights[n]);
    }
  }
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                               int max_depth = 40) {
  if (!(a < b)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Composite Simpson with at least `min_panels` panels, at most `step` wide.
template <class F>
double simpson(F&& f, double a, double b, double step) {
  if (!(a < b)) return 0.0;
  int n = std::max(2, static_cast<int>(std::ceil((b - a) / step - 1e-9)));
  if (n % 2) ++n;
  const double hstep = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * hstep);
  return s * hstep / 3.0;
}

/// Trapezoid rule over a (possibly nonuniform) grid.
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) s += 0.5 * (x[k + 1] - x[k]) * (y[k] + y[k + 1]);
  return s;
}

/// Trapezoid weights for a grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double d = 0.5 * (x[k + 1] - x[k]);
    w[k] += d;
    w[k + 1] += d;
  }
  return w;
}

/// Uniform grid over [a, b] with spacing at most `step`, endpoints included.
inline std::vector<double> uniform_grid(double a, double b, double step) {
  if (!(a < b)) return {a};
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / step - 1e-9)));
  std::vector<double> g(n + 1);
  for (int k = 0; k <= n; ++k) g[k] = a + (b - a) * k / n;
  return g;
}

}  // namespace netgof::quad
