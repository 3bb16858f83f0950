#pragma once

// Bandwidth choice by one-step-ahead prediction error of a locally linear fit with the one-sided kernel
// K~(u) = 1/2 on [-2, 0], followed by the conversion h = h* / rho.

#include "netgof/likelihood.hpp"

#include <cmath>
#include <vector>

namespace netgof {

inline constexpr double kBandwidthRho = 1.82;

struct PredictionOptions {
  std::optional<double> delta_pred;  // default h / 2
  double split = 0.5;                // prediction windows tile [split * T, T]
  int max_iter = 50;
};

struct PredictionError {
  double error = 0.0;
  int windows_used = 0;
  int windows_skipped = 0;
  int nonconverged = 0;
};

namespace detail {

// Locally linear likelihood on the past window [t* - 2h, t*): parameters (a, b), log-intensity
// a'X + b'X (t - t*) / h, weight K~((t - t*) / h) / h.
inline LikelihoodTerms local_linear_terms(const DataView& view, const Vec& ab, double tstar, double h, int order) {
  const int q = view.dim();
  const double lo = std::max(0.0, tstar - 2.0 * h), hi = tstar;
  const double kw = 0.5 / h;
  LikelihoodTerms out;
  out.grad = Vec::Zero(2 * q);
  out.hess = Mat::Zero(2 * q, 2 * q);
  Vec z(2 * q);
  auto design = [&](const Vec& x, double t) {
    const double u = (t - tstar) / h;
    z.head(q) = x;
    z.tail(q) = u * x;
  };
  for (const auto& pd : view.pairs()) {
    auto first = std::lower_bound(pd.times.begin(), pd.times.end(), lo);
    for (auto it = first; it != pd.times.end() && *it < hi; ++it) {
      design(pd.event_x[it - pd.times.begin()], *it);
      out.value += kw * ab.dot(z);
      if (order >= 1) out.grad += kw * z;
    }
    for (const auto& seg : pd.segments) {
      const double a = std::max(lo, seg.a), b = std::min(hi, seg.b);
      if (!(a < b)) continue;
      quad::for_each_node(a, b, h / 20.0, {}, [&](double t, double wt) {
        design(view.x_at(pd, seg, t), t);
        const double w = wt * kw;
        const double e = std::exp(ab.dot(z));
        out.value -= w * e;
        out.exposure += w;
        if (order >= 1) out.grad -= (w * e) * z;
        if (order >= 2) out.hess.noalias() -= (w * e) * z * z.transpose();
      });
    }
  }
  return out;
}

}  // namespace detail

/// Mean squared difference between predicted and observed per-pair counts on windows
/// [t*, t* + delta_pred) tiling the second part of [0, T], each predicted from [t* - 2h, t*).
/// Windows without past events or exposure are skipped; non-converged fits use the last iterate.
inline PredictionError prediction_error(const DataView& view, double h, const PredictionOptions& opt = {}) {
  if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
  const double T = view.horizon();
  const double dp = opt.delta_pred.value_or(0.5 * h);
  if (!(dp > 0.0)) throw ConfigError("prediction window must be positive");
  const int q = view.dim();
  PredictionError res;
  double sum = 0.0;
  Vec warm = Vec::Zero(2 * q);
  const int windows = static_cast<int>(std::floor((T - opt.split * T) / dp + 1e-9));
  for (int wi = 0; wi < windows; ++wi) {
    const double tstar = opt.split * T + wi * dp;
    const double tend = tstar + dp;
    auto eval = [&](const Vec& ab, int order) { return detail::local_linear_terms(view, ab, tstar, h, order); };
    const auto first = eval(warm, 0);
    std::size_t past_events = 0;
    for (const auto& pd : view.pairs())
      past_events += std::lower_bound(pd.times.begin(), pd.times.end(), tstar) -
                     std::lower_bound(pd.times.begin(), pd.times.end(), std::max(0.0, tstar - 2.0 * h));
    if (past_events == 0 || !(first.exposure > 0.0)) {
      ++res.windows_skipped;
      continue;
    }
    NewtonResult fit;
    try {
      fit = newton_maximize(eval, warm, 1e-8 * std::max(1.0, first.exposure), opt.max_iter);
    } catch (const NumericError&) {
      ++res.windows_skipped;
      continue;
    }
    if (!fit.converged) ++res.nonconverged;
    if (!fit.theta.allFinite()) {
      ++res.windows_skipped;
      continue;
    }
    if (fit.converged) warm = fit.theta;

    double se = 0.0;
    int pairs = 0;
    for (const auto& pd : view.pairs()) {
      double pred = 0.0;
      bool active = false;
      for (const auto& seg : pd.segments) {
        const double a = std::max(tstar, seg.a), b = std::min(tend, seg.b);
        if (!(a < b)) continue;
        active = true;
        quad::for_each_node(a, b, h / 20.0, {}, [&](double t, double wt) {
          const Vec x = view.x_at(pd, seg, t);
          const double u = (t - tstar) / h;
          pred += wt * std::exp(fit.theta.head(q).dot(x) + u * fit.theta.tail(q).dot(x));
        });
      }
      if (!active) continue;
      const auto obs = std::lower_bound(pd.times.begin(), pd.times.end(), tend) -
                       std::lower_bound(pd.times.begin(), pd.times.end(), tstar);
      se += (pred - static_cast<double>(obs)) * (pred - static_cast<double>(obs));
      ++pairs;
    }
    if (pairs == 0) {
      ++res.windows_skipped;
      continue;
    }
    sum += se / pairs;
    ++res.windows_used;
  }
  if (res.windows_used == 0) throw DataError("every prediction window was skipped for h=" + std::to_string(h));
  res.error = sum / res.windows_used;
  return res;
}

struct BandwidthCurve {
  std::vector<double> h;
  std::vector<double> error;
  double h_star = 0.0;
  double h_converted = 0.0;
};

/// argmin of the curve (ties to the smaller h) and h* / rho.
inline BandwidthCurve select_bandwidth(std::vector<double> h, std::vector<double> error) {
  if (h.size() != error.size()) throw ConfigError("bandwidth grid and errors differ in length");
  if (h.size() < 3) throw ConfigError("bandwidth selection needs at least 3 grid points");
  std::vector<std::size_t> order(h.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
  BandwidthCurve c;
  for (auto k : order) {
    c.h.push_back(h[k]);
    c.error.push_back(error[k]);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < c.h.size(); ++k)
    if (c.error[k] < c.error[best]) best = k;
  c.h_star = c.h[best];
  c.h_converted = c.h_star / kBandwidthRho;
  return c;
}

/// Without an explicit delta_pred every h is scored on the same windows, of length min(grid) / 2.
inline BandwidthCurve bandwidth_curve(const DataView& view, const std::vector<double>& grid, PredictionOptions opt = {}) {
  if (grid.empty()) throw ConfigError("empty bandwidth grid");
  if (!opt.delta_pred) opt.delta_pred = 0.5 * *std::min_element(grid.begin(), grid.end());
  std::vector<double> err;
  for (double h : grid) err.push_back(prediction_error(view, h, opt).error);
  return select_bandwidth(grid, err);
}

}  // namespace netgof
