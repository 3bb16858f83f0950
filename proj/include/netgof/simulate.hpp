#pragma once

// Cox-intensity event simulation by thinning, and the compensator of the counting processes.

#include "netgof/network.hpp"
#include "netgof/process.hpp"
#include "netgof/quadrature.hpp"
#include "netgof/random.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace netgof {

/// lambda_p(t) = C_p(t) exp(theta(t)^T X_p(t)).
inline double intensity(const DynamicNetwork& net, const CovariateField& cov, const ParameterPath& theta, Pair p, double t) {
  if (!net.edge_active(p, t)) return 0.0;
  return std::exp(theta.at(t).dot(cov.eval(net.canonical(p), t)));
}

namespace detail {

// Sub-pieces of [a, b) on which X is constant and theta is constant or linear.
struct SmoothPiece {
  double a, b;
  Vec x;  // empty for callback covariates
};

inline std::vector<SmoothPiece> smooth_pieces(const CovariateField& cov, const ParameterPath& theta, Pair p, double a,
                                              double b) {
  std::vector<SmoothPiece> out;
  if (!(a < b)) return out;
  auto split_theta = [&](double lo, double hi, const Vec& x) {
    double cur = lo;
    for (double k : theta.knots_in(lo, hi)) {
      out.push_back({cur, k, x});
      cur = k;
    }
    out.push_back({cur, hi, x});
  };
  if (cov.piecewise_constant()) {
    for (const auto& piece : cov.pieces(p, a, b)) split_theta(piece.start, piece.end, piece.x);
  } else {
    split_theta(a, b, Vec());
  }
  return out;
}

// Exact integral of exp(theta(s)^T x) on a piece where x is fixed and theta linear or constant.
inline double exact_piece_integral(const ParameterPath& theta, const SmoothPiece& s) {
  const double len = s.b - s.a;
  if (theta.interpolation() == ParameterPath::Interpolation::Constant) {
    return len * std::exp(theta.at(0.5 * (s.a + s.b)).dot(s.x));
  }
  const double ga = theta.at(s.a).dot(s.x);
  const double gb = theta.at(s.b).dot(s.x);
  return len * quad::exp_linear_mean(ga, gb - ga);
}

}  // namespace detail

/// Integral over [0, t] of lambda_p(s). Exact where theta and X are piecewise constant or linear,
/// adaptive Simpson for callback covariates.
inline double compensator(const DynamicNetwork& net, const CovariateField& cov, const ParameterPath& theta, Pair p,
                          double t) {
  if (t < 0.0 || t > net.horizon()) throw DomainError("compensator time outside [0, T]");
  const Pair cp = net.canonical(p);
  double total = 0.0;
  for (const auto& iv : net.intervals(cp)) {
    const double a = iv.start;
    const double b = std::min(iv.end, t);
    if (!(a < b)) continue;
    for (const auto& piece : detail::smooth_pieces(cov, theta, cp, a, b)) {
      if (piece.x.size() > 0) {
        total += detail::exact_piece_integral(theta, piece);
      } else {
        auto f = [&](double s) { return std::exp(theta.at(s).dot(cov.eval(cp, s))); };
        total += quad::adaptive_simpson(f, piece.a, piece.b, 1e-11);
      }
    }
  }
  return total;
}

/// Ogata-style thinning per pair and activity interval with a piecewise dominating rate. Each pair
/// draws from its own stream keyed by (seed, pair).
inline EventLog simulate_cox(const DynamicNetwork& net, const CovariateField& cov, const ParameterPath& theta,
                             std::uint64_t seed) {
  if (theta.dim() != cov.dim()) throw ConfigError("parameter and covariate dimensions differ");
  std::map<Pair, std::vector<double>> events;
  for (const auto& [p, list] : net.activity()) {
    auto rng = pair_stream(seed, kTagCox, p);
    std::vector<double> times;
    for (const auto& iv : list) {
      // Dominating rate: grid max of theta^T X with 10% headroom.
      double gmax = -kInf;
      auto probe = [&](double s, const Vec& x) {
        const double g = theta.at(s).dot(x);
        if (!std::isfinite(g))
          throw SimulationError("non-finite intensity for pair " + to_string(p) + " at t=" + std::to_string(s));
        gmax = std::max(gmax, g);
      };
      for (const auto& piece : detail::smooth_pieces(cov, theta, p, iv.start, iv.end)) {
        const bool fixed = piece.x.size() > 0;
        constexpr int kProbes = 32;
        for (int k = 0; k <= kProbes; ++k) {
          double s = piece.a + (piece.b - piece.a) * k / kProbes;
          if (k == kProbes) s = std::nextafter(piece.b, piece.a);
          probe(s, fixed ? piece.x : cov.eval(p, s));
        }
      }
      const double bound = 1.1 * std::exp(gmax);
      if (!std::isfinite(bound) || bound <= 0.0)
        throw SimulationError("non-finite dominating rate for pair " + to_string(p));
      double t = iv.start;
      while (true) {
        t += exponential(rng, bound);
        if (t >= iv.end) break;
        const double lam = std::exp(theta.at(t).dot(cov.eval(p, t)));
        if (!std::isfinite(lam))
          throw SimulationError("non-finite intensity for pair " + to_string(p) + " at t=" + std::to_string(t));
        if (lam > bound)
          throw SimulationError("dominating rate exceeded for pair " + to_string(p) + " at t=" + std::to_string(t));
        if (uniform01(rng) * bound < lam) times.push_back(t);
      }
    }
    if (!times.empty()) events.emplace(p, std::move(times));
  }
  return EventLog(net.horizon(), std::move(events));
}

}  // namespace netgof
