#pragma once

// Kernels on [-1, 1], their distribution functions, and the self-convolution constant
// K4 = int_0^2 (int_{-1}^1 K(v) K(u + v) dv)^2 du.

#include "netgof/quadrature.hpp"
#include "netgof/types.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace netgof {

class Kernel {
 public:
  enum class Name { Epanechnikov, Triangular, Box };

  explicit Kernel(Name name = Name::Epanechnikov, double scale = 1.0) : name_(name), c_(scale) {
    if (!(scale > 0.0)) throw ConfigError("kernel scale must be positive");
  }

  static Kernel from_name(const std::string& s) {
    if (s == "epanechnikov") return Kernel(Name::Epanechnikov);
    if (s == "triangular") return Kernel(Name::Triangular);
    if (s == "box") return Kernel(Name::Box);
    throw ConfigError("unknown kernel '" + s + "'");
  }

  Name name() const { return name_; }
  std::string name_string() const {
    switch (name_) {
      case Name::Epanechnikov: return "epanechnikov";
      case Name::Triangular: return "triangular";
      case Name::Box: return "box";
    }
    return "";
  }
  double scale() const { return c_; }
  /// The box kernel is discontinuous and only kept as an analytic reference.
  bool hoelder_continuous() const { return name_ != Name::Box; }

  double operator()(double u) const {
    if (u < -1.0 || u > 1.0) return 0.0;
    switch (name_) {
      case Name::Epanechnikov: return c_ * 0.75 * (1.0 - u * u);
      case Name::Triangular: return c_ * (1.0 - std::abs(u));
      case Name::Box: return c_ * 0.5;
    }
    return 0.0;
  }

  /// int_{-1}^{u} K.
  double cdf(double u) const {
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return c_;
    switch (name_) {
      case Name::Epanechnikov: return c_ * (0.75 * (u - u * u * u / 3.0) + 0.5);
      case Name::Triangular: return c_ * (u <= 0.0 ? 0.5 * (1.0 + u) * (1.0 + u) : 1.0 - 0.5 * (1.0 - u) * (1.0 - u));
      case Name::Box: return c_ * 0.5 * (u + 1.0);
    }
    return 0.0;
  }

  /// int K(u)^2 du.
  double l2_squared() const {
    switch (name_) {
      case Name::Epanechnikov: return c_ * c_ * 0.6;
      case Name::Triangular: return c_ * c_ * 2.0 / 3.0;
      case Name::Box: return c_ * c_ * 0.5;
    }
    return 0.0;
  }

  /// Points where K or its derivative is discontinuous.
  std::vector<double> kinks() const {
    if (name_ == Name::Triangular) return {-1.0, 0.0, 1.0};
    return {-1.0, 1.0};
  }

  /// K_{h,t0}(t) = K((t - t0) / h) / h.
  double scaled(double t, double t0, double h) const { return (*this)((t - t0) / h) / h; }

  /// int_a^b K_{h,t0}(t) dt.
  double mass(double a, double b, double t0, double h) const {
    if (!(a < b)) return 0.0;
    return cdf((b - t0) / h) - cdf((a - t0) / h);
  }

  double k4() const;

 private:
  Name name_;
  double c_;
  mutable std::optional<double> k4_;
};

/// Nested composite Simpson with panels no wider than `step`, split at the kernel kinks so each panel
/// integrates a polynomial piece.
inline double k4_constant(const Kernel& K, double step = 1e-3) {
  const auto kinks = K.kinks();
  auto inner = [&](double u) {
    // v ranges over [-1, 1 - u]; kinks of K(v) and K(u + v).
    std::vector<double> br{-1.0, 1.0 - u};
    for (double k : kinks) {
      br.push_back(k);
      br.push_back(k - u);
    }
    std::sort(br.begin(), br.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double lo = std::max(-1.0, br[i]);
      const double hi = std::min(1.0 - u, br[i + 1]);
      if (hi - lo > 1e-15) s += quad::simpson([&](double v) { return K(v) * K(u + v); }, lo, hi, step);
    }
    return s;
  };
  // The convolution has kinks where the shifted kinks cross: u = kink_a - kink_b.
  std::vector<double> br{0.0, 2.0};
  for (double a : kinks)
    for (double b : kinks) {
      const double d = a - b;
      if (d > 0.0 && d < 2.0) br.push_back(d);
    }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i)
    total += quad::simpson([&](double u) { const double g = inner(u); return g * g; }, br[i], br[i + 1], step);
  return total;
}

inline double Kernel::k4() const {
  if (!k4_) k4_ = k4_constant(*this);
  return *k4_;
}

}  // namespace netgof
