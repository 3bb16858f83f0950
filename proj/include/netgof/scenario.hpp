#pragma once

// Synthetic test instances (static Erdos-Renyi network, X = (1, z) with z uniform on {-1, 1}) and a
// Monte-Carlo harness for the size and power of the test.

#include "netgof/goftest.hpp"
#include "netgof/simulate.hpp"

#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace netgof {

struct ScenarioSpec {
  int n = 30;
  double p = 0.3;
  double horizon = 1.0;
  Vec theta0 = (Vec(2) << 3.0, 0.5).finished();
  double swing = 0.0;  // amplitude of sin(2 pi t / T) added to the intercept
};

struct Instance {
  DynamicNetwork net;
  CovariateField cov;
  EventLog log;
  ParameterPath theta;
};

inline ParameterPath scenario_path(const ScenarioSpec& spec) {
  if (spec.swing == 0.0) return ParameterPath::constant(spec.theta0, spec.horizon);
  const Vec base = spec.theta0;
  const double amp = spec.swing, T = spec.horizon;
  return ParameterPath::from_function(
      [base, amp, T](double t) {
        Vec v = base;
        v[0] += amp * std::sin(2.0 * std::numbers::pi * t / T);
        return v;
      },
      static_cast<int>(base.size()), T, 401);
}

inline Instance make_instance(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.theta0.size() != 2) throw ConfigError("scenario uses q = 2");
  if (spec.n < 2 || !(spec.p >= 0.0 && spec.p <= 1.0)) throw ConfigError("invalid scenario network");
  std::vector<Pair> edges;
  std::map<Pair, Vec> x;
  for (int i = 0; i < spec.n; ++i)
    for (int j = i + 1; j < spec.n; ++j) {
      auto rng = pair_stream(seed, kTagScenario, Pair{i, j});
      const bool edge = uniform01(rng) < spec.p;
      const double z = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      if (!edge) continue;
      edges.push_back({i, j});
      x[{i, j}] = (Vec(2) << 1.0, z).finished();
    }
  auto net = DynamicNetwork::static_network(spec.n, spec.horizon, edges);
  auto cov = CovariateField::static_field(2, std::move(x), 1.0);
  auto theta = scenario_path(spec);
  auto log = simulate_cox(net, cov, theta, derive_seed(seed, kTagScenario, 1));
  return {std::move(net), std::move(cov), std::move(log), std::move(theta)};
}

struct McOptions {
  ScenarioSpec scenario{};
  int reps = 500;
  std::uint64_t seed = 20180505;
  double h = 0.25;
  double level = 0.05;
  Kernel kernel{};
  bool martingale_variance = false;
};

struct McReplicate {
  int rep = 0;
  bool ok = false;
  double Tn = 0.0, An = 0.0, Bhat = 0.0, z = 0.0, p_value = 1.0;
  double Bhat_martingale = 0.0;
  std::string error;
};

struct McSummary {
  std::vector<McReplicate> reps;
  int completed = 0;
  int failures = 0;
  int rejections = 0;
  double rejection_rate = 0.0;
  double mean_B = 0.0;
  double mean_B_martingale = 0.0;
  double mean_z = 0.0;
  double sd_z = 0.0;
};

/// Replicate r uses seed derive_seed(seed, r). Failed replicates are recorded and excluded from rates.
inline McSummary run_mc(const McOptions& opt) {
  McSummary s;
  for (int r = 0; r < opt.reps; ++r) {
    McReplicate rep;
    rep.rep = r;
    try {
      const auto inst = make_instance(opt.scenario, derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
      const DataView view(inst.net, inst.cov, inst.log);
      TestOptions to;
      to.h = opt.h;
      to.kernel = opt.kernel;
      to.martingale_variance = opt.martingale_variance;
      const auto res = run_test(view, to);
      rep.ok = true;
      rep.Tn = res.Tn;
      rep.An = res.An;
      rep.Bhat = res.Bhat;
      rep.z = res.z;
      rep.p_value = res.p_value;
      if (res.Bhat_martingale) rep.Bhat_martingale = *res.Bhat_martingale;
    } catch (const Error& e) {
      rep.error = e.what();
    }
    s.reps.push_back(rep);
  }
  double sz = 0.0, szz = 0.0;
  for (const auto& rep : s.reps) {
    if (!rep.ok) {
      ++s.failures;
      continue;
    }
    ++s.completed;
    if (rep.p_value < opt.level) ++s.rejections;
    s.mean_B += rep.Bhat;
    s.mean_B_martingale += rep.Bhat_martingale;
    sz += rep.z;
    szz += rep.z * rep.z;
  }
  if (s.completed > 0) {
    const double c = s.completed;
    s.rejection_rate = s.rejections / c;
    s.mean_B /= c;
    s.mean_B_martingale /= c;
    s.mean_z = sz / c;
    s.sd_z = c > 1 ? std::sqrt(std::max(0.0, (szz - c * s.mean_z * s.mean_z) / (c - 1.0))) : 0.0;
  }
  return s;
}

}  // namespace netgof
