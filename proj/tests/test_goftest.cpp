#include "helpers.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace netgof;

namespace {

Instance small_instance(std::uint64_t seed, double swing = 0.0, int n = 20) {
  ScenarioSpec spec;
  spec.n = n;
  spec.swing = swing;
  return make_instance(spec, seed);
}

SigmaPath identity_path(double a, double b, double step, int q) {
  const auto g = quad::uniform_grid(a, b, step);
  std::vector<Mat> s(g.size(), -Mat::Identity(q, q));
  return SigmaPath::from_values(g, s, std::vector<double>(g.size(), 1.0));
}

}  // namespace

TEST(Weight, PlateauShape) {
  const auto w = WeightFunction::standard(4.0, 0.4);
  EXPECT_EQ(w.lo(), 0.4);
  EXPECT_EQ(w.hi(), 3.6);
  EXPECT_EQ(w(0.39), 0.0);
  EXPECT_EQ(w(0.4), 0.0);
  EXPECT_EQ(w(0.6), 1.0);
  EXPECT_EQ(w(2.0), 1.0);
  EXPECT_NEAR(w(0.5), 0.5, 1e-15);
  for (double t = 0.0; t < 4.0; t += 1e-3) {
    EXPECT_GE(w(t), 0.0);
    EXPECT_NEAR(w(t), w(t + 1e-7), 1e-5);  // continuity
  }
  EXPECT_THROW(WeightFunction::plateau(1.0, 0.4, 0.2), ConfigError);
}

TEST(Statistic, ZeroWhenPathsCoincideOrWeightVanishes) {
  const std::vector<double> g{0.2, 0.4, 0.6};
  const Vec tb = (Vec(2) << 1.0, 2.0).finished();
  const std::vector<Vec> same(3, tb);
  EXPECT_EQ(statistic_from_path(g, same, tb, {0.5, 0.5, 0.5}, {1, 1, 1}), 0.0);
  const std::vector<Vec> other(3, tb * 2.0);
  EXPECT_GT(statistic_from_path(g, other, tb, {0.5, 0.5, 0.5}, {1, 1, 1}), 0.0);
  EXPECT_EQ(statistic_from_path(g, other, tb, {0.5, 0.5, 0.5}, {0, 0, 0}), 0.0);
}

TEST(Statistic, GridRefinementDriftBelowOnePercent) {
  const auto inst = small_instance(3, 1.0, 30);
  const DataView view(inst.net, inst.cov, inst.log);
  const double h = 0.25;
  const Kernel K;
  const auto w = WeightFunction::standard(1.0, h);
  const Vec tb = fit_global(view).theta;
  const double coarse = test_statistic(view, h, K, w, quad::uniform_grid(w.lo(), w.hi(), h / 4), tb).Tn;
  const double fine = test_statistic(view, h, K, w, quad::uniform_grid(w.lo(), w.hi(), h / 40), tb).Tn;
  EXPECT_GT(fine, 0.0);
  EXPECT_LT(std::abs(coarse - fine), 0.01 * fine);
}

TEST(Statistic, TooManyExclusionsIsTestError) {
  const std::vector<DynamicNetwork::Record> recs{{{0, 1}, {0.0, 0.3}}};
  const DynamicNetwork net(2, 1.0, recs);
  const auto cov = CovariateField::constant_field((Vec(1) << 1.0).finished(), 1.0);
  const EventLog log(1.0, {{{0, 1}, {0.1, 0.2}}});
  const DataView view(net, cov, log);
  const auto w = WeightFunction::standard(1.0, 0.1);
  EXPECT_THROW(test_statistic(view, 0.1, Kernel(), w, quad::uniform_grid(0.1, 0.9, 0.025), (Vec(1) << 2.0).finished()),
               TestError);
}

TEST(Centering, NoEventsGivesZero) {
  const auto inst = small_instance(4);
  const DataView view(inst.net, inst.cov, EventLog(1.0));
  const auto path = identity_path(0.0, 1.0, 0.01, 2);
  EXPECT_EQ(centering_An(view, path, 0.25, Kernel(), WeightFunction::custom(0.0, 1.0, [](double) { return 1.0; })), 0.0);
}

TEST(Centering, SingleEventClosedForm) {
  const std::vector<Pair> pairs{{0, 1}, {1, 2}, {0, 2}};
  const auto net = DynamicNetwork::static_network(3, 1.0, pairs);
  const auto cov = CovariateField::constant_field((Vec(2) << 1.0, 0.0).finished(), 1.0);
  const EventLog log(1.0, {{{0, 1}, {0.5}}});
  const DataView view(net, cov, log);
  const double h = 0.2;
  const auto path = identity_path(0.0, 1.0, h / 400, 2);
  const auto w = WeightFunction::custom(0.0, 1.0, [](double) { return 1.0; });
  for (const Kernel K : {Kernel(), Kernel(Kernel::Name::Triangular)})
    EXPECT_NEAR(centering_An(view, path, h, K, w), K.l2_squared() / 3.0, 1e-6);
}

TEST(Centering, NonnegativeOnData) {
  for (std::uint64_t s = 10; s < 15; ++s) {
    const auto inst = small_instance(s);
    const DataView view(inst.net, inst.cov, inst.log);
    const Vec tb = fit_global(view).theta;
    const auto w = WeightFunction::standard(1.0, 0.25);
    const auto path = sigma_path(view, tb, 0.25, Kernel(), quad::uniform_grid(w.lo(), w.hi(), 0.0125));
    EXPECT_GE(centering_An(view, path, 0.25, Kernel(), w), 0.0);
  }
}

TEST(VarianceB, ClosedForm) {
  const auto path = identity_path(0.0, 1.0, 0.01, 2);
  const auto one = WeightFunction::custom(0.0, 1.0, [](double) { return 1.0; });
  EXPECT_NEAR(variance_B(path, one, k4_constant(Kernel(Kernel::Name::Box))), 4.0 / 3.0, 1e-4);
  const auto zero = WeightFunction::custom(0.0, 1.0, [](double) { return 0.0; });
  EXPECT_EQ(variance_B(path, zero, 1.0), 0.0);
  const double c = 1.3;
  const Kernel K(Kernel::Name::Epanechnikov), Kc(Kernel::Name::Epanechnikov, c);
  EXPECT_NEAR(variance_B(path, one, Kc.k4()), std::pow(c, 4) * variance_B(path, one, K.k4()), 1e-12);
}

TEST(VarianceB, SingularSigmaIsTestError) {
  const auto g = quad::uniform_grid(0.0, 1.0, 0.1);
  std::vector<Mat> s(g.size(), Mat::Zero(2, 2));
  const auto path = SigmaPath::from_values(g, s, std::vector<double>(g.size(), 1.0));
  EXPECT_THROW(variance_B(path, WeightFunction::custom(0.0, 1.0, [](double) { return 1.0; }), 1.0), TestError);
}

TEST(RunTest, ZeroWeightIsDegenerate) {
  const auto inst = small_instance(5);
  const DataView view(inst.net, inst.cov, inst.log);
  TestOptions opt;
  opt.weight = WeightFunction::custom(0.25, 0.75, [](double) { return 0.0; });
  EXPECT_THROW(run_test(view, opt), DegenerateVariance);
}

TEST(MartingaleVariance, NearZeroWithoutEventsAndSmallIntensity) {
  const auto inst = small_instance(6);
  const DataView view(inst.net, inst.cov, EventLog(1.0));
  const auto path = identity_path(0.25, 0.75, 0.0125, 2);
  const auto w = WeightFunction::standard(1.0, 0.25);
  const Vec tb = (Vec(2) << -12.0, 0.0).finished();
  EXPECT_LT(std::abs(variance_B_martingale(view, path, 0.25, Kernel(), w, tb)), 1e-12);
}

TEST(MartingaleVariance, TwoPairHandOracle) {
  const std::vector<DynamicNetwork::Record> recs{{{0, 1}, {0.0, 1.0}}, {{1, 2}, {0.1, 0.8}}};
  const DynamicNetwork net(3, 1.0, recs);
  const std::map<Pair, Vec> xs{{{0, 1}, (Vec(2) << 1.0, 0.5).finished()}, {{1, 2}, (Vec(2) << 1.0, -1.0).finished()}};
  const auto cov = CovariateField::static_field(2, xs, 1.0);
  const EventLog log(1.0, {{{0, 1}, {0.22, 0.41, 0.47, 0.63}}, {{1, 2}, {0.35, 0.52, 0.7}}});
  const DataView view(net, cov, log);
  const double h = 0.25;
  const Kernel K;
  const auto w = WeightFunction::standard(1.0, h);
  const Vec tb = (Vec(2) << 1.2, 0.3).finished();
  const auto path = sigma_path(view, tb, h, K, quad::uniform_grid(w.lo(), w.hi(), h / 20));
  MartingaleVarianceOptions fine;
  fine.s_step_fraction = 1.0 / 400;
  const double got = variance_B_martingale(view, path, h, K, w, tb, fine);
  const double coarse = variance_B_martingale(view, path, h, K, w, tb);

  // Brute force: f(ij, kl; s, t) with the t0 integral on the path grid, tau by explicit sums over
  // events and a midpoint rule between activity breakpoints for the compensator part.
  const auto cw = quad::trapezoid_weights(path.grid);
  auto f = [&](Pair a, Pair b, double s, double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < path.grid.size(); ++k) {
      const double t0 = path.grid[k];
      if (w(t0) <= 0.0) continue;
      acc += cw[k] * h * K.scaled(s, t0, h) * K.scaled(t, t0, h) * w(t0) / path.pbar[k] *
             xs.at(a).dot(path.inv2[k] * xs.at(b));
    }
    return acc;
  };
  auto lam = [&](Pair p, double t) { return net.edge_active(p, t) ? std::exp(tb.dot(xs.at(p))) : 0.0; };
  auto tau = [&](Pair a, Pair b, double s) {
    double v = 0.0;
    for (double t : log.times(b))
      if (t < s) v += f(a, b, s, t);
    const std::vector<double> cuts{0.0, 0.1, 0.8, 1.0};
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double lo = cuts[c], hi = std::min(cuts[c + 1], s);
      const int N = 200;
      for (int m = 0; m < N && lo < hi; ++m) {
        const double t = lo + (hi - lo) * (m + 0.5) / N;
        v -= f(a, b, s, t) * lam(b, t) * (hi - lo) / N;
      }
    }
    return v;
  };
  const std::vector<Pair> pairs{{0, 1}, {1, 2}};
  const auto sgrid = quad::uniform_grid(0.0, 1.0, h / 400);
  double total = 0.0;
  for (const auto& a : pairs) {
    std::vector<double> y;
    for (double s : sgrid) {
      double acc = 0.0;
      for (const auto& b : pairs)
        if (!(b == a)) acc += std::pow(tau(a, b, s), 2);
      y.push_back(acc * lam(a, s));
    }
    total += quad::trapezoid(sgrid, y);
  }
  const double ref = 4.0 / (h * 9.0) * total;
  EXPECT_GT(ref, 0.0);
  EXPECT_NEAR(got, ref, 5e-3 * ref);
  EXPECT_NEAR(coarse, ref, 0.1 * ref);
}

TEST(MartingaleVariance, RefusesOversizedOrCallbackInstances) {
  const auto inst = small_instance(7);
  const DataView view(inst.net, inst.cov, inst.log);
  const auto w = WeightFunction::standard(1.0, 0.25);
  const Vec tb = fit_global(view).theta;
  const auto path = sigma_path(view, tb, 0.25, Kernel(), quad::uniform_grid(w.lo(), w.hi(), 0.0125));
  MartingaleVarianceOptions opt;
  opt.event_cap = 10;
  EXPECT_THROW(variance_B_martingale(view, path, 0.25, Kernel(), w, tb, opt), TestError);
  const auto cb = CovariateField::callback_field(2, [](Pair, double) { return Vec::Ones(2).eval(); }, 1.0);
  const DataView v2(inst.net, cb, inst.log);
  EXPECT_THROW(variance_B_martingale(v2, path, 0.25, Kernel(), w, tb), ConfigError);
}

TEST(RunTest, ResultFieldsAndPValue) {
  const auto inst = small_instance(8, 0.0, 30);
  const DataView view(inst.net, inst.cov, inst.log);
  const auto res = run_test(view, TestOptions{});
  EXPECT_GE(res.Tn, 0.0);
  EXPECT_GT(res.Bhat, 0.0);
  EXPECT_TRUE(std::isfinite(res.z));
  EXPECT_GE(res.p_value, 0.0);
  EXPECT_LE(res.p_value, 1.0);
  EXPECT_NEAR(res.p_value, two_sided_p(res.z), 0.0);
  EXPECT_NEAR(two_sided_p(-0.79), 0.4295, 1e-4);
  EXPECT_EQ(res.grid_used, 9);
  EXPECT_EQ(res.r_n, 435.0);
}

TEST(RunTest, InvariantUnderVertexRelabeling) {
  const auto inst = small_instance(9, 0.5, 25);
  std::vector<int> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto net2 = inst.net.relabeled(perm);
  const auto cov2 = inst.cov.relabeled(perm);
  std::map<Pair, std::vector<double>> ev;
  for (const auto& [p, v] : inst.log.events()) ev[make_undirected(perm[p.i], perm[p.j])] = v;
  const EventLog log2(1.0, ev);
  const auto a = run_test(DataView(inst.net, inst.cov, inst.log), TestOptions{});
  const auto b = run_test(DataView(net2, cov2, log2), TestOptions{});
  EXPECT_NEAR(a.z, b.z, 1e-6);
}

TEST(RunTest, InvariantUnderTimeRescaling) {
  const auto inst = small_instance(10, 0.5, 25);
  const double c = 3.0;
  std::vector<DynamicNetwork::Record> recs;
  for (const auto& [p, l] : inst.net.activity())
    for (const auto& iv : l) recs.push_back({p, {c * iv.start, c * iv.end}});
  const DynamicNetwork net2(inst.net.vertex_count(), c, recs);
  std::map<Pair, std::vector<double>> ev;
  for (const auto& [p, v] : inst.log.events())
    for (double t : v) ev[p].push_back(c * t);
  const EventLog log2(c, ev);
  TestOptions o1, o2;
  o2.h = c * o1.h;
  const auto a = run_test(DataView(inst.net, inst.cov, inst.log), o1);
  const auto b = run_test(DataView(net2, inst.cov, log2), o2);
  EXPECT_NEAR(a.z, b.z, 1e-6);
  EXPECT_NEAR(b.theta_bar[0], a.theta_bar[0] - std::log(c), 1e-8);
}
