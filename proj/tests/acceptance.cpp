// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exits nonzero only if a criterion crashes.

#include "helpers.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace netgof;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20180505;

struct Outcome {
  std::string status;  // PASS, FAIL or SKIP
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? "PASS" : "FAIL", std::move(detail)}; }

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

fs::path out_dir() {
  const char* env = std::getenv("NETGOF_ACCEPTANCE_OUT");
  return env ? fs::path(env) : fs::path("acceptance_out");
}

// ---- 1

Outcome k4_oracle() {
  const double box = k4_constant(Kernel(Kernel::Name::Box));
  double worst = 0.0;
  for (auto name : {Kernel::Name::Epanechnikov, Kernel::Name::Triangular, Kernel::Name::Box})
    for (double c : {0.5, 2.0, 3.7}) {
      const double base = Kernel(name).k4(), scaled = Kernel(name, c).k4();
      worst = std::max(worst, std::abs(scaled - std::pow(c, 4) * base) / scaled);
    }
  return verdict(std::abs(box - 1.0 / 6.0) <= 1e-5 && worst <= 1e-10,
                 "box K4 err " + num(std::abs(box - 1.0 / 6.0)) + ", homogeneity rel err " + num(worst));
}

// ---- 2

Outcome gradient_hessian() {
  std::mt19937_64 rng(kSeed);
  const Kernel K;
  double worst_score = 0.0, worst_eig = -kInf;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 4 + rep % 7, q = 1 + rep % 3;
    const auto net = netgof::testing::random_dynamic_network(n, 0.5, 1.0, rng);
    const auto cov = netgof::testing::random_piecewise_covariates(net, q, rng);
    Vec th0 = Vec::Zero(q);
    th0[0] = 2.0;
    const auto log = simulate_cox(net, cov, ParameterPath::constant(th0, 1.0), rng());
    const DataView view(net, cov, log);
    std::uniform_real_distribution<double> u(-1.0, 1.0), tt(0.3, 0.7);
    Vec th(q);
    for (int a = 0; a < q; ++a) th[a] = u(rng);
    const double t0 = tt(rng), h = 0.3;
    const auto sh = local_score_hessian(view, th, t0, h, K);
    Vec fd(q);
    const double eps = 1e-5;
    for (int a = 0; a < q; ++a) {
      Vec e = Vec::Zero(q);
      e[a] = eps;
      fd[a] = (local_loglik(view, th + e, t0, h, K) - local_loglik(view, th - e, t0, h, K)) / (2 * eps);
    }
    worst_score = std::max(worst_score, (sh.grad - fd).lpNorm<Eigen::Infinity>() / std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
    worst_eig = std::max(worst_eig, Eigen::SelfAdjointEigenSolver<Mat>(sh.hess).eigenvalues().maxCoeff());
  }
  return verdict(worst_score < 1e-6 && worst_eig <= 1e-10,
                 "max score rel err " + num(worst_score) + ", max Hessian eigenvalue " + num(worst_eig));
}

// ---- 3

Outcome closed_form_mle() {
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<DynamicNetwork::Record> recs{{{0, 1}, {0.1 * rep, 1.0}}};
    const DynamicNetwork net(2, 1.0, recs);
    const auto cov = CovariateField::constant_field((Vec(1) << 1.0).finished(), 1.0);
    const auto log = simulate_cox(net, cov, ParameterPath::constant((Vec(1) << 2.0 + 0.3 * rep).finished(), 1.0),
                                  derive_seed(kSeed, 3, rep));
    const DataView view(net, cov, log);
    const double target = std::log(static_cast<double>(log.total()) / net.active_time({0, 1}, 0.0, 1.0));
    // box kernel with support [0, 1] is flat over the whole horizon
    const auto loc = fit_local(view, 0.5, 0.5, Kernel(Kernel::Name::Box));
    const auto glob = fit_global(view);
    worst = std::max({worst, std::abs(loc.theta[0] - target), std::abs(glob.theta[0] - target)});
  }
  return verdict(worst <= 1e-8, "max |theta - log(count/exposure)| " + num(worst));
}

// ---- 4

Outcome torus_covariance_oracle() {
  const TorusField field(8, 0.1);
  const auto tc = torus_covariance(field);
  // columns of (I - aC)^{-1} from the sparse solver, independent of the dense route
  const int r = field.edge_count();
  Mat Mi(r, r);
  for (int k = 0; k < r; ++k) Mi.col(k) = field.solve(Vec::Unit(r, k));
  const double gap = std::max((tc.cov - Mi * Mi.transpose()).cwiseAbs().maxCoeff(), tc.neumann_gap);
  const double limit = std::sqrt(0.6) + 0.05;
  double worst_ratio = 0.0;
  for (std::size_t d = 2; d < tc.decay_ratio.size(); ++d) worst_ratio = std::max(worst_ratio, tc.decay_ratio[d]);
  return verdict(gap <= 1e-10 && tc.nonincreasing && worst_ratio <= limit,
                 "exact gap " + num(gap) + ", nonincreasing " + (tc.nonincreasing ? "yes" : "no") +
                     ", max decay ratio beyond d=2 " + num(worst_ratio) + " (limit " + num(limit) + ")");
}

// ---- 5

Outcome partitions() {
  std::mt19937_64 rng(kSeed + 5);
  int chess_ok = 0, coord_ok = 0, coord_total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int delta = 1 + rep % 3;
    const int dims = 1 + rep % 2;
    std::uniform_int_distribution<int> side(3, dims == 1 ? 12 : 4);
    GridSpec g{std::vector<int>(dims), rep % 4 < 2};
    for (auto& s : g.dims) s = side(rng);
    const auto p = grid_chessboard(g, delta);
    if (validate_partition(p, g.network(1.0), 0.0).ok) ++chess_ok;

    const auto net = netgof::testing::random_dynamic_network(4 + rep % 9, 0.35, 1.0, rng);
    const auto active = net.active_pairs(0.5);
    if (active.empty()) {
      ++coord_ok;  // nothing to partition, trivially valid
      ++coord_total;
      continue;
    }
    ++coord_total;
    const std::vector<Pair> anchors{active[rng() % active.size()]};
    const auto cp = coordinate_partition(net, 0.5, anchors, delta);
    const auto r = validate_partition(cp, net, 0.5);
    if (r.ok && r.covered) ++coord_ok;
  }
  const GridSpec torus{{10, 10}, true};
  const auto mds = mds_partition(torus.network(1.0), 0.0, 2, 3.0);
  const bool mds_ok = mds.achieved_delta >= 1.0 && validate_partition(mds.partition, torus.network(1.0), 0.0).ok;
  return verdict(chess_ok == 100 && coord_ok == coord_total && mds_ok,
                 "chessboard " + std::to_string(chess_ok) + "/100, coordinate " + std::to_string(coord_ok) + "/" +
                     std::to_string(coord_total) + ", MDS achieved delta " + num(mds.achieved_delta));
}

// ---- 6

Outcome mixing_decay() {
  const TorusField field(12, 0.1);
  const auto net = field.network();
  const int reps = 10000;
  const Pair anchor = field.edges().front();
  std::vector<TorusSample> draws;
  draws.reserve(reps);
  for (int r = 0; r < reps; ++r) draws.push_back(simulate_torus_ar(field, 1.0, derive_seed(kSeed, 6, r)));
  std::vector<double> betas;
  std::string detail;
  for (int delta : {2, 4, 6}) {
    const auto part = coordinate_partition(net, 0.0, {anchor}, delta);
    std::vector<BlockSums> sums;
    sums.reserve(reps);
    for (const auto& s : draws) {
      std::map<Pair, double> Z;
      for (int k = 0; k < field.edge_count(); ++k) Z[field.edges()[k]] = s.indicator[k];
      sums.push_back(block_sums(Z, part, {}));
    }
    // first two blocks of type 1: the anchor shell and the next same-type shell, Delta apart
    const double b = estimate_beta(sums, 1, 2, 4).beta;
    betas.push_back(b);
    // same blocks with the next block taken from a different replication: the independence floor
    std::vector<BlockSums> shifted = sums;
    for (int r = 0; r < reps; ++r) shifted[r].U[{1, 2}] = sums[(r + 1) % reps].at(1, 2);
    detail += "beta(" + std::to_string(delta) + ")=" + num(b) + " [floor " + num(estimate_beta(shifted, 1, 2, 4).beta) + "] ";
  }
  const bool ok = betas[0] > betas[1] && betas[1] > betas[2] && betas[2] < 0.05;
  return verdict(ok, detail);
}

// ---- 7-9

void write_reps(const fs::path& file, const McSummary& s) {
  std::ofstream out(file, std::ios::binary);
  out << "rep,ok,Tn,An,Bhat,z,p_value,Bhat_martingale,error\n";
  for (const auto& r : s.reps)
    out << r.rep << ',' << int(r.ok) << ',' << io::fmt(r.Tn) << ',' << io::fmt(r.An) << ',' << io::fmt(r.Bhat) << ','
        << io::fmt(r.z) << ',' << io::fmt(r.p_value) << ',' << io::fmt(r.Bhat_martingale) << ",\"" << r.error << "\"\n";
}

McOptions h0_options() {
  McOptions o;
  o.scenario.n = 30;
  o.scenario.p = 0.3;
  o.scenario.horizon = 1.0;
  o.reps = 500;
  o.seed = kSeed;
  o.h = 0.25;
  return o;
}

McOptions h1_options() {
  auto o = h0_options();
  o.scenario.swing = 1.0;
  o.seed = derive_seed(kSeed, 1);
  return o;
}

McOptions variance_options() {
  auto o = h0_options();
  o.scenario.n = 20;
  o.reps = 200;
  o.seed = derive_seed(kSeed, 2);
  o.martingale_variance = true;
  return o;
}

struct McRuns {
  McSummary h0, h1, var;
};

McRuns run_suites(const fs::path& dir) {
  fs::create_directories(dir);
  McRuns r{run_mc(h0_options()), run_mc(h1_options()), run_mc(variance_options())};
  write_reps(dir / "h0.csv", r.h0);
  write_reps(dir / "h1.csv", r.h1);
  write_reps(dir / "variance.csv", r.var);
  return r;
}

// Same H0 replicates with the true constant parameter in place of the global fit: separates the
// effect of estimating theta-bar from the rest of the calibration.
double oracle_rejection_rate(const McOptions& o) {
  int rej = 0, done = 0;
  for (int r = 0; r < o.reps; ++r) {
    const auto inst = make_instance(o.scenario, derive_seed(o.seed, static_cast<std::uint64_t>(r)));
    const DataView view(inst.net, inst.cov, inst.log);
    const auto w = WeightFunction::standard(o.scenario.horizon, o.h);
    const Vec tb = inst.theta.at(0.0);
    try {
      const double Tn = test_statistic(view, o.h, o.kernel, w, quad::uniform_grid(w.lo(), w.hi(), o.h / 4), tb).Tn;
      const auto sp = sigma_path(view, tb, o.h, o.kernel, quad::uniform_grid(w.lo(), w.hi(), o.h / 20));
      const double z = (view.r_n() * std::sqrt(o.h) * Tn - centering_An(view, sp, o.h, o.kernel, w) / std::sqrt(o.h)) /
                       std::sqrt(variance_B(sp, w, o.kernel.k4()));
      ++done;
      if (two_sided_p(z) < o.level) ++rej;
    } catch (const Error&) {
    }
  }
  return done ? static_cast<double>(rej) / done : 0.0;
}

std::string summary(const McSummary& s) {
  return "completed " + std::to_string(s.completed) + ", failures " + std::to_string(s.failures) + ", mean z " +
         num(s.mean_z) + ", sd z " + num(s.sd_z);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---- 10

std::optional<fs::path> find_data(const std::string& name) {
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("NETGOF_DATA_DIR")) roots.emplace_back(env);
  roots.emplace_back("data");
  roots.emplace_back(fs::path(NETGOF_SOURCE_DIR) / "data");
  for (const auto& r : roots)
    if (fs::exists(r / name)) return r / name;
  return std::nullopt;
}

Outcome bike_reproduction() {
  const auto day_file = find_data("201805-capitalbikeshare-tripdata.csv");
  const auto prior_file = find_data("201804-capitalbikeshare-tripdata.csv");
  if (!day_file || !prior_file) return {"SKIP", "bike data files not found (set NETGOF_DATA_DIR)"};

  io::VertexRegistry reg;
  io::IngestOptions prior_opt;
  prior_opt.duration_column = "Duration";
  prior_opt.window_begin = "2018-04-01 00:00:00";
  prior_opt.window_end = "2018-05-01 00:00:00";
  const auto prior = io::ingest_events(prior_file->string(), prior_opt, reg);
  std::map<Pair, double> minutes;
  for (const auto& [p, d] : prior.durations_minutes) minutes[p] = io::median(d);

  auto analyse = [&](const std::string& begin, const std::string& end) {
    io::IngestOptions o;
    o.window_begin = begin;
    o.window_end = end;
    const auto day = io::ingest_events(day_file->string(), o, reg);
    const auto net = io::build_conservative_network(prior.log, 10, reg.size(), day.horizon);
    const auto cov = io::distance_covariates(minutes, net);
    TestOptions to;
    to.h = 1.1 / kBandwidthRho;
    return run_test(DataView(net, cov, day.log), to);
  };
  const auto full = analyse("2018-05-05 05:00:00", "2018-05-05 22:00:00");
  const auto aft = analyse("2018-05-05 16:00:00", "2018-05-05 20:00:00");
  const bool ok = full.z > 10.0 && aft.z >= -1.2 && aft.z <= -0.4 && aft.p_value >= 0.33 && aft.p_value <= 0.53;
  return verdict(ok, "full-day z " + num(full.z) + "; afternoon z " + num(aft.z) + ", p " + num(aft.p_value));
}

std::ofstream& report() {
  static std::ofstream out = [] {
    fs::create_directories(out_dir());
    return std::ofstream(out_dir() / "report.txt");
  }();
  return out;
}

template <class F>
bool run_criterion(int id, const char* name, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  bool crashed = false;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {"FAIL", std::string("exception: ") + e.what()};
    crashed = true;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream line;
  line << "CRITERION " << id << ' ' << o.status << "  " << name << ": " << o.detail << "  [" << num(secs, 3) << " s]";
  std::cout << line.str() << std::endl;
  report() << line.str() << std::endl;
  return !crashed;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };
  bool ok = true;

  if (want(1)) ok &= run_criterion(1, "kernel constant", k4_oracle);
  if (want(2)) ok &= run_criterion(2, "score and Hessian", gradient_hessian);
  if (want(3)) ok &= run_criterion(3, "closed-form MLE", closed_form_mle);
  if (want(4)) ok &= run_criterion(4, "torus covariance", torus_covariance_oracle);
  if (want(5)) ok &= run_criterion(5, "partition certification", partitions);
  if (want(6)) ok &= run_criterion(6, "mixing decay", mixing_decay);

  std::optional<McRuns> first;
  const bool need_mc = want(7) || want(8) || want(9) || want(11);
  if (need_mc) {
    const auto start = std::chrono::steady_clock::now();
    try {
      first = run_suites(out_dir() / "run1");
    } catch (const std::exception& e) {
      std::cout << "Monte-Carlo suites failed: " << e.what() << std::endl;
      ok = false;
    }
    std::cout << "(Monte-Carlo suites: "
              << num(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 4) << " s)"
              << std::endl;
  }
  if (first) {
    const auto& s = *first;
    const double h0_rate = s.h0.rejection_rate;
    if (want(7))
      ok &= run_criterion(7, "size under H0", [&] {
        return verdict(h0_rate >= 0.01 && h0_rate <= 0.12,
                       "rejection rate " + num(h0_rate) + "; " + summary(s.h0) +
                           "; with true theta0 instead of theta-bar (information only): " +
                           num(oracle_rejection_rate(h0_options())));
      });
    if (want(8))
      ok &= run_criterion(8, "power under H1", [&] {
        const double need = std::max(0.5, 3.0 * h0_rate);
        return verdict(s.h1.rejection_rate >= need,
                       "rejection rate " + num(s.h1.rejection_rate) + " (need " + num(need) + "); " + summary(s.h1));
      });
    if (want(9))
      ok &= run_criterion(9, "variance cross-check", [&] {
        const double ratio = s.var.mean_B_martingale / s.var.mean_B;
        return verdict(std::abs(ratio - 1.0) <= 0.3, "mean martingale B " + num(s.var.mean_B_martingale) + ", mean B " +
                                                        num(s.var.mean_B) + ", ratio " + num(ratio));
      });
  }
  if (want(10)) ok &= run_criterion(10, "bike data", bike_reproduction);
  if (want(11))
    ok &= run_criterion(11, "determinism", [&]() -> Outcome {
      if (!first) return {"FAIL", "first run did not complete"};
      run_suites(out_dir() / "run2");
      bool same = true;
      for (const char* f : {"h0.csv", "h1.csv", "variance.csv"})
        same &= slurp(out_dir() / "run1" / f) == slurp(out_dir() / "run2" / f);
      return verdict(same, same ? "result files byte-identical" : "result files differ");
    });
  return ok ? 0 : 1;
}
