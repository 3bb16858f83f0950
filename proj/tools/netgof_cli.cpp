// netgof: batch front end for simulation, estimation, the goodness-of-fit test, bandwidth selection,
// partition checks and Monte-Carlo calibration.

#include "netgof/netgof.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace netgof;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::string h;
  std::string kernel;
  std::string network, events, covariates;
  std::optional<double> horizon;
  std::optional<int> reps;
};

// Typed access with the key path in error messages.
template <class T>
T get(const json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + where + key + "': " + e.what());
  }
}

json section(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return json::object();
  if (!j.at(key).is_object()) throw ConfigError("config key '" + key + "' must be an object");
  return j.at(key);
}

json load_config(const Overrides& o) {
  json cfg = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot open config '" + o.config + "'");
    try {
      cfg = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + o.config + "': " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  }
  if (!o.out.empty()) cfg["output_dir"] = o.out;
  if (o.seed) cfg["seed"] = *o.seed;
  if (!o.h.empty()) {
    if (o.h == "auto")
      cfg["h"] = "auto";
    else if (auto v = io::parse_double(o.h))
      cfg["h"] = *v;
    else
      throw ConfigError("--bandwidth must be a number or 'auto'");
  }
  if (!o.kernel.empty()) cfg["kernel"] = o.kernel;
  if (!o.data_dir.empty()) cfg["data_dir"] = o.data_dir;
  auto& data = cfg["data"];
  if (data.is_null()) data = json::object();
  if (!o.network.empty()) data["network"] = o.network;
  if (!o.events.empty()) data["events"] = o.events;
  if (!o.covariates.empty()) data["covariates"] = o.covariates;
  if (o.horizon) data["horizon"] = *o.horizon;
  if ((!o.network.empty() || !o.events.empty()) && !data.contains("source")) data["source"] = "files";
  if (o.reps) cfg["mc"]["reps"] = *o.reps;
  return cfg;
}

struct Run {
  json cfg;
  std::string subcommand;
  fs::path out_dir;
  fs::path data_dir;
  std::uint64_t seed = 1;
  std::vector<std::string> outputs;

  fs::path data_path(const std::string& p) const {
    fs::path path(p);
    if (path.is_absolute() || data_dir.empty()) return path;
    return data_dir / path;
  }

  std::ofstream create(const std::string& name) {
    outputs.push_back(name);
    return io::open_out((out_dir / name).string());
  }

  void write_json(const std::string& name, const json& j) {
    auto out = create(name);
    out << j.dump(2) << '\n';
  }

  void write_manifest() {
    json m;
    m["tool"] = "netgof";
    m["version"] = NETGOF_VERSION;
    m["subcommand"] = subcommand;
    m["seed"] = seed;
    m["config_hash"] = io::hex64(io::fnv1a64(cfg.dump()));
    m["config"] = cfg;
    m["outputs"] = outputs;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    auto out = io::open_out((out_dir / "manifest.json").string());
    out << m.dump(2) << '\n';
  }
};

Run make_run(const std::string& sub, const Overrides& o) {
  Run r;
  r.subcommand = sub;
  r.cfg = load_config(o);
  r.out_dir = get<std::string>(r.cfg, "output_dir", "netgof_out", "");
  std::string dd = get<std::string>(r.cfg, "data_dir", "", "");
  if (dd.empty())
    if (const char* env = std::getenv("NETGOF_DATA_DIR")) dd = env;
  r.data_dir = dd;
  r.seed = get<std::uint64_t>(r.cfg, "seed", 1, "");
  std::error_code ec;
  fs::create_directories(r.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + r.out_dir.string() + "'");
  return r;
}

struct Dataset {
  DynamicNetwork net;
  CovariateField cov = CovariateField::constant_field(Vec::Ones(1), 1.0);
  EventLog log;
  std::string description;
};

ScenarioSpec scenario_from(const json& s) {
  ScenarioSpec spec;
  spec.n = get<int>(s, "n", spec.n, "scenario.");
  spec.p = get<double>(s, "p", spec.p, "scenario.");
  spec.horizon = get<double>(s, "horizon", spec.horizon, "scenario.");
  const auto th = get<std::vector<double>>(s, "theta0", {3.0, 0.5}, "scenario.");
  spec.theta0 = Eigen::Map<const Vec>(th.data(), static_cast<Eigen::Index>(th.size()));
  spec.swing = get<double>(s, "swing", 0.0, "scenario.");
  return spec;
}

Dataset load_dataset(const Run& run) {
  const json data = section(run.cfg, "data");
  const std::string source = get<std::string>(data, "source", "scenario", "data.");
  const bool directed = get<bool>(run.cfg, "directed", false, "");
  Dataset ds;
  if (source == "scenario") {
    const auto spec = scenario_from(section(data, "scenario"));
    auto inst = make_instance(spec, run.seed);
    ds.net = std::move(inst.net);
    ds.cov = std::move(inst.cov);
    ds.log = std::move(inst.log);
    ds.description = "scenario";
  } else if (source == "files") {
    const double T = get<double>(data, "horizon", 0.0, "data.");
    if (!(T > 0.0)) throw ConfigError("config key 'data.horizon' must be positive");
    const int n = get<int>(data, "n", 0, "data.");
    auto nin = io::open_in(run.data_path(get<std::string>(data, "network", "network.csv", "data.")).string());
    ds.net = io::read_network_csv(nin, T, n, directed);
    auto ein = io::open_in(run.data_path(get<std::string>(data, "events", "events.csv", "data.")).string());
    ds.log = io::read_events_csv(ein, T, directed);
    if (data.contains("covariates")) {
      auto cin = io::open_in(run.data_path(get<std::string>(data, "covariates", "", "data.")).string());
      ds.cov = io::read_static_covariates_csv(cin, directed);
    } else if (data.contains("durations")) {
      auto din = io::open_in(run.data_path(get<std::string>(data, "durations", "", "data.")).string());
      ds.cov = io::distance_covariates(io::read_durations_csv(din, directed), ds.net);
    }
    ds.description = "files";
  } else if (source == "bike") {
    const json b = section(data, "bike");
    io::IngestOptions opt;
    opt.time_column = get<std::string>(b, "time_column", opt.time_column, "data.bike.");
    opt.origin_column = get<std::string>(b, "origin_column", opt.origin_column, "data.bike.");
    opt.dest_column = get<std::string>(b, "dest_column", opt.dest_column, "data.bike.");
    opt.format = io::time_format_from(get<std::string>(b, "format", "iso", "data.bike."));
    opt.directed = directed;
    const auto window = get<std::vector<std::string>>(b, "window", {}, "data.bike.");
    const auto prior_window = get<std::vector<std::string>>(b, "prior_window", {}, "data.bike.");
    if (window.size() != 2 || prior_window.size() != 2)
      throw ConfigError("config keys 'data.bike.window' and 'data.bike.prior_window' need [begin, end]");
    io::VertexRegistry reg;
    auto prior_opt = opt;
    prior_opt.duration_column = get<std::string>(b, "duration_column", "Duration", "data.bike.");
    prior_opt.window_begin = prior_window[0];
    prior_opt.window_end = prior_window[1];
    const auto prior = io::ingest_events(run.data_path(get<std::string>(b, "prior", "", "data.bike.")).string(), prior_opt, reg);
    opt.window_begin = window[0];
    opt.window_end = window[1];
    const auto day = io::ingest_events(run.data_path(get<std::string>(b, "events", "", "data.bike.")).string(), opt, reg);
    const int threshold = get<int>(b, "threshold", 10, "data.bike.");
    ds.net = io::build_conservative_network(prior.log, threshold, reg.size(), day.horizon, directed);
    std::map<Pair, double> minutes;
    for (const auto& [p, list] : ds.net.activity()) minutes[p] = io::median(prior.durations_minutes.at(p));
    ds.cov = io::distance_covariates(minutes, ds.net);
    ds.log = day.log;
    ds.description = "bike: " + std::to_string(reg.size()) + " stations, " + std::to_string(ds.net.activity().size()) +
                     " conservative pairs, " + std::to_string(day.log.total()) + " events";
  } else {
    throw ConfigError("config key 'data.source' must be scenario, files or bike");
  }
  return ds;
}

std::vector<double> default_h_grid(double T) {
  std::vector<double> g;
  for (double f : {0.02, 0.03, 0.045, 0.065, 0.09, 0.12, 0.16, 0.2}) g.push_back(f * T);
  return g;
}

BandwidthCurve run_bandwidth(const Run& run, const DataView& view) {
  const json bw = section(run.cfg, "bandwidth");
  auto grid = get<std::vector<double>>(bw, "grid", default_h_grid(view.horizon()), "bandwidth.");
  PredictionOptions po;
  if (bw.contains("delta_pred") && !bw.at("delta_pred").is_null()) po.delta_pred = get<double>(bw, "delta_pred", 0.0, "bandwidth.");
  return bandwidth_curve(view, grid, po);
}

double resolve_h(const Run& run, const DataView& view, std::optional<BandwidthCurve>& curve) {
  if (run.cfg.contains("h") && run.cfg.at("h").is_string()) {
    if (run.cfg.at("h").get<std::string>() != "auto") throw ConfigError("config key 'h' must be a number or 'auto'");
    curve = run_bandwidth(run, view);
    return curve->h_converted;
  }
  const double h = get<double>(run.cfg, "h", 0.25 * view.horizon(), "");
  if (!(h > 0.0)) throw ConfigError("config key 'h' must be positive");
  return h;
}

WeightFunction weight_from(const Run& run, double T, double h) {
  const double delta = get<double>(run.cfg, "delta", h, "");
  const double taper = get<double>(run.cfg, "taper", 0.5 * delta, "");
  return WeightFunction::plateau(T, delta, taper);
}

int cmd_simulate(Run& run) {
  const auto ds = load_dataset(run);
  {
    auto out = run.create("network.csv");
    io::write_network_csv(out, ds.net);
  }
  {
    auto out = run.create("events.csv");
    io::write_events_csv(out, ds.log);
  }
  {
    std::vector<Pair> pairs;
    for (const auto& [p, l] : ds.net.activity()) pairs.push_back(p);
    auto out = run.create("covariates.csv");
    io::write_static_covariates_csv(out, ds.cov, pairs);
  }
  run.write_json("simulate.json", {{"vertices", ds.net.vertex_count()},
                                   {"pairs", ds.net.activity().size()},
                                   {"events", ds.log.total()},
                                   {"horizon", ds.net.horizon()}});
  run.write_manifest();
  std::cout << "simulated " << ds.log.total() << " events on " << ds.net.activity().size() << " pairs\n";
  return 0;
}

int cmd_estimate(Run& run) {
  const auto ds = load_dataset(run);
  const DataView view(ds.net, ds.cov, ds.log);
  std::optional<BandwidthCurve> curve;
  const double h = resolve_h(run, view, curve);
  const Kernel K = Kernel::from_name(get<std::string>(run.cfg, "kernel", "epanechnikov", ""));
  const auto w = weight_from(run, view.horizon(), h);
  const auto glob = fit_global(view);
  const auto grid = quad::uniform_grid(w.lo(), w.hi(), h / 4.0);
  const auto path = test_statistic(view, h, K, w, grid, glob.theta);
  {
    auto out = run.create("path.csv");
    io::write_path_csv(out, path, view.dim());
  }
  run.write_json("estimate.json", {{"h", h},
                                   {"thetaBar", io::vec_json(glob.theta)},
                                   {"globalIterations", glob.iterations},
                                   {"gridUsed", path.grid.size()},
                                   {"gridExcluded", path.excluded.size()},
                                   {"droppedEvents", view.dropped_events()}});
  run.write_manifest();
  std::cout << "theta-bar = " << glob.theta.transpose() << "  (" << path.grid.size() << " local fits)\n";
  return 0;
}

int cmd_test(Run& run) {
  const auto ds = load_dataset(run);
  const DataView view(ds.net, ds.cov, ds.log);
  std::optional<BandwidthCurve> curve;
  TestOptions opt;
  opt.h = resolve_h(run, view, curve);
  opt.kernel = Kernel::from_name(get<std::string>(run.cfg, "kernel", "epanechnikov", ""));
  opt.weight = weight_from(run, view.horizon(), opt.h);
  opt.martingale_variance = get<bool>(run.cfg, "martingale_variance", false, "");
  const auto res = run_test(view, opt);
  json j = io::to_json(res);
  j["data"] = ds.description;
  j["droppedEvents"] = view.dropped_events();
  if (curve) j["bandwidth"] = io::to_json(*curve);
  run.write_json("test.json", j);
  {
    auto out = run.create("test.csv");
    out << "Tn,An,Bhat,z,pValue,h,r_n,gridUsed\n"
        << io::fmt(res.Tn) << ',' << io::fmt(res.An) << ',' << io::fmt(res.Bhat) << ',' << io::fmt(res.z) << ','
        << io::fmt(res.p_value) << ',' << io::fmt(res.h) << ',' << io::fmt(res.r_n) << ',' << res.grid_used << '\n';
  }
  {
    auto out = run.create("path.csv");
    io::write_path_csv(out, res.path, view.dim());
  }
  run.write_manifest();
  std::cout << "z = " << res.z << "  p = " << res.p_value << "\n";
  return 0;
}

int cmd_bandwidth(Run& run) {
  const auto ds = load_dataset(run);
  const DataView view(ds.net, ds.cov, ds.log);
  const auto curve = run_bandwidth(run, view);
  {
    auto out = run.create("curve.csv");
    io::write_curve_csv(out, curve);
  }
  run.write_json("bandwidth.json", io::to_json(curve));
  run.write_manifest();
  std::cout << "h* = " << curve.h_star << "  converted h = " << curve.h_converted << "\n";
  return 0;
}

int cmd_partition(Run& run) {
  const json pc = section(run.cfg, "partition");
  const int side = get<int>(pc, "side", 8, "partition.");
  const bool torus = get<bool>(pc, "torus", true, "partition.");
  const int dims = get<int>(pc, "dims", 2, "partition.");
  const std::string method = get<std::string>(pc, "method", "chessboard", "partition.");
  const int delta = get<int>(pc, "delta", 2, "partition.");
  const GridSpec grid{std::vector<int>(dims, side), torus};
  const auto net = grid.network(1.0);
  PartitionAssignment part;
  json extra = json::object();
  if (method == "chessboard") {
    part = grid_chessboard(grid, delta);
  } else if (method == "coordinate") {
    std::vector<Pair> anchors;
    for (const auto& a : get<std::vector<std::vector<int>>>(pc, "anchors", {}, "partition.")) {
      if (a.size() != 2) throw ConfigError("config key 'partition.anchors' entries must be [i, j]");
      anchors.push_back(make_undirected(a[0], a[1]));
    }
    if (anchors.empty()) anchors.push_back(grid.edges().front().pair);
    part = coordinate_partition(net, 0.0, anchors, delta);
  } else if (method == "mds") {
    const auto res = mds_partition(net, 0.0, get<int>(pc, "dim", 2, "partition."), delta);
    part = res.partition;
    extra = {{"requestedDelta", res.requested_delta}, {"achievedDelta", res.achieved_delta}, {"dimUsed", res.dim_used},
             {"warnings", res.warnings}};
  } else {
    throw ConfigError("config key 'partition.method' must be chessboard, coordinate or mds");
  }
  const auto rep = validate_partition(part, net, 0.0);
  json j = io::to_json(rep);
  j["method"] = method;
  j["delta"] = part.delta;
  j["typeCount"] = part.type_count;
  j["degenerate"] = part.degenerate;
  j["notes"] = part.notes;
  j.update(extra);
  run.write_json("partition_report.json", j);
  {
    auto out = run.create("partition.csv");
    io::write_partition_csv(out, part);
  }
  run.write_manifest();
  std::cout << "partition " << (rep.ok ? "ok" : "INVALID") << " (" << rep.blocks << " blocks)\n";
  return rep.ok ? 0 : 4;
}

int cmd_mc(Run& run) {
  const json mc = section(run.cfg, "mc");
  const int reps = get<int>(mc, "reps", 500, "mc.");
  const auto suites = get<std::vector<std::string>>(mc, "suites", {"h0", "h1"}, "mc.");
  const json sc = section(mc, "scenario");
  auto out_table = run.create("mc_table.csv");
  auto out_reps = run.create("mc_reps.csv");
  out_table << "suite,reps,completed,failures,rejections,rate,mean_z,sd_z,mean_B,mean_B_martingale\n";
  out_reps << "suite,rep,ok,Tn,An,Bhat,z,pValue,Bhat_martingale\n";
  for (const auto& suite : suites) {
    McOptions o;
    o.scenario = scenario_from(sc);
    if (suite == "h1")
      o.scenario.swing = get<double>(mc, "swing", 1.0, "mc.");
    else if (suite == "h0")
      o.scenario.swing = 0.0;
    else
      throw ConfigError("config key 'mc.suites' entries must be h0 or h1");
    o.reps = reps;
    o.seed = derive_seed(run.seed, static_cast<std::uint64_t>(suite == "h1"));
    o.h = get<double>(run.cfg, "h", 0.25, "");
    o.kernel = Kernel::from_name(get<std::string>(run.cfg, "kernel", "epanechnikov", ""));
    o.martingale_variance = get<bool>(mc, "martingale", false, "mc.");
    const auto s = run_mc(o);
    out_table << suite << ',' << o.reps << ',' << s.completed << ',' << s.failures << ',' << s.rejections << ','
              << io::fmt(s.rejection_rate) << ',' << io::fmt(s.mean_z) << ',' << io::fmt(s.sd_z) << ','
              << io::fmt(s.mean_B) << ',' << io::fmt(s.mean_B_martingale) << '\n';
    for (const auto& r : s.reps)
      out_reps << suite << ',' << r.rep << ',' << int(r.ok) << ',' << io::fmt(r.Tn) << ',' << io::fmt(r.An) << ','
               << io::fmt(r.Bhat) << ',' << io::fmt(r.z) << ',' << io::fmt(r.p_value) << ','
               << io::fmt(r.Bhat_martingale) << '\n';
    std::cout << suite << ": rejection rate " << s.rejection_rate << " (" << s.completed << " reps, " << s.failures
              << " failed)\n";
  }
  run.write_manifest();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netgof: goodness-of-fit testing for relational event models on dynamic networks"};
  app.require_subcommand(1);
  Overrides o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON run configuration");
    sub->add_option("-o,--out", o.out, "output directory");
    sub->add_option("--data-dir", o.data_dir, "base directory for relative data paths (default $NETGOF_DATA_DIR)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--bandwidth", o.h, "bandwidth h or 'auto'");
    sub->add_option("--kernel", o.kernel, "epanechnikov, triangular or box");
    sub->add_option("--network", o.network, "network CSV (i,j,start,end)");
    sub->add_option("--events", o.events, "event CSV (time,i,j)");
    sub->add_option("--covariates", o.covariates, "static covariate CSV (i,j,x_1..x_q)");
    sub->add_option("--horizon", o.horizon, "observation horizon T");
    sub->add_option("--reps", o.reps, "Monte-Carlo replications");
  };
  std::map<std::string, int (*)(Run&)> handlers{{"simulate", cmd_simulate},   {"estimate", cmd_estimate},
                                                 {"test", cmd_test},           {"bandwidth", cmd_bandwidth},
                                                 {"partition-check", cmd_partition}, {"mc-calibration", cmd_mc}};
  const std::map<std::string, std::string> help{{"simulate", "simulate a data set and write it as CSV"},
                                                {"estimate", "fit the global and local parameter estimates"},
                                                {"test", "run the goodness-of-fit test"},
                                                {"bandwidth", "prediction-error bandwidth selection"},
                                                {"partition-check", "build and validate a Delta-partition on a grid"},
                                                {"mc-calibration", "Monte-Carlo size and power of the test"}};
  for (const auto& [name, fn] : handlers) common(app.add_subcommand(name, help.at(name)));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    for (const auto& [name, fn] : handlers)
      if (app.got_subcommand(name)) {
        Run run = make_run(name, o);
        return fn(run);
      }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
