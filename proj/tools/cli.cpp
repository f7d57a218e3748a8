#include "cli.hpp"

#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "sasim/benchmark.hpp"
#include "sasim/engine.hpp"
#include "sasim/error.hpp"
#include "sasim/figures.hpp"
#include "sasim/io.hpp"

namespace sasim::cli {

namespace {

constexpr int kUsage = 2;

std::map<std::string, double> parse_fields(const std::string& spec, const std::string& flag) {
  std::map<std::string, double> kv;
  std::istringstream s(spec);
  std::string part;
  while (std::getline(s, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError(flag, "expected key=value, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    try {
      std::size_t used = 0;
      const double v = std::stod(part.substr(eq + 1), &used);
      if (used != part.size() - eq - 1) throw std::invalid_argument(part);
      kv[key] = v;
    } catch (const std::logic_error&) {
      throw CLI::ValidationError(flag, "bad number in '" + part + "'");
    }
  }
  return kv;
}

double need(const std::map<std::string, double>& kv, const char* key, const std::string& flag) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw CLI::ValidationError(flag, std::string("missing ") + key + "=");
  return it->second;
}

void check_keys(const std::map<std::string, double>& kv, std::initializer_list<const char*> allowed, const std::string& flag) {
  for (const auto& [k, _] : kv) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw CLI::ValidationError(flag, "unknown key '" + k + "'");
    }
  }
}

int bus_id(double v, const std::string& flag) {
  if (v != static_cast<int>(v)) throw CLI::ValidationError(flag, "bus ids are integers");
  return static_cast<int>(v);
}

struct RunOptions {
  std::string case_path;
  std::string bench;
  std::string method = "sas";
  std::size_t order = 2;
  std::size_t v_order = 1;
  double t_end = 10.0;
  std::optional<double> dt;
  bool adaptive = false;
  bool fixed = false;
  std::optional<double> eps;
  double tol_angle = 2.0, tol_voltage = 0.01, tol_mech = 0.001;
  std::optional<double> tol_speed, tol_slip;
  double alpha = 0.95, h_pre = 1e-3, h_min = 1e-4;
  std::optional<double> h_max;
  std::size_t samples = 16;
  bool no_verify = false;
  double stability_margin = 0.9;
  std::vector<std::string> faults, trips, closes;
  std::string out_dir;
  std::size_t decimate = 1;
  std::size_t intra = 0;
  std::string compare;
  double tol_v = 1e-8;
  int max_iter = 20;
  std::size_t workers = 0;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int run_benchmark(const RunOptions& o, std::ostream& out) {
  benchmark::LinearBenchmark b;
  benchmark::BenchmarkOptions bo;
  if (o.method == "rk4") {
    bo.method = benchmark::BenchmarkMethod::rk4;
  } else if (o.method != "sas") {
    throw CLI::ValidationError("--method", "the linear benchmark supports sas and rk4");
  }
  bo.order = o.order;
  bo.t_end = o.t_end;
  bo.dt = o.dt.value_or(0.01);
  if (o.adaptive) {
    bo.eps = o.eps.value_or(0.006);
    bo.stepper.alpha = o.alpha;
    bo.stepper.h_pre = o.h_pre;
    bo.stepper.h_min = o.h_min;
    bo.stepper.h_max = o.h_max.value_or(o.t_end);
    bo.stepper.samples = o.samples;
    bo.stepper.verify = !o.no_verify;
  }
  const auto rep = benchmark::run_linear_benchmark(b, bo);
  out << "benchmark: linear  method: " << o.method << "  order: " << bo.order << "\n";
  out << "windows: " << rep.windows.size() << "  first_window: " << fmt(rep.first_window)
      << " s  mean_window: " << fmt(rep.mean_window) << " s\n";
  out << "max_error: " << fmt(rep.max_error) << "  final_error: " << fmt(rep.final_error) << "\n";
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    engine::Trajectory tr;
    tr.channels = {"x", "v"};
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
      tr.times.push_back(rep.t[i]);
      tr.rows.push_back({rep.x[i], rep.v[i]});
      tr.interpolated.push_back(false);
    }
    io::write_trajectory(std::filesystem::path(o.out_dir) / "trajectory.csv", tr);
    io::write_text(std::filesystem::path(o.out_dir) / "report.json", io::benchmark_report_json(b, bo, rep));
  }
  return 0;
}

int run_case(const RunOptions& o, std::ostream& out) {
  const Case c = io::load_case(o.case_path);
  engine::SimConfig cfg;
  if (o.method == "sas") {
    cfg.method = engine::Method::sas;
  } else if (o.method == "fe") {
    cfg.method = engine::Method::fe;
  } else if (o.method == "rk4") {
    cfg.method = engine::Method::rk4;
  } else {
    throw CLI::ValidationError("--method", "expected sas, fe or rk4");
  }
  cfg.order = o.order;
  cfg.v_order = o.v_order;
  cfg.t_end = o.t_end;
  cfg.adaptive = !o.fixed;
  cfg.dt = o.dt.value_or(1e-3);
  cfg.tolerances = stepper::ToleranceSet::machine(o.tol_angle, o.tol_voltage, o.tol_mech);
  if (o.tol_speed) cfg.tolerances[stepper::VarClass::speed] = *o.tol_speed;
  if (o.tol_slip) cfg.tolerances[stepper::VarClass::slip] = *o.tol_slip;
  cfg.stepper.alpha = o.alpha;
  cfg.stepper.h_pre = o.h_pre;
  cfg.stepper.h_min = o.h_min;
  cfg.stepper.h_max = o.h_max.value_or(0.1);
  cfg.stepper.samples = o.samples;
  cfg.stepper.verify = !o.no_verify;
  cfg.stepper.stability_margin = o.stability_margin;
  cfg.decimation = o.decimate;
  cfg.intra_samples = o.intra;
  cfg.interface.tol_v = o.tol_v;
  cfg.interface.max_iter = o.max_iter;
  cfg.workers = o.workers;

  for (const auto& f : o.faults) {
    const auto kv = parse_fields(f, "--fault");
    check_keys(kv, {"bus", "t", "tclear", "g", "b"}, "--fault");
    const std::size_t bus = c.bus_index(bus_id(need(kv, "bus", "--fault"), "--fault"));
    const Complex y(kv.contains("g") ? kv.at("g") : network::kDefaultFaultAdmittance.real(),
                    kv.contains("b") ? kv.at("b") : network::kDefaultFaultAdmittance.imag());
    const double t_on = need(kv, "t", "--fault");
    if (kv.contains("tclear")) {
      if (!(kv.at("tclear") > t_on)) throw CLI::ValidationError("--fault", "tclear must follow t");
      for (auto& e : engine::bus_fault(bus, t_on, kv.at("tclear"), y)) cfg.events.push_back(e);
    } else {
      cfg.events.push_back({t_on, network::FaultOn{bus, y}});
    }
  }
  auto branch_events = [&](const std::vector<std::string>& specs, const std::string& flag, bool trip) {
    for (const auto& s : specs) {
      const auto kv = parse_fields(s, flag);
      check_keys(kv, {"from", "to", "t"}, flag);
      const std::size_t from = c.bus_index(bus_id(need(kv, "from", flag), flag));
      const std::size_t to = c.bus_index(bus_id(need(kv, "to", flag), flag));
      const double t = need(kv, "t", flag);
      if (trip) {
        cfg.events.push_back({t, network::BranchTrip{from, to}});
      } else {
        cfg.events.push_back({t, network::BranchClose{from, to}});
      }
    }
  };
  branch_events(o.trips, "--trip", true);
  branch_events(o.closes, "--close", false);

  const engine::Trajectory tr = engine::simulate(c, cfg);

  io::RunInfo info;
  info.case_name = c.name;
  info.config = cfg;
  if (!o.compare.empty()) {
    const auto ref = io::read_trajectory(o.compare);
    io::ComparisonSummary cmp;
    cmp.reference = o.compare;
    cmp.channels = engine::compare(tr, ref);
    for (const auto& d : cmp.channels) {
      if (d.channel.ends_with(".delta_deg")) cmp.max_rotor_angle_deg = std::max(cmp.max_rotor_angle_deg, d.max_abs);
    }
    info.comparison = std::move(cmp);
  }

  out << "case: " << c.name << "  method: " << o.method << "  t_end: " << fmt(cfg.t_end) << " s\n";
  out << "windows: " << tr.windows.size() << "  network_solves: " << tr.network_solves
      << "  interface_iterations: " << tr.interface_iterations() << "\n";
  out << "wall_time: " << fmt(tr.timings.total) << " s\n";
  if (info.comparison) out << "max_rotor_angle_difference_deg: " << fmt(info.comparison->max_rotor_angle_deg) << "\n";

  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    io::write_trajectory(std::filesystem::path(o.out_dir) / "trajectory.csv", tr);
    io::write_text(std::filesystem::path(o.out_dir) / "report.json", io::run_report_json(info, tr));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Power-system transient simulation with series solutions and adaptive windows", "sasim"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Simulate a case file or the linear benchmark");
  auto* case_opt = run->add_option("--case", ro.case_path, "Case file (JSON)");
  auto* bench_opt = run->add_option("--benchmark", ro.bench, "Built-in benchmark")->check(CLI::IsMember({"linear"}));
  case_opt->excludes(bench_opt);
  run->add_option("--method", ro.method, "sas, fe or rk4")->check(CLI::IsMember({"sas", "fe", "rk4"}));
  run->add_option("--order", ro.order, "Series order n")->check(CLI::Range(1, 40));
  run->add_option("--vorder", ro.v_order, "Voltage polynomial order n_v")->check(CLI::Range(0, 10));
  run->add_option("--tend", ro.t_end, "End time (s)")->check(CLI::PositiveNumber);
  run->add_option("--dt", ro.dt, "Fixed step or window (s)")->check(CLI::PositiveNumber);
  run->add_flag("--adaptive", ro.adaptive, "Adaptive windows (default for case runs)");
  run->add_flag("--fixed", ro.fixed, "Fixed series windows of --dt on a case run");
  run->add_option("--eps", ro.eps, "Benchmark error-rate tolerance")->check(CLI::PositiveNumber);
  run->add_option("--tol-angle", ro.tol_angle, "Rotor-angle tolerance (deg/s)")->check(CLI::PositiveNumber);
  run->add_option("--tol-voltage", ro.tol_voltage, "Voltage-state tolerance (pu/s)")->check(CLI::PositiveNumber);
  run->add_option("--tol-mech", ro.tol_mech, "Mechanical-power tolerance (pu/s)")->check(CLI::PositiveNumber);
  run->add_option("--tol-speed", ro.tol_speed, "Speed tolerance (pu/s), unconstrained by default")->check(CLI::PositiveNumber);
  run->add_option("--tol-slip", ro.tol_slip, "Motor slip tolerance (1/s), unconstrained by default")->check(CLI::PositiveNumber);
  run->add_option("--alpha", ro.alpha, "Probe safety factor")->check(CLI::Range(0.0, 1.0));
  run->add_option("--h-pre", ro.h_pre, "Initial previous-window length (s)")->check(CLI::PositiveNumber);
  run->add_option("--h-min", ro.h_min, "Smallest window (s)")->check(CLI::PositiveNumber);
  run->add_option("--h-max", ro.h_max, "Window cap (s); 0.1 for cases, t_end for the benchmark")->check(CLI::PositiveNumber);
  run->add_option("--bound-samples", ro.samples, "Points per bound evaluation")->check(CLI::Range(2, 10000));
  run->add_flag("--no-verify", ro.no_verify, "Use the extrapolated window without checking the bound over it");
  run->add_option("--stability-margin", ro.stability_margin,
                  "Fraction of the series stability interval allowed per window; 0 disables")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--fault", ro.faults, "bus=ID,t=T[,tclear=T][,g=G][,b=B] (repeatable)");
  run->add_option("--trip", ro.trips, "from=ID,to=ID,t=T (repeatable)");
  run->add_option("--close", ro.closes, "from=ID,to=ID,t=T (repeatable)");
  run->add_option("--out", ro.out_dir, "Directory for trajectory.csv and report.json");
  run->add_option("--decimate", ro.decimate, "Record every k-th window")->check(CLI::Range(1, 1000000));
  run->add_option("--intra", ro.intra, "Interpolated rows per series window")->check(CLI::Range(0, 1000));
  run->add_option("--compare", ro.compare, "Reference trajectory file");
  run->add_option("--tol-v", ro.tol_v, "Interface voltage tolerance (pu)")->check(CLI::PositiveNumber);
  run->add_option("--max-iter", ro.max_iter, "Interface iteration limit")->check(CLI::Range(1, 1000));
  run->add_option("--workers", ro.workers, "Worker threads (default: SASIM_WORKERS or 1)");

  std::string fig_id, fig_out = ".", fig_report;
  auto* fig = app.add_subcommand("figure", "Emit data files for a figure");
  fig->add_option("--id", fig_id, "Figure id")->required()->check(CLI::IsMember(figures::figure_ids()));
  fig->add_option("--out", fig_out, "Output directory");
  fig->add_option("--report", fig_report, "Run report used by window-histogram");

  try {
    app.parse(argc, argv);
    if (run->parsed()) {
      if (ro.case_path.empty() && ro.bench.empty()) throw CLI::ValidationError("run", "one of --case or --benchmark is required");
      return ro.bench.empty() ? run_case(ro, out) : run_benchmark(ro, out);
    }
    figures::FigureInputs in;
    if (!fig_report.empty()) in.report = fig_report;
    for (const auto& p : figures::emit_figure_data(fig_id, in, fig_out)) out << "wrote " << p.string() << "\n";
    return 0;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[io]: " << e.what() << "\n";
    return exit_code(ErrorKind::io);
  }
}

}  // namespace sasim::cli
