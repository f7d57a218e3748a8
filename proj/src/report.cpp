#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "sasim/io.hpp"

namespace sasim::io {

using nlohmann::ordered_json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Class values in reporting units (angles in deg/s); unconstrained classes become null.
ordered_json class_values(const stepper::ClassBounds& v) {
  ordered_json out = ordered_json::object();
  for (std::size_t i = 0; i < stepper::kClassCount; ++i) {
    const auto c = static_cast<stepper::VarClass>(i);
    std::string key(stepper::to_string(c));
    double x = v[i];
    if (c == stepper::VarClass::angle) {
      key += "_deg_per_s";
      x *= kRadToDeg;
    }
    out[key] = std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
  }
  return out;
}

ordered_json stepper_json(const stepper::StepperConfig& s) {
  return {{"alpha", s.alpha},   {"h_pre", s.h_pre},     {"h_min", s.h_min},
          {"h_max", s.h_max},   {"samples", s.samples}, {"verify", s.verify},
          {"stability_margin", s.stability_margin}};
}

ordered_json event_json(const engine::TimedEvent& e) {
  ordered_json j{{"t", e.t}};
  std::visit(
      [&](const auto& ev) {
        using E = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<E, network::FaultOn>) {
          j["type"] = "fault-on";
          j["bus_index"] = ev.bus;
          j["admittance"] = {ev.admittance.real(), ev.admittance.imag()};
        } else if constexpr (std::is_same_v<E, network::FaultOff>) {
          j["type"] = "fault-off";
          j["bus_index"] = ev.bus;
        } else if constexpr (std::is_same_v<E, network::BranchTrip>) {
          j["type"] = "branch-trip";
          j["from_index"] = ev.from;
          j["to_index"] = ev.to;
        } else {
          j["type"] = "branch-close";
          j["from_index"] = ev.from;
          j["to_index"] = ev.to;
        }
      },
      e.event);
  return j;
}

}  // namespace

std::string run_report_json(const RunInfo& info, const engine::Trajectory& tr) {
  const auto& cfg = info.config;
  ordered_json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["kind"] = "simulation";
  doc["case"] = info.case_name;

  ordered_json c;
  c["method"] = engine::to_string(cfg.method);
  c["order"] = cfg.order;
  c["v_order"] = cfg.v_order;
  c["adaptive"] = cfg.method == engine::Method::sas && cfg.adaptive;
  c["dt"] = cfg.dt;
  c["t_end"] = cfg.t_end;
  c["tolerances"] = class_values(cfg.tolerances.eps);
  c["stepper"] = stepper_json(cfg.stepper);
  c["interface"] = {{"tol_v", cfg.interface.tol_v}, {"max_iter", cfg.interface.max_iter}};
  c["events"] = ordered_json::array();
  for (const auto& e : cfg.events) c["events"].push_back(event_json(e));
  c["decimation"] = cfg.decimation;
  c["intra_samples"] = cfg.intra_samples;
  c["workers"] = engine::worker_count(cfg.workers);
  doc["config"] = c;

  double h_min = std::numeric_limits<double>::infinity(), h_max = 0.0, mismatch = 0.0;
  std::size_t self_start = 0;
  for (const auto& w : tr.windows) {
    h_min = std::min(h_min, w.h);
    h_max = std::max(h_max, w.h);
    mismatch = std::max(mismatch, std::abs(w.power_mismatch));
    self_start += w.self_start ? 1 : 0;
  }
  const double span = tr.times.empty() ? 0.0 : tr.times.back() - tr.times.front();
  ordered_json s;
  s["windows"] = tr.windows.size();
  s["self_start_windows"] = self_start;
  s["network_solves"] = tr.network_solves;
  s["interface_iterations"] = tr.interface_iterations();
  s["factorizations"] = tr.factorizations;
  s["mean_window"] = tr.windows.empty() ? 0.0 : span / static_cast<double>(tr.windows.size());
  s["min_window"] = tr.windows.empty() ? 0.0 : h_min;
  s["max_window"] = h_max;
  s["max_power_mismatch"] = mismatch;
  doc["summary"] = s;

  doc["timings"] = {{"device_sas", tr.timings.device_sas},
                    {"network", tr.timings.network},
                    {"window_selection", tr.timings.window_selection},
                    {"total", tr.timings.total}};

  if (info.comparison) {
    ordered_json cmp;
    cmp["reference"] = info.comparison->reference;
    cmp["max_rotor_angle_deg"] = info.comparison->max_rotor_angle_deg;
    cmp["channels"] = ordered_json::array();
    for (const auto& d : info.comparison->channels) {
      cmp["channels"].push_back({{"channel", d.channel}, {"max_abs", d.max_abs}, {"mean_abs", d.mean_abs}});
    }
    doc["comparison"] = cmp;
  }

  ordered_json wins = ordered_json::array();
  for (const auto& w : tr.windows) {
    wins.push_back({{"t0", w.t0},
                    {"h", w.h},
                    {"predicted", w.predicted},
                    {"iterations", w.iterations},
                    {"self_start", w.self_start},
                    {"underflow", w.underflow},
                    {"power_mismatch", w.power_mismatch},
                    {"stability_cap", std::isfinite(w.stability_cap) ? ordered_json(w.stability_cap) : ordered_json(nullptr)},
                    {"r", class_values(w.r)}});
  }
  doc["windows"] = std::move(wins);
  return doc.dump(2) + "\n";
}

std::string benchmark_report_json(const benchmark::LinearBenchmark& b, const benchmark::BenchmarkOptions& opts,
                                  const benchmark::BenchmarkReport& rep) {
  ordered_json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["kind"] = "benchmark";
  doc["benchmark"] = {{"omega", b.omega}, {"sigma", b.sigma}, {"x0", b.x0}, {"v0", b.v0}};
  ordered_json o;
  o["method"] = opts.method == benchmark::BenchmarkMethod::sas ? "sas" : "rk4";
  o["order"] = opts.order;
  o["adaptive"] = opts.eps.has_value();
  if (opts.eps) {
    o["eps"] = *opts.eps;
    o["stepper"] = stepper_json(opts.stepper);
  } else {
    o["dt"] = opts.dt;
  }
  o["t_end"] = opts.t_end;
  doc["config"] = o;
  doc["summary"] = {{"windows", rep.windows.size()},
                    {"first_window", rep.first_window},
                    {"mean_window", rep.mean_window},
                    {"max_error", rep.max_error},
                    {"max_error_dense", rep.max_error_dense},
                    {"final_error", rep.final_error}};
  ordered_json wins = ordered_json::array();
  for (const auto& w : rep.windows) {
    wins.push_back({{"t0", w.t0},
                    {"h", w.h},
                    {"r_practical", w.r_practical},
                    {"r_exact", w.r_exact},
                    {"local_error", w.local_error},
                    {"underflow", w.underflow}});
  }
  doc["windows"] = std::move(wins);
  return doc.dump(2) + "\n";
}

}  // namespace sasim::io
