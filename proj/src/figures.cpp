#include "sasim/figures.hpp"

#include <array>
#include <cstdio>

#include "json.hpp"
#include "sasim/benchmark.hpp"
#include "sasim/error.hpp"
#include "sasim/io.hpp"

namespace sasim::figures {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Tolerances paired with orders 3..8 for the adaptive comparison.
constexpr std::array<double, 6> kOrderEps{0.0025, 0.004, 0.006, 0.007, 0.009, 0.015};

std::filesystem::path window_histogram(const FigureInputs& in, const std::filesystem::path& dir) {
  if (!in.report || !std::filesystem::exists(*in.report)) {
    throw Error(ErrorKind::missing_prerequisite,
                "window-histogram needs the report of a series run: run `sasim run --case CASE --method sas --out DIR` "
                "and pass --report DIR/report.json");
  }
  const auto doc = nlohmann::json::parse(io::read_text(*in.report), nullptr, false);
  if (doc.is_discarded() || !doc.contains("windows") || doc.value("kind", "") != "simulation") {
    throw Error(ErrorKind::missing_prerequisite, in.report->string() + " is not a simulation run report");
  }
  std::string text = "# window lengths of an accepted-window sequence\n# columns: index, t0 (s), h (s), self_start (0/1)\n";
  text += "index,t0,h,self_start\n";
  std::size_t i = 0;
  for (const auto& w : doc["windows"]) {
    text += std::to_string(i++) + "," + fmt(w["t0"].get<double>()) + "," + fmt(w["h"].get<double>()) + "," +
            (w["self_start"].get<bool>() ? "1" : "0") + "\n";
  }
  const auto path = dir / "window-histogram.csv";
  io::write_text(path, text);
  return path;
}

std::filesystem::path error_vs_order(const std::filesystem::path& dir) {
  const benchmark::LinearBenchmark b;
  std::string text = "# linear benchmark, fixed 0.01 s windows over [0, 10] s\n";
  text += "# columns: order, max |x - x_true| at window ends\norder,max_error\n";
  for (std::size_t n = 1; n <= 8; ++n) {
    benchmark::BenchmarkOptions o;
    o.order = n;
    o.dt = 0.01;
    text += std::to_string(n) + "," + fmt(benchmark::run_linear_benchmark(b, o).max_error) + "\n";
  }
  benchmark::BenchmarkOptions rk;
  rk.method = benchmark::BenchmarkMethod::rk4;
  rk.dt = 0.01;
  text += "# rk4 at dt = 0.01: " + fmt(benchmark::run_linear_benchmark(b, rk).max_error) + "\n";
  const auto path = dir / "error-vs-order.csv";
  io::write_text(path, text);
  return path;
}

std::vector<std::filesystem::path> adaptive_vs_order(const std::filesystem::path& dir) {
  const benchmark::LinearBenchmark b;
  std::vector<std::filesystem::path> out;
  std::string summary = "# linear benchmark, adaptive windows over [0, 10] s\n";
  summary += "# columns: order, eps, window count, first window (s), mean window (s), max |e|, |e(t_end)|\n";
  summary += "order,eps,windows,first_window,mean_window,max_error,final_error\n";
  for (std::size_t k = 0; k < kOrderEps.size(); ++k) {
    benchmark::BenchmarkOptions o;
    o.order = k + 3;
    o.eps = kOrderEps[k];
    const auto rep = benchmark::run_linear_benchmark(b, o);
    summary += std::to_string(o.order) + "," + fmt(kOrderEps[k]) + "," + std::to_string(rep.windows.size()) + "," +
               fmt(rep.first_window) + "," + fmt(rep.mean_window) + "," + fmt(rep.max_error) + "," +
               fmt(rep.final_error) + "\n";
    std::string curve = "# columns: t0 (s), h (s)\nt0,h\n";
    for (const auto& w : rep.windows) curve += fmt(w.t0) + "," + fmt(w.h) + "\n";
    const auto p = dir / ("adaptive-windows-n" + std::to_string(o.order) + ".csv");
    io::write_text(p, curve);
    out.push_back(p);
  }
  const auto p = dir / "adaptive-vs-order.csv";
  io::write_text(p, summary);
  out.insert(out.begin(), p);
  return out;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"window-histogram", "error-vs-order", "adaptive-vs-order"};
  return ids;
}

std::vector<std::filesystem::path> emit_figure_data(const std::string& id, const FigureInputs& in,
                                                    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
  if (id == "window-histogram") return {window_histogram(in, out_dir)};
  if (id == "error-vs-order") return {error_vs_order(out_dir)};
  if (id == "adaptive-vs-order") return adaptive_vs_order(out_dir);
  throw Error(ErrorKind::contract_violation, "unknown figure id '" + id + "'");
}

}  // namespace sasim::figures
