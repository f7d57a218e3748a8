#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "sasim/engine.hpp"
#include "sasim/error.hpp"
#include "sasim/io.hpp"

using Catch::Approx;
using namespace sasim;
using namespace sasim::engine;

namespace {

const Case& fixture() {
  static const Case c = io::load_case(std::string(SASIM_DATA_DIR) + "/three_machine.json");
  return c;
}

const Case& stiff_fixture() {
  static const Case c = io::load_case(std::string(SASIM_DATA_DIR) + "/three_machine_stiff.json");
  return c;
}

std::vector<TimedEvent> fault_at_bus3(double t_on, double t_off) {
  return bus_fault(fixture().bus_index(3), t_on, t_off);
}

double max_channel_drift(const Trajectory& tr) {
  double m = 0.0;
  for (const auto& row : tr.rows)
    for (std::size_t k = 0; k < row.size(); ++k) m = std::max(m, std::abs(row[k] - tr.rows.front()[k]));
  return m;
}

double max_row_diff(const Trajectory& a, const Trajectory& b) {
  REQUIRE(a.rows.size() == b.rows.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.times[i] == Approx(b.times[i]).margin(1e-12));
    for (std::size_t k = 0; k < a.rows[i].size(); ++k) m = std::max(m, std::abs(a.rows[i][k] - b.rows[i][k]));
  }
  return m;
}

Trajectory constant_trajectory(double value, double t0 = 0.0, double t1 = 1.0) {
  Trajectory t;
  t.channels = {"x", "y"};
  for (int i = 0; i <= 10; ++i) {
    t.times.push_back(t0 + (t1 - t0) * i / 10.0);
    t.rows.push_back({value, 2.0 * value});
    t.interpolated.push_back(false);
  }
  return t;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::contract_violation;
}

}  // namespace

TEST_CASE("initialization of the bundled fixture", "[engine][init]") {
  const auto sys = initialize(fixture());
  CHECK(sys.init_residual <= 1e-8);
  CHECK(sys.init_voltage_shift <= 1e-5);
  CHECK(sys.devices.generators.size() == 3);
  CHECK(sys.devices.motors.size() == 2);
  CHECK(sys.bus_ids.size() == 9);
}

TEST_CASE("equilibrium is a fixed point for every method", "[engine][equilibrium]") {
  for (Method m : {Method::sas, Method::fe, Method::rk4}) {
    SimConfig cfg;
    cfg.method = m;
    cfg.t_end = 10.0;
    cfg.dt = 0.01;
    const auto tr = simulate(fixture(), cfg);
    INFO("method " << to_string(m));
    CHECK(max_channel_drift(tr) <= 1e-6);
    CHECK(tr.times.back() == 10.0);
  }
}

TEST_CASE("order-1 series with fixed windows reproduces forward Euler", "[engine][euler]") {
  SimConfig sas;
  sas.order = 1;
  sas.adaptive = false;
  sas.dt = 1e-3;
  sas.t_end = 0.1;
  sas.events = fault_at_bus3(0.02, 0.05);
  SimConfig fe = sas;
  fe.method = Method::fe;
  const auto a = simulate(fixture(), sas);
  const auto b = simulate(fixture(), fe);
  CHECK(a.windows.size() == 100);
  CHECK(max_row_diff(a, b) <= 1e-10);
}

TEST_CASE("forward Euler step from a perturbed state", "[engine][fe]") {
  auto sys = initialize(fixture());
  sys.states.generators[1][devices::gen::delta] += 0.1;
  sys.states.generators[2][devices::gen::eq2] -= 0.02;
  const auto x0 = sys.states;
  std::vector<devices::GeneratorState> expected;
  for (std::size_t k = 0; k < x0.generators.size(); ++k) {
    const auto& p = sys.devices.generators[k];
    const auto r = devices::generator_derivatives(x0.generators[k], p, sys.v[p.bus]).rates;
    devices::GeneratorState e;
    for (std::size_t i = 0; i < devices::gen::size; ++i) e[i] = x0.generators[k][i] + 0.01 * r[i];
    expected.push_back(e);
  }
  SimConfig cfg;
  cfg.method = Method::fe;
  cfg.dt = 0.01;
  cfg.t_end = 0.01;
  const auto tr = simulate(std::move(sys), cfg);
  REQUIRE(tr.rows.size() == 2);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const std::string g = "G" + std::to_string(k + 1) + ".";
    CHECK(tr.rows[1][tr.channel_index(g + "delta_deg")] == Approx(expected[k][0] * 180.0 / M_PI).epsilon(1e-14));
    CHECK(tr.rows[1][tr.channel_index(g + "eq2")] == Approx(expected[k][devices::gen::eq2]).epsilon(1e-14));
  }
}

TEST_CASE("fault run bookkeeping", "[engine][windows]") {
  SimConfig cfg;
  cfg.t_end = 2.0;
  cfg.events = fault_at_bus3(1.0, 1.0667);
  const auto tr = simulate(fixture(), cfg);
  REQUIRE(!tr.windows.empty());

  SECTION("windows tile the horizon and hit every event time") {
    double total = 0.0;
    for (std::size_t i = 0; i < tr.windows.size(); ++i) {
      const auto& w = tr.windows[i];
      total += w.h;
      for (const auto& e : cfg.events) CHECK(!(w.t0 < e.t - 1e-12 && w.t0 + w.h > e.t + 1e-12));
      if (i > 0) CHECK(w.t0 == tr.windows[i - 1].t0 + tr.windows[i - 1].h);
    }
    CHECK(total == Approx(2.0).epsilon(1e-12));
    for (const auto& e : cfg.events) CHECK(std::find(tr.times.begin(), tr.times.end(), e.t) != tr.times.end());
    for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
  }

  SECTION("self-start after the start and after each event") {
    const std::size_t n_start = cfg.v_order + 2;
    std::vector<double> starts{0.0, 1.0, 1.0667};
    for (double s : starts) {
      const auto it = std::find_if(tr.windows.begin(), tr.windows.end(), [&](const WindowRecord& w) { return w.t0 == s; });
      REQUIRE(it != tr.windows.end());
      const auto first = static_cast<std::size_t>(it - tr.windows.begin());
      for (std::size_t j = 0; j < n_start; ++j) {
        CHECK(tr.windows[first + j].self_start);
        CHECK(tr.windows[first + j].iterations >= 1);
      }
      CHECK(!tr.windows[first + n_start].self_start);
    }
    const auto flagged = std::count_if(tr.windows.begin(), tr.windows.end(), [](const auto& w) { return w.self_start; });
    CHECK(static_cast<std::size_t>(flagged) == 3 * n_start);
  }

  SECTION("network balance and solve accounting") {
    for (const auto& w : tr.windows) CHECK(std::abs(w.power_mismatch) <= 1e-8);
    CHECK(tr.network_solves == tr.interface_iterations());
    CHECK(tr.factorizations == 2);  // faulted and restored topologies
    const auto& tm = tr.timings;
    CHECK(tm.device_sas + tm.network + tm.window_selection <= 1.05 * tm.total);
  }

  SECTION("rotor angles respond to the fault") {
    const auto d = tr.column("G2.delta_deg");
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    CHECK(*hi - *lo > 5.0);
  }
}

TEST_CASE("self-start count follows the voltage order", "[engine][windows]") {
  SimConfig cfg;
  cfg.v_order = 2;
  cfg.t_end = 0.5;
  cfg.events = fault_at_bus3(0.2, 0.25);
  const auto tr = simulate(fixture(), cfg);
  const auto flagged = std::count_if(tr.windows.begin(), tr.windows.end(), [](const auto& w) { return w.self_start; });
  CHECK(flagged == 3 * 4);
}

TEST_CASE("runs are deterministic", "[engine][determinism]") {
  SimConfig cfg;
  cfg.t_end = 1.5;
  cfg.events = fault_at_bus3(1.0, 1.0667);
  cfg.workers = 1;
  const auto a = simulate(fixture(), cfg);
  const auto b = simulate(fixture(), cfg);
  cfg.workers = 4;
  const auto c = simulate(fixture(), cfg);
  CHECK(a.times == b.times);
  CHECK(a.rows == b.rows);
  CHECK(a.times == c.times);
  CHECK(a.rows == c.rows);
}

TEST_CASE("rk4 is fourth order on the fixture", "[engine][rk4]") {
  auto run = [](double dt) {
    auto sys = initialize(fixture());
    sys.states.generators[1][devices::gen::delta] += 0.2;
    network::InterfaceSettings tight;
    tight.tol_v = 1e-13;
    tight.max_iter = 500;
    sys.v = network::interface_iteration(sys.net, sys.devices, sys.states, sys.v, tight).voltages;
    SimConfig cfg;
    cfg.method = Method::rk4;
    cfg.dt = dt;
    cfg.t_end = 0.2;
    cfg.interface = tight;
    return simulate(std::move(sys), cfg);
  };
  const auto ref = run(1.25e-4);
  const auto coarse = run(4e-3);
  const auto fine = run(2e-3);
  const std::size_t k = ref.channel_index("G2.delta_deg");
  const double e1 = std::abs(coarse.rows.back()[k] - ref.rows.back()[k]);
  const double e2 = std::abs(fine.rows.back()[k] - ref.rows.back()[k]);
  INFO("errors " << e1 << " " << e2);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("adaptive windows respect the series stability limit", "[engine][stability]") {
  SimConfig cfg;
  cfg.t_end = 3.0;
  const auto tr = simulate(fixture(), cfg);
  std::size_t capped = 0;
  for (const auto& w : tr.windows) {
    if (w.self_start) continue;
    REQUIRE(std::isfinite(w.stability_cap));
    CHECK(w.h <= w.stability_cap * (1 + 1e-12));
    capped += w.h < cfg.stepper.h_max ? 1 : 0;
  }
  CHECK(capped > 0);

  // without the cap, roundoff grows through the stiff subtransient mode
  cfg.stepper.stability_margin = 0.0;
  cfg.t_end = 10.0;
  const auto free = simulate(fixture(), cfg);
  CHECK(max_channel_drift(free) > 1e-6);
}

TEST_CASE("recording options", "[engine][recording]") {
  SimConfig cfg;
  cfg.t_end = 0.5;
  cfg.events = fault_at_bus3(0.1, 0.15);
  const auto plain = simulate(fixture(), cfg);
  cfg.intra_samples = 3;
  const auto dense = simulate(fixture(), cfg);
  const auto interp = std::count(dense.interpolated.begin(), dense.interpolated.end(), true);
  CHECK(static_cast<std::size_t>(interp) == 3 * dense.windows.size());
  for (std::size_t i = 1; i < dense.times.size(); ++i) CHECK(dense.times[i] > dense.times[i - 1]);
  CHECK(plain.windows.size() == dense.windows.size());

  cfg.intra_samples = 0;
  cfg.decimation = 5;
  const auto sparse = simulate(fixture(), cfg);
  CHECK(sparse.rows.size() < plain.rows.size());
  CHECK(sparse.times.back() == 0.5);
  CHECK(std::find(sparse.times.begin(), sparse.times.end(), 0.1) != sparse.times.end());
}

TEST_CASE("step underflow on the stiff fixture", "[engine][errors]") {
  SimConfig cfg;
  cfg.t_end = 1.2;
  cfg.events = bus_fault(stiff_fixture().bus_index(3), 1.0, 1.0667);
  CHECK(kind_of([&] { (void)simulate(stiff_fixture(), cfg); }) == ErrorKind::step_underflow);

  cfg.keep_partial = true;
  const auto tr = simulate(stiff_fixture(), cfg);
  REQUIRE(tr.failure_kind.has_value());
  CHECK(*tr.failure_kind == ErrorKind::step_underflow);
  CHECK(tr.times.back() >= 1.0);
  CHECK(tr.times.back() < 1.2);
  CHECK(tr.failure.find("window starting at") != std::string::npos);
}

TEST_CASE("speed limit stops a run", "[engine][divergence]") {
  SimConfig cfg;
  cfg.method = Method::fe;
  cfg.dt = 1e-3;
  cfg.t_end = 2.0;
  cfg.events = fault_at_bus3(0.1, 1.5);
  cfg.speed_limit = 1e-3;
  const auto tr = simulate(fixture(), cfg);
  CHECK(tr.diverged);
  CHECK(tr.times.back() < 2.0);
}

TEST_CASE("configuration errors", "[engine][errors]") {
  SimConfig cfg;
  cfg.order = 0;
  CHECK(kind_of([&] { (void)simulate(fixture(), cfg); }) == ErrorKind::contract_violation);
  cfg = SimConfig{};
  cfg.method = Method::fe;
  cfg.dt = 0.0;
  CHECK(kind_of([&] { (void)simulate(fixture(), cfg); }) == ErrorKind::contract_violation);
  cfg = SimConfig{};
  cfg.t_end = 0.1;
  cfg.events = bus_fault(42, 0.01, 0.02);
  CHECK(kind_of([&] { (void)simulate(fixture(), cfg); }) == ErrorKind::event);
  cfg.events = {{0.01, network::BranchTrip{0, 8}}};
  CHECK(kind_of([&] { (void)simulate(fixture(), cfg); }) == ErrorKind::event);
}

TEST_CASE("trajectory comparison", "[engine][compare]") {
  const auto one = constant_trajectory(1.0);
  const auto self = compare(one, one);
  REQUIRE(self.size() == 2);
  for (const auto& d : self) CHECK(d.max_abs == 0.0);

  const auto diff = compare(one, constant_trajectory(2.0));
  CHECK(diff[0].max_abs == 1.0);
  CHECK(diff[1].max_abs == 2.0);
  CHECK(diff[0].mean_abs == 1.0);

  CHECK(kind_of([&] { (void)compare(one, constant_trajectory(1.0, 2.0, 3.0)); }) == ErrorKind::comparison);
  CHECK(kind_of([&] { (void)compare(one, one, {"z"}); }) == ErrorKind::comparison);

  // interpolation of the denser trajectory onto the sparser grid
  Trajectory ramp;
  ramp.channels = {"x", "y"};
  for (int i = 0; i <= 100; ++i) {
    ramp.times.push_back(i / 100.0);
    ramp.rows.push_back({1.0 + i / 100.0, 2.0});
    ramp.interpolated.push_back(false);
  }
  const auto r = compare(one, ramp, {"x"});
  CHECK(r[0].max_abs == Approx(1.0).epsilon(1e-12));
  CHECK(r[0].mean_abs == Approx(0.5).epsilon(1e-12));

  SimConfig cfg;
  cfg.t_end = 0.3;
  const auto tr = simulate(fixture(), cfg);
  const auto angles = channels_with_suffix(tr, ".delta_deg");
  CHECK(angles == std::vector<std::string>{"G1.delta_deg", "G2.delta_deg", "G3.delta_deg"});
}

TEST_CASE("worker count", "[engine]") {
  CHECK(worker_count(3) == 3);
}
