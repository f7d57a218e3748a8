#include "sasim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "sasim/error.hpp"

namespace sasim::engine {

using devices::GeneratorState;
using devices::MotorState;
using series::SeriesVector;
using stepper::VarClass;

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::sas: return "sas";
    case Method::fe: return "fe";
    case Method::rk4: return "rk4";
  }
  return "unknown";
}

std::vector<TimedEvent> bus_fault(std::size_t bus, double t_on, double t_off, Complex admittance) {
  return {{t_on, network::FaultOn{bus, admittance}}, {t_off, network::FaultOff{bus}}};
}

void SimConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::contract_violation, "simulation config: " + what); };
  if (!(t_end > 0.0)) bad("t_end must be > 0");
  if (order < 1) bad("series order must be >= 1");
  if ((method != Method::sas || !adaptive) && !(dt > 0.0)) bad("dt must be > 0 for fixed steps");
  if (decimation < 1) bad("decimation must be >= 1");
  if (!(interface.tol_v > 0.0) || interface.max_iter < 1) bad("interface settings must be positive");
  tolerances.validate();
  stepper.validate();
  for (const auto& e : events) {
    if (!(e.t >= 0.0) || !std::isfinite(e.t)) bad("event times must be finite and >= 0");
  }
}

std::size_t Trajectory::channel_index(const std::string& name) const {
  const auto it = std::find(channels.begin(), channels.end(), name);
  if (it == channels.end()) throw Error(ErrorKind::comparison, "unknown channel " + name);
  return static_cast<std::size_t>(it - channels.begin());
}

std::vector<double> Trajectory::column(const std::string& name) const {
  const std::size_t k = channel_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

std::size_t Trajectory::interface_iterations() const {
  std::size_t n = 0;
  for (const auto& w : windows) n += static_cast<std::size_t>(w.iterations);
  return n;
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SASIM_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Runs fn(i) for i in [0, n). Each index writes only its own slot, so the
/// result does not depend on scheduling; the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

constexpr std::array<VarClass, devices::gen::size> kGeneratorClasses{
    VarClass::angle,   VarClass::speed,   VarClass::voltage, VarClass::voltage,
    VarClass::voltage, VarClass::voltage, VarClass::voltage, VarClass::mechanical};
constexpr std::array<VarClass, devices::mot::size> kMotorClasses{VarClass::slip, VarClass::voltage, VarClass::voltage};

constexpr std::array<const char*, devices::gen::size> kGeneratorChannels{"delta_deg", "domega", "eq1", "ed1",
                                                                          "eq2",       "ed2",    "efd", "pm"};
constexpr std::array<const char*, devices::mot::size> kMotorChannels{"slip", "vq1", "vd1"};

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

class Recorder {
 public:
  Recorder(Trajectory& tr, const System& sys) : tr_(tr) {
    for (std::size_t k = 0; k < sys.devices.generators.size(); ++k) {
      for (const char* c : kGeneratorChannels) tr_.channels.push_back("G" + std::to_string(k + 1) + "." + c);
    }
    for (std::size_t k = 0; k < sys.devices.motors.size(); ++k) {
      for (const char* c : kMotorChannels) tr_.channels.push_back("M" + std::to_string(k + 1) + "." + c);
    }
    for (int id : sys.bus_ids) {
      tr_.channels.push_back("B" + std::to_string(id) + ".vm");
      tr_.channels.push_back("B" + std::to_string(id) + ".va_deg");
    }
    last_va_.resize(sys.bus_ids.size());
  }

  void record(double t, const network::DeviceStates& st, std::span<const Complex> v, bool interpolated) {
    std::vector<double> row;
    row.reserve(tr_.channels.size());
    for (const auto& x : st.generators) {
      row.push_back(x[devices::gen::delta] * kRadToDeg);
      for (std::size_t i = 1; i < devices::gen::size; ++i) row.push_back(x[i]);
    }
    for (const auto& x : st.motors) row.insert(row.end(), x.begin(), x.end());
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t b = 0; b < v.size(); ++b) {
      double a = std::arg(v[b]);
      if (started_) a += two_pi * std::round((last_va_[b] - a) / two_pi);
      last_va_[b] = a;
      row.push_back(std::abs(v[b]));
      row.push_back(a * kRadToDeg);
    }
    started_ = true;
    tr_.times.push_back(t);
    tr_.rows.push_back(std::move(row));
    tr_.interpolated.push_back(interpolated);
  }

 private:
  Trajectory& tr_;
  std::vector<double> last_va_;
  bool started_ = false;
};

/// Device derivatives at the given bus voltages.
void device_rates(const network::DeviceSet& ds, const network::DeviceStates& st, std::span<const Complex> v,
                  network::DeviceStates& rates) {
  rates.generators.resize(st.generators.size());
  rates.motors.resize(st.motors.size());
  for (std::size_t k = 0; k < st.generators.size(); ++k) {
    const auto& p = ds.generators[k];
    rates.generators[k] = devices::generator_derivatives(st.generators[k], p, v[p.bus]).rates;
  }
  for (std::size_t k = 0; k < st.motors.size(); ++k) {
    const auto& p = ds.motors[k];
    rates.motors[k] = devices::motor_derivatives(st.motors[k], p, v[p.bus]).rates;
  }
}

/// out = x + a * d, component-wise over all device states.
network::DeviceStates axpy(const network::DeviceStates& x, double a, const network::DeviceStates& d) {
  network::DeviceStates out = x;
  for (std::size_t k = 0; k < out.generators.size(); ++k) {
    for (std::size_t i = 0; i < devices::gen::size; ++i) out.generators[k][i] += a * d.generators[k][i];
  }
  for (std::size_t k = 0; k < out.motors.size(); ++k) {
    for (std::size_t i = 0; i < devices::mot::size; ++i) out.motors[k][i] += a * d.motors[k][i];
  }
  return out;
}

template <std::size_t N>
std::array<double, N> to_array(std::span<const double> x) {
  std::array<double, N> a;
  std::copy(x.begin(), x.end(), a.begin());
  return a;
}

std::string at_time(double t) {
  std::ostringstream s;
  s.precision(9);
  s << " [window starting at t = " << t << " s]";
  return s.str();
}

class Runner {
 public:
  Runner(System sys, const SimConfig& cfg) : sys_(std::move(sys)), cfg_(cfg), rec_(tr_, sys_) {
    events_ = cfg.events;
    std::stable_sort(events_.begin(), events_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    workers_ = worker_count(cfg.workers);
    if (cfg.method == Method::sas && cfg.adaptive && cfg.stepper.stability_margin > 0.0) {
      stability_interval_ = stepper::taylor_stability_interval(cfg.order);
    }
  }

  Trajectory run() {
    const auto t_start = Clock::now();
    const std::size_t solves0 = sys_.net.solve_count();
    const std::size_t facts0 = sys_.net.factorization_count();
    try {
      advance();
    } catch (const Error& e) {
      if (!cfg_.keep_partial) throw;
      tr_.failure_kind = e.kind();
      tr_.failure = e.what();
    }
    tr_.network_solves = sys_.net.solve_count() - solves0;
    tr_.factorizations = sys_.net.factorization_count() - facts0;
    tr_.timings.total = since(t_start);
    return std::move(tr_);
  }

 private:
  void advance() {
    const double t_end = cfg_.t_end;
    const double t_tol = 1e-12 * std::max(1.0, t_end);

    double t = 0.0;
    rec_.record(t, sys_.states, sys_.v, false);
    network::SampleBuffer buffer(2 * (cfg_.v_order + 1));
    buffer.push(t, sys_.v);
    std::size_t self_start_left = cfg_.method == Method::sas ? cfg_.v_order + 2 : 0;
    double h_pre = cfg_.stepper.h_pre;
    int pending_iterations = 0;
    int underflows = 0;
    std::size_t next_event = 0;
    std::size_t window_count = 0;

    while (t < t_end - t_tol) {
      // Events due now: apply, re-solve the network, restart the voltage history.
      if (next_event < events_.size() && events_[next_event].t <= t + t_tol) {
        const auto tn = Clock::now();
        while (next_event < events_.size() && events_[next_event].t <= t + t_tol) {
          sys_.net.apply(events_[next_event].event);
          ++next_event;
        }
        auto res = network::interface_iteration(sys_.net, sys_.devices, sys_.states, sys_.v, cfg_.interface);
        sys_.v = std::move(res.voltages);
        pending_iterations += res.iterations;
        tr_.timings.network += since(tn);
        buffer.clear();
        buffer.push(t, sys_.v);
        if (cfg_.method == Method::sas) self_start_left = cfg_.v_order + 2;
      }

      const double t_limit = next_event < events_.size() ? std::min(t_end, events_[next_event].t) : t_end;
      const double h_limit = t_limit - t;
      WindowRecord w;
      w.t0 = t;

      double t_new = 0.0;
      try {
        switch (cfg_.method) {
          case Method::sas: t_new = sas_window(t, t_limit, h_limit, h_pre, self_start_left, buffer, w); break;
          case Method::fe: t_new = fe_step(t, t_limit, h_limit, w); break;
          case Method::rk4: t_new = rk4_step(t, t_limit, h_limit, w); break;
        }
        if (w.underflow) {
          if (++underflows >= 3) {
            throw Error(ErrorKind::step_underflow, "error-rate tolerance unreachable at h_min for three consecutive windows");
          }
        } else {
          underflows = 0;
        }

        const auto tn = Clock::now();
        auto res = network::interface_iteration(sys_.net, sys_.devices, sys_.states, sys_.v, cfg_.interface);
        sys_.v = std::move(res.voltages);
        w.iterations += res.iterations + pending_iterations;
        pending_iterations = 0;
        w.power_mismatch = network::power_mismatch(sys_.net, sys_.v, res.injections);
        tr_.timings.network += since(tn);
      } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + at_time(t));
      }

      w.h = t_new - t;
      h_pre = w.h;
      t = t_new;
      if (cfg_.method == Method::sas) buffer.push(t, sys_.v);
      tr_.windows.push_back(w);
      ++window_count;
      const bool event_next = next_event < events_.size() && events_[next_event].t <= t + t_tol;
      bool over = false;
      for (const auto& x : sys_.states.generators) over = over || std::abs(x[devices::gen::domega]) > cfg_.speed_limit;
      if (window_count % cfg_.decimation == 0 || t >= t_end - t_tol || event_next || over) {
        rec_.record(t, sys_.states, sys_.v, false);
      }
      if (over) {
        tr_.diverged = true;
        return;
      }
    }
  }

  double snap(double t, double h, double t_limit, double h_limit) const {
    return t + h >= t_limit - 1e-12 * std::max(1.0, std::abs(t_limit)) || h >= h_limit ? t_limit : t + h;
  }

  double sas_window(double t, double t_limit, double h_limit, double h_pre, std::size_t& self_start_left,
                    const network::SampleBuffer& buffer, WindowRecord& w) {
    const std::size_t ng = sys_.devices.generators.size();
    const std::size_t nm = sys_.devices.motors.size();
    const std::size_t n = cfg_.order;

    VoltageSeries vs;
    const bool self_start = self_start_left > 0;
    if (self_start) {
      vs = VoltageSeries::constant(t, sys_.v);
      --self_start_left;
    } else {
      vs = network::fit_voltage_series(buffer, t, cfg_.v_order);
    }
    w.self_start = self_start;

    // Device series, one slot per device.
    auto ts = Clock::now();
    std::vector<SeriesVector> sas(ng + nm);
    parallel_for(ng + nm, workers_, [&](std::size_t u) {
      if (u < ng) {
        const auto& p = sys_.devices.generators[u];
        sas[u] = devices::generator_sas(sys_.states.generators[u], p, vs.buses[p.bus], t, n);
      } else {
        const auto& p = sys_.devices.motors[u - ng];
        sas[u] = devices::motor_sas(sys_.states.motors[u - ng], p, vs.buses[p.bus], t, n);
      }
    });
    tr_.timings.device_sas += since(ts);

    auto bound = [&](double h) {
      stepper::ClassBounds r{};
      for (std::size_t u = 0; u < ng + nm; ++u) {
        if (u < ng) {
          const auto& p = sys_.devices.generators[u];
          const auto& vb = vs.buses[p.bus];
          auto f = [&](double tt, std::span<const double> x, std::span<double> out) {
            const auto rates = devices::generator_derivatives(to_array<devices::gen::size>(x), p, vb.evaluate(tt)).rates;
            std::copy(rates.begin(), rates.end(), out.begin());
          };
          stepper::merge_bounds(r, stepper::error_rate_bound(sas[u], f, kGeneratorClasses, h, cfg_.stepper.samples));
        } else {
          const auto& p = sys_.devices.motors[u - ng];
          const auto& vb = vs.buses[p.bus];
          auto f = [&](double tt, std::span<const double> x, std::span<double> out) {
            const auto rates = devices::motor_derivatives(to_array<devices::mot::size>(x), p, vb.evaluate(tt)).rates;
            std::copy(rates.begin(), rates.end(), out.begin());
          };
          stepper::merge_bounds(r, stepper::error_rate_bound(sas[u], f, kMotorClasses, h, cfg_.stepper.samples));
        }
      }
      return r;
    };

    const auto tw = Clock::now();
    double h = 0.0;
    if (self_start) {
      const double sub = cfg_.adaptive ? cfg_.stepper.h_pre / static_cast<double>(cfg_.v_order + 2) : cfg_.dt;
      h = std::min(sub, h_limit);
      w.predicted = sub;
      w.r = bound(h);
    } else if (cfg_.adaptive) {
      w.stability_cap = stability_cap();
      const double h_cap = std::min(h_limit, w.stability_cap);
      const auto choice = stepper::select_window(bound, h_pre, h_cap, cfg_.stepper, cfg_.tolerances);
      h = choice.h;
      w.predicted = choice.predicted;
      w.r = choice.r;
      w.underflow = choice.underflow;
      if (!cfg_.stepper.verify) w.r = bound(h);
    } else {
      h = std::min(cfg_.dt, h_limit);
      w.predicted = cfg_.dt;
      w.r = bound(h);
    }
    tr_.timings.window_selection += since(tw);

    const double t_new = snap(t, h, t_limit, h_limit);
    ts = Clock::now();
    parallel_for(ng + nm, workers_, [&](std::size_t u) {
      const auto x = sas[u].evaluate(t_new);
      if (u < ng) {
        sys_.states.generators[u] = to_array<devices::gen::size>(x);
      } else {
        sys_.states.motors[u - ng] = to_array<devices::mot::size>(x);
      }
    });

    if (cfg_.intra_samples > 0) {
      for (std::size_t i = 1; i <= cfg_.intra_samples; ++i) {
        const double ti = t + (t_new - t) * static_cast<double>(i) / static_cast<double>(cfg_.intra_samples + 1);
        network::DeviceStates st = sys_.states;
        for (std::size_t u = 0; u < ng + nm; ++u) {
          const auto x = sas[u].evaluate(ti);
          if (u < ng) {
            st.generators[u] = to_array<devices::gen::size>(x);
          } else {
            st.motors[u - ng] = to_array<devices::mot::size>(x);
          }
        }
        rec_.record(ti, st, vs.evaluate(ti), true);
      }
    }
    tr_.timings.device_sas += since(ts);
    return t_new;
  }

  double fe_step(double t, double t_limit, double h_limit, WindowRecord& w) {
    const double t_new = snap(t, cfg_.dt, t_limit, h_limit);
    const double h = t_new - t;
    w.predicted = cfg_.dt;
    const auto ts = Clock::now();
    network::DeviceStates rates;
    device_rates(sys_.devices, sys_.states, sys_.v, rates);
    sys_.states = axpy(sys_.states, h, rates);
    check_finite(sys_.states);
    tr_.timings.device_sas += since(ts);
    return t_new;
  }

  double rk4_step(double t, double t_limit, double h_limit, WindowRecord& w) {
    const double t_new = snap(t, cfg_.dt, t_limit, h_limit);
    const double h = t_new - t;
    w.predicted = cfg_.dt;
    const network::DeviceStates x0 = sys_.states;
    std::array<network::DeviceStates, 4> k;
    device_rates(sys_.devices, x0, sys_.v, k[0]);
    const std::array<double, 3> c{0.5 * h, 0.5 * h, h};
    std::vector<Complex> v = sys_.v;
    for (std::size_t s = 1; s < 4; ++s) {
      const network::DeviceStates xs = axpy(x0, c[s - 1], k[s - 1]);
      check_finite(xs);
      const auto tn = Clock::now();
      auto res = network::interface_iteration(sys_.net, sys_.devices, xs, v, cfg_.interface);
      tr_.timings.network += since(tn);
      v = std::move(res.voltages);
      w.iterations += res.iterations;
      device_rates(sys_.devices, xs, v, k[s]);
    }
    network::DeviceStates x1 = x0;
    x1 = axpy(x1, h / 6.0, k[0]);
    x1 = axpy(x1, h / 3.0, k[1]);
    x1 = axpy(x1, h / 3.0, k[2]);
    x1 = axpy(x1, h / 6.0, k[3]);
    check_finite(x1);
    sys_.states = std::move(x1);
    return t_new;
  }

  /// Largest window keeping every device's voltage-held linearization inside the
  /// stability interval of the truncated series.
  double stability_cap() {
    if (stability_interval_ == 0.0) return stepper::kUnconstrained;
    const std::size_t ng = sys_.devices.generators.size();
    const std::size_t nm = sys_.devices.motors.size();
    std::vector<double> rho(ng + nm, 0.0);
    parallel_for(ng + nm, workers_, [&](std::size_t u) {
      if (u < ng) {
        const auto& p = sys_.devices.generators[u];
        const Complex vb = sys_.v[p.bus];
        auto f = [&](double, std::span<const double> x, std::span<double> out) {
          const auto rates = devices::generator_derivatives(to_array<devices::gen::size>(x), p, vb).rates;
          std::copy(rates.begin(), rates.end(), out.begin());
        };
        rho[u] = stepper::spectral_radius(f, 0.0, sys_.states.generators[u]);
      } else {
        const auto& p = sys_.devices.motors[u - ng];
        const Complex vb = sys_.v[p.bus];
        auto f = [&](double, std::span<const double> x, std::span<double> out) {
          const auto rates = devices::motor_derivatives(to_array<devices::mot::size>(x), p, vb).rates;
          std::copy(rates.begin(), rates.end(), out.begin());
        };
        rho[u] = stepper::spectral_radius(f, 0.0, sys_.states.motors[u - ng]);
      }
    });
    const double r = rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
    if (r <= 0.0) return stepper::kUnconstrained;
    return cfg_.stepper.stability_margin * stability_interval_ / r;
  }

  static void check_finite(const network::DeviceStates& st) {
    for (const auto& x : st.generators) {
      for (double v : x) {
        if (!std::isfinite(v)) throw Error(ErrorKind::propagation_diverged, "generator state became non-finite");
      }
    }
    for (const auto& x : st.motors) {
      for (double v : x) {
        if (!std::isfinite(v)) throw Error(ErrorKind::propagation_diverged, "motor state became non-finite");
      }
    }
  }

  System sys_;
  const SimConfig& cfg_;
  Trajectory tr_;
  Recorder rec_;
  std::vector<TimedEvent> events_;
  std::size_t workers_ = 1;
  double stability_interval_ = 0.0;
};

}  // namespace

System initialize(const Case& c, const network::InterfaceSettings& interface) {
  const std::size_t nb = c.bus_count();
  if (nb == 0) throw Error(ErrorKind::initialization, "case has no buses");
  const std::vector<Complex> v0 = c.power_flow_voltages();

  Case cc = c;
  network::DeviceSet ds;
  network::DeviceStates st;
  double residual = 0.0;

  for (std::size_t k = 0; k < cc.generators.size(); ++k) {
    const auto& g = cc.generators[k];
    if (g.params.bus >= nb) throw Error(ErrorKind::initialization, "generator " + std::to_string(k + 1) + " at unknown bus");
    try {
      const auto init = devices::init_generator(g.params, g.p, g.q, v0[g.params.bus]);
      ds.generators.push_back(init.params);
      st.generators.push_back(init.state);
      residual = std::max(residual, max_abs(devices::generator_derivatives(init.state, init.params, v0[g.params.bus]).rates));
    } catch (const Error& e) {
      throw Error(ErrorKind::initialization, "generator " + std::to_string(k + 1) + ": " + e.what());
    }
  }

  for (auto& ld : cc.loads) {
    if (ld.zip.bus >= nb) throw Error(ErrorKind::initialization, "load at unknown bus");
    ld.zip.v0 = v0[ld.zip.bus];
    ld.zip.validate();
    ds.loads.push_back(ld.zip);
  }

  network::NetworkModel net = network::build_ybus(cc);

  std::vector<std::size_t> motors_at(nb, 0);
  for (const auto& m : cc.motors) {
    if (m.params.bus >= nb) throw Error(ErrorKind::initialization, "motor at unknown bus");
    ++motors_at[m.params.bus];
  }
  for (std::size_t k = 0; k < cc.motors.size(); ++k) {
    const auto& m = cc.motors[k];
    const std::size_t b = m.params.bus;
    const auto ld = std::find_if(cc.loads.begin(), cc.loads.end(), [&](const LoadRecord& l) { return l.zip.bus == b; });
    const std::string who = "motor " + std::to_string(k + 1);
    if (ld == cc.loads.end() || ld->zip.p_share[3] <= 0.0) {
      throw Error(ErrorKind::initialization, who + ": no load with a motor share at its bus");
    }
    const double count = static_cast<double>(motors_at[b]);
    const double p_draw = ld->zip.p_share[3] * ld->zip.p0 / count;
    const double q_target = ld->zip.q_share[3] * ld->zip.q0 / count;
    try {
      const auto init = devices::init_motor(m.params, p_draw, v0[b]);
      ds.motors.push_back(init.params);
      st.motors.push_back(init.state);
      residual = std::max(residual, max_abs(devices::motor_derivatives(init.state, init.params, v0[b]).rates));
      // Shunt supplying the difference between the scheduled and the motor's own reactive draw.
      net.add_shunt(b, Complex(0.0, -(q_target - init.power.imag())) / std::norm(v0[b]));
    } catch (const Error& e) {
      throw Error(ErrorKind::initialization, who + ": " + e.what());
    }
  }

  if (!(residual <= 1e-8)) {
    std::ostringstream msg;
    msg << "device derivatives at the power-flow point reach " << residual << " (limit 1e-8)";
    throw Error(ErrorKind::initialization, msg.str());
  }

  auto res = network::interface_iteration(net, ds, st, v0, interface);
  double shift = 0.0;
  for (std::size_t i = 0; i < nb; ++i) shift = std::max(shift, std::abs(res.voltages[i] - v0[i]));
  if (shift > 1e-5) {
    std::ostringstream msg;
    msg << "network solution moves " << shift << " pu away from the power-flow voltages; the power flow is inconsistent";
    throw Error(ErrorKind::initialization, msg.str());
  }

  std::vector<int> ids;
  ids.reserve(nb);
  for (const auto& b : cc.buses) ids.push_back(b.id);
  return System{std::move(ds), std::move(st), std::move(net), std::move(res.voltages), std::move(ids), residual, shift};
}

Trajectory simulate(System sys, const SimConfig& cfg) {
  cfg.validate();
  for (const auto& e : cfg.events) {
    const std::size_t nb = sys.net.bus_count();
    std::visit(
        [&](const auto& ev) {
          using E = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<E, network::FaultOn> || std::is_same_v<E, network::FaultOff>) {
            if (ev.bus >= nb) throw Error(ErrorKind::event, "event references unknown bus index " + std::to_string(ev.bus));
          } else {
            if (ev.from >= nb || ev.to >= nb) throw Error(ErrorKind::event, "event references an unknown branch");
          }
        },
        e.event);
  }
  Runner runner(std::move(sys), cfg);
  return runner.run();
}

Trajectory simulate(const Case& c, const SimConfig& cfg) {
  cfg.validate();
  return simulate(initialize(c, cfg.interface), cfg);
}

namespace {

double interpolate(const std::vector<double>& t, const std::vector<std::vector<double>>& rows, std::size_t k, double x) {
  const auto it = std::lower_bound(t.begin(), t.end(), x);
  if (it == t.end()) return rows.back()[k];
  const std::size_t j = static_cast<std::size_t>(it - t.begin());
  if (*it == x || j == 0) return rows[j][k];
  const double t0 = t[j - 1], t1 = t[j];
  const double w = (x - t0) / (t1 - t0);
  return (1.0 - w) * rows[j - 1][k] + w * rows[j][k];
}

}  // namespace

std::vector<ChannelDiff> compare(const Trajectory& a, const Trajectory& b, const std::vector<std::string>& channels) {
  if (a.times.empty() || b.times.empty()) throw Error(ErrorKind::comparison, "cannot compare an empty trajectory");
  const double lo = std::max(a.times.front(), b.times.front());
  const double hi = std::min(a.times.back(), b.times.back());
  if (lo > hi) throw Error(ErrorKind::comparison, "trajectories cover disjoint time ranges");

  std::vector<std::string> names = channels;
  if (names.empty()) {
    for (const auto& c : a.channels) {
      if (std::find(b.channels.begin(), b.channels.end(), c) != b.channels.end()) names.push_back(c);
    }
  }
  const Trajectory& sparse = a.times.size() <= b.times.size() ? a : b;
  const Trajectory& dense = &sparse == &a ? b : a;

  std::vector<ChannelDiff> out;
  for (const auto& name : names) {
    const std::size_t ks = sparse.channel_index(name);
    const std::size_t kd = dense.channel_index(name);
    ChannelDiff d;
    d.channel = name;
    std::size_t count = 0;
    for (std::size_t i = 0; i < sparse.times.size(); ++i) {
      const double t = sparse.times[i];
      if (t < lo || t > hi) continue;
      const double e = std::abs(sparse.rows[i][ks] - interpolate(dense.times, dense.rows, kd, t));
      d.max_abs = std::max(d.max_abs, e);
      d.mean_abs += e;
      ++count;
    }
    if (count > 0) d.mean_abs /= static_cast<double>(count);
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> channels_with_suffix(const Trajectory& t, const std::string& suffix) {
  std::vector<std::string> out;
  for (const auto& c : t.channels) {
    if (c.size() >= suffix.size() && c.compare(c.size() - suffix.size(), suffix.size(), suffix) == 0) out.push_back(c);
  }
  return out;
}

}  // namespace sasim::engine
