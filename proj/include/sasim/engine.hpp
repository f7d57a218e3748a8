#pragma once

// Simulation driver: initialization at the power-flow point, the windowed
// series method with the dynamic-bus coupling, fixed-step Euler and RK4
// references that share the same interface iteration, and trajectory comparison.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sasim/case.hpp"
#include "sasim/error.hpp"
#include "sasim/network.hpp"
#include "sasim/stepper.hpp"

namespace sasim::engine {

enum class Method { sas, fe, rk4 };

const char* to_string(Method m) noexcept;

struct TimedEvent {
  double t = 0.0;
  network::Event event;
};

/// Fault at `bus` (index) from t_on to t_off.
std::vector<TimedEvent> bus_fault(std::size_t bus, double t_on, double t_off,
                                  Complex admittance = network::kDefaultFaultAdmittance);

struct SimConfig {
  Method method = Method::sas;
  std::size_t order = 2;    // series order n
  std::size_t v_order = 1;  // voltage polynomial order n_v
  stepper::ToleranceSet tolerances = stepper::ToleranceSet::machine(2.0, 0.01, 0.001);
  stepper::StepperConfig stepper;
  bool adaptive = true;     // series windows chosen by the stepper; otherwise fixed at dt
  double dt = 1e-3;         // fixed window or step (s)
  double t_end = 10.0;
  std::vector<TimedEvent> events;
  std::size_t decimation = 1;     // record every k-th window end
  std::size_t intra_samples = 0;  // interpolated rows inside each series window
  network::InterfaceSettings interface;
  std::size_t workers = 0;        // 0: SASIM_WORKERS environment variable, else 1
  /// Stop (without error) once any generator |speed deviation| exceeds this (pu).
  double speed_limit = std::numeric_limits<double>::infinity();
  /// Return the trajectory up to a failure instead of throwing; see Trajectory::failure.
  bool keep_partial = false;

  void validate() const;
};

struct WindowRecord {
  double t0 = 0.0, h = 0.0;
  double predicted = 0.0;  // stepper extrapolation before limits
  int iterations = 0;      // interface iterations (network solves)
  stepper::ClassBounds r{};
  double power_mismatch = 0.0;
  bool self_start = false;
  bool underflow = false;
  double stability_cap = std::numeric_limits<double>::infinity();  // adaptive series windows only
};

struct PhaseTimings {
  double device_sas = 0.0;  // series generation and evaluation (or derivative evaluation)
  double network = 0.0;     // interface iterations and event handling
  double window_selection = 0.0;
  double total = 0.0;
};

struct Trajectory {
  std::vector<std::string> channels;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::vector<bool> interpolated;
  std::vector<WindowRecord> windows;
  std::size_t network_solves = 0;
  std::size_t factorizations = 0;
  PhaseTimings timings;
  bool diverged = false;                  // stopped by speed_limit
  std::optional<ErrorKind> failure_kind;  // set when keep_partial caught an error
  std::string failure;

  /// Throws Error(comparison) when the channel is absent.
  std::size_t channel_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  std::size_t interface_iterations() const;
};

/// Dynamic system at the power-flow point: initialized devices, network and voltages.
struct System {
  network::DeviceSet devices;
  network::DeviceStates states;
  network::NetworkModel net;
  std::vector<Complex> v;
  std::vector<int> bus_ids;
  double init_residual = 0.0;      // max |dx/dt| over devices at the initial point
  double init_voltage_shift = 0.0; // max |V - V_pf| after the initial interface solve
};

/// Throws Error(initialization) when a device cannot be initialized or its
/// derivatives at the power-flow point exceed 1e-8.
System initialize(const Case& c, const network::InterfaceSettings& interface = {});

Trajectory simulate(const Case& c, const SimConfig& cfg);
Trajectory simulate(System sys, const SimConfig& cfg);

struct ChannelDiff {
  std::string channel;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// Per-channel differences on the sparser time grid, interpolating the denser
/// trajectory linearly. Uses all shared channels when `channels` is empty.
std::vector<ChannelDiff> compare(const Trajectory& a, const Trajectory& b, const std::vector<std::string>& channels = {});

/// Channels whose name ends with `suffix` (for example ".delta_deg").
std::vector<std::string> channels_with_suffix(const Trajectory& t, const std::string& suffix);

std::size_t worker_count(std::size_t requested);

}  // namespace sasim::engine
