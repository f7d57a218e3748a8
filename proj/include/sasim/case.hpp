#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "sasim/devices.hpp"

namespace sasim {

struct Bus {
  int id = 0;
  double base_kv = 0.0;
  double vm = 1.0;  // power-flow magnitude (pu)
  double va = 0.0;  // power-flow angle (rad)
};

struct Branch {
  std::size_t from = 0, to = 0;  // bus indices
  double r = 0.0, x = 0.0;       // series impedance (pu)
  double b = 0.0;                // total line charging (pu)
  double tap = 1.0;              // off-nominal ratio on the from side
};

struct GeneratorRecord {
  double p = 0.0, q = 0.0;  // power-flow injection (pu)
  devices::GeneratorParams params;
};

/// Motor drawing the motor share (p_share[3]) of the load on its bus.
struct MotorRecord {
  devices::MotorParams params;
};

struct LoadRecord {
  devices::ZipLoad zip;  // p0/q0 hold the scheduled bus load, v0 the power-flow voltage
};

/// A validated power system case with its power-flow solution.
struct Case {
  std::string name;
  double base_mva = 100.0;
  double frequency_hz = 60.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<GeneratorRecord> generators;
  std::vector<MotorRecord> motors;
  std::vector<LoadRecord> loads;

  std::size_t bus_count() const noexcept { return buses.size(); }
  std::vector<std::complex<double>> power_flow_voltages() const;
  /// Index of the bus with the given external id; throws Error(case_reference) if absent.
  std::size_t bus_index(int id) const;
};

}  // namespace sasim
