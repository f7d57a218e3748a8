#pragma once

// Admittance matrix assembly with an event overlay, sparse solution of
// I = Y V, the device/network interface iteration, and polar voltage-series
// fitting from recent window-end samples.

#include <complex>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "sasim/case.hpp"
#include "sasim/devices.hpp"
#include "sasim/voltage.hpp"

namespace sasim::network {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Default three-phase fault: large conductance and (inductive) susceptance.
inline constexpr Complex kDefaultFaultAdmittance{1e6, -1e6};

struct FaultOn {
  std::size_t bus = 0;
  Complex admittance = kDefaultFaultAdmittance;
};
struct FaultOff {
  std::size_t bus = 0;
};
struct BranchTrip {
  std::size_t from = 0, to = 0;
};
struct BranchClose {
  std::size_t from = 0, to = 0;
};
using Event = std::variant<FaultOn, FaultOff, BranchTrip, BranchClose>;

/// Y_B assembled from a fixed base (branches and shunts) plus an overlay of
/// faults and branch status changes. The matrix is rebuilt from scratch after
/// every event, so applying an event and then its inverse restores it exactly.
class NetworkModel {
 public:
  NetworkModel(std::size_t bus_count, std::vector<Branch> branches, std::vector<Complex> shunts);

  std::size_t bus_count() const noexcept { return shunts_.size(); }
  const SparseMatrix& admittance() const noexcept { return y_; }
  std::span<const Branch> branches() const noexcept { return branches_; }
  std::span<const Complex> shunts() const noexcept { return shunts_; }

  /// Adds to a base shunt (not an overlay); invalidates the factorization.
  void add_shunt(std::size_t bus, Complex y);
  void apply(const Event& event);
  bool faulted(std::size_t bus) const { return faults_.contains(bus); }

  /// Solves Y V = I. The factorization is computed once per overlay state.
  std::vector<Complex> solve(std::span<const Complex> injections) const;
  std::size_t solve_count() const noexcept { return solves_; }
  std::size_t factorization_count() const noexcept { return factorizations_; }

 private:
  void rebuild();
  void factorize() const;
  std::size_t find_branch(std::size_t from, std::size_t to, bool in_service) const;

  std::vector<Branch> branches_;
  std::vector<Complex> shunts_;
  std::vector<bool> in_service_;
  std::map<std::size_t, Complex> faults_;
  SparseMatrix y_;

  using Solver = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
  mutable std::unique_ptr<Solver> lu_;
  mutable std::size_t solves_ = 0;
  mutable std::size_t factorizations_ = 0;
};

/// Dynamic elements attached to the network, with parameters after initialization.
struct DeviceSet {
  std::vector<devices::GeneratorParams> generators;
  std::vector<devices::MotorParams> motors;
  std::vector<devices::ZipLoad> loads;
};

struct DeviceStates {
  std::vector<devices::GeneratorState> generators;
  std::vector<devices::MotorState> motors;
};

/// Network-side assembly: branches, constant-impedance load shares and generator Norton shunts.
/// Throws Error(build) when some bus is not connected to the first bus.
NetworkModel build_ybus(const Case& c);

/// Bus injection vector for Y V = I: generator Norton sources minus motor and ZIP currents.
std::vector<Complex> device_injections(const DeviceSet& devices, const DeviceStates& states,
                                       std::span<const Complex> v);

struct InterfaceSettings {
  double tol_v = 1e-8;
  int max_iter = 20;
};

struct InterfaceResult {
  std::vector<Complex> voltages;
  std::vector<Complex> injections;  // evaluated at `voltages`
  int iterations = 0;               // network solves performed
  double last_change = 0.0;
};

/// Fixed point of V -> solve(injections(V)), started from `guess`.
InterfaceResult interface_iteration(const NetworkModel& net, const DeviceSet& devices, const DeviceStates& states,
                                    std::vector<Complex> guess, const InterfaceSettings& settings = {});

/// Re(sum V conj(I_inj)) - Re(sum V conj(Y V)): active power not accounted for by the network.
double power_mismatch(const NetworkModel& net, std::span<const Complex> v, std::span<const Complex> injections);

// ---------------------------------------------------------------------------
// Voltage samples and polynomial fitting

struct VoltageSample {
  double t = 0.0;
  std::vector<double> magnitude;
  std::vector<double> angle;  // unwrapped against the previous sample
};

class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t capacity = 4) : capacity_(capacity) {}

  void push(double t, std::span<const Complex> v);
  void clear() noexcept { samples_.clear(); }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const std::deque<VoltageSample>& samples() const noexcept { return samples_; }
  const VoltageSample& newest() const { return samples_.back(); }

 private:
  std::size_t capacity_;
  std::deque<VoltageSample> samples_;
};

/// Least-squares polynomial of degree `order` through the buffered samples,
/// constrained to pass through the newest sample exactly, expressed about t0.
/// Throws Error(fit) when fewer than order + 1 samples are buffered.
VoltageSeries fit_voltage_series(const SampleBuffer& buffer, double t0, std::size_t order);

}  // namespace sasim::network
