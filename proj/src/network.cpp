#include "sasim/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "sasim/error.hpp"

namespace sasim::network {

namespace {

[[noreturn]] void event_fail(const std::string& what) { throw Error(ErrorKind::event, what); }

std::string bus_pair(std::size_t i, std::size_t j) {
  std::ostringstream s;
  s << "(" << i << ", " << j << ")";
  return s.str();
}

}  // namespace

NetworkModel::NetworkModel(std::size_t bus_count, std::vector<Branch> branches, std::vector<Complex> shunts)
    : branches_(std::move(branches)), shunts_(std::move(shunts)), in_service_(branches_.size(), true) {
  if (shunts_.size() != bus_count) throw Error(ErrorKind::contract_violation, "shunt vector length differs from bus count");
  for (const auto& br : branches_) {
    if (br.from >= bus_count || br.to >= bus_count || br.from == br.to) {
      throw Error(ErrorKind::build, "branch " + bus_pair(br.from, br.to) + " references an invalid bus");
    }
    if (!std::isfinite(br.r) || !std::isfinite(br.x) || !std::isfinite(br.b) || !std::isfinite(br.tap) ||
        br.tap <= 0.0 || (br.r == 0.0 && br.x == 0.0)) {
      throw Error(ErrorKind::build, "branch " + bus_pair(br.from, br.to) + " has invalid parameters");
    }
  }
  rebuild();
}

void NetworkModel::rebuild() {
  const auto n = static_cast<Eigen::Index>(bus_count());
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(4 * branches_.size() + shunts_.size() + faults_.size());
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (!in_service_[k]) continue;
    const Branch& br = branches_[k];
    const Complex y = 1.0 / Complex(br.r, br.x);
    const Complex half_b(0.0, 0.5 * br.b);
    const auto f = static_cast<Eigen::Index>(br.from), t = static_cast<Eigen::Index>(br.to);
    trip.emplace_back(f, f, (y + half_b) / (br.tap * br.tap));
    trip.emplace_back(t, t, y + half_b);
    trip.emplace_back(f, t, -y / br.tap);
    trip.emplace_back(t, f, -y / br.tap);
  }
  for (std::size_t i = 0; i < shunts_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    trip.emplace_back(ii, ii, shunts_[i]);
  }
  for (const auto& [bus, y] : faults_) {
    const auto ii = static_cast<Eigen::Index>(bus);
    trip.emplace_back(ii, ii, y);
  }
  y_ = SparseMatrix(n, n);
  y_.setFromTriplets(trip.begin(), trip.end());
  y_.makeCompressed();
  lu_.reset();
}

void NetworkModel::add_shunt(std::size_t bus, Complex y) {
  if (bus >= bus_count()) throw Error(ErrorKind::build, "shunt at unknown bus " + std::to_string(bus));
  shunts_[bus] += y;
  rebuild();
}

std::size_t NetworkModel::find_branch(std::size_t from, std::size_t to, bool in_service) const {
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& br = branches_[k];
    const bool match = (br.from == from && br.to == to) || (br.from == to && br.to == from);
    if (match && in_service_[k] == in_service) return k;
  }
  return branches_.size();
}

void NetworkModel::apply(const Event& event) {
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, FaultOn>) {
          if (e.bus >= bus_count()) event_fail("fault-on at unknown bus " + std::to_string(e.bus));
          if (faults_.contains(e.bus)) event_fail("bus " + std::to_string(e.bus) + " is already faulted");
          if (!std::isfinite(e.admittance.real()) || !std::isfinite(e.admittance.imag())) {
            event_fail("fault admittance is not finite");
          }
          faults_.emplace(e.bus, e.admittance);
        } else if constexpr (std::is_same_v<E, FaultOff>) {
          if (!faults_.erase(e.bus)) event_fail("fault-off at bus " + std::to_string(e.bus) + " which is not faulted");
        } else if constexpr (std::is_same_v<E, BranchTrip>) {
          const std::size_t k = find_branch(e.from, e.to, true);
          if (k == branches_.size()) event_fail("no in-service branch " + bus_pair(e.from, e.to) + " to trip");
          in_service_[k] = false;
        } else {
          const std::size_t k = find_branch(e.from, e.to, false);
          if (k == branches_.size()) event_fail("no open branch " + bus_pair(e.from, e.to) + " to close");
          in_service_[k] = true;
        }
      },
      event);
  rebuild();
}

void NetworkModel::factorize() const {
  auto lu = std::make_unique<Solver>();
  lu->analyzePattern(y_);
  lu->factorize(y_);
  if (lu->info() != Eigen::Success) {
    throw SolveError(std::numeric_limits<double>::infinity(),
                     "admittance matrix is singular: " + lu->lastErrorMessage());
  }
  lu_ = std::move(lu);
  ++factorizations_;
}

std::vector<Complex> NetworkModel::solve(std::span<const Complex> injections) const {
  const auto n = static_cast<Eigen::Index>(bus_count());
  if (injections.size() != bus_count()) throw Error(ErrorKind::contract_violation, "injection vector length differs from bus count");
  if (!lu_) factorize();
  ++solves_;

  Eigen::VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = injections[static_cast<std::size_t>(i)];
  Eigen::VectorXcd x = lu_->solve(b);
  const double b_norm = b.cwiseAbs().maxCoeff();
  auto residual = [&] { return (y_ * x - b).cwiseAbs().maxCoeff(); };
  double res = n > 0 ? residual() : 0.0;
  if (res > 1e-10 * b_norm) {
    // One step of iterative refinement before giving up.
    x += lu_->solve(Eigen::VectorXcd(b - y_ * x));
    res = residual();
  }
  if (!std::isfinite(res) || res > 1e-10 * b_norm) {
    // Condition estimate: ||Y|| * ||x|| / ||b|| is a lower bound on ||Y|| ||Y^-1||.
    double y_norm = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) y_norm = std::max(y_norm, y_.row(r).cwiseAbs().sum());
    const double kappa = b_norm > 0 ? y_norm * x.cwiseAbs().maxCoeff() / b_norm : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "network solve residual " << res << " exceeds 1e-10 * ||I|| (condition estimate " << kappa << ")";
    throw SolveError(kappa, msg.str());
  }
  return {x.data(), x.data() + n};
}

NetworkModel build_ybus(const Case& c) {
  const std::size_t n = c.bus_count();
  if (n == 0) throw Error(ErrorKind::build, "case has no buses");

  // Connectivity from the first bus over all branches.
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& br : c.branches) {
    if (br.from >= n || br.to >= n) throw Error(ErrorKind::build, "branch references an unknown bus");
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[u]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw Error(ErrorKind::build, "bus " + std::to_string(c.buses[i].id) + " is not connected to the reference island");
  }

  std::vector<Complex> shunts(n, Complex{});
  for (const auto& ld : c.loads) shunts.at(ld.zip.bus) += devices::zip_admittance(ld.zip);
  for (const auto& g : c.generators) shunts.at(g.params.bus) += devices::norton_admittance(g.params);
  return NetworkModel(n, c.branches, std::move(shunts));
}

std::vector<Complex> device_injections(const DeviceSet& devices, const DeviceStates& states, std::span<const Complex> v) {
  std::vector<Complex> inj(v.size(), Complex{});
  for (std::size_t k = 0; k < devices.generators.size(); ++k) {
    const auto& p = devices.generators[k];
    const Complex vb = v[p.bus];
    inj[p.bus] += devices::generator_derivatives(states.generators[k], p, vb).current +
                  devices::norton_admittance(p) * vb;
  }
  for (std::size_t k = 0; k < devices.motors.size(); ++k) {
    const auto& p = devices.motors[k];
    inj[p.bus] -= devices::motor_derivatives(states.motors[k], p, v[p.bus]).current;
  }
  for (const auto& ld : devices.loads) inj[ld.bus] -= devices::zip_current(ld, v[ld.bus]);
  return inj;
}

InterfaceResult interface_iteration(const NetworkModel& net, const DeviceSet& devices, const DeviceStates& states,
                                    std::vector<Complex> guess, const InterfaceSettings& settings) {
  if (guess.size() != net.bus_count()) throw Error(ErrorKind::contract_violation, "voltage guess length differs from bus count");
  std::vector<Complex> v = std::move(guess);
  std::vector<Complex> inj = device_injections(devices, states, v);
  double change = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= settings.max_iter; ++it) {
    std::vector<Complex> v_new = net.solve(inj);
    change = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) change = std::max(change, std::abs(v_new[i] - v[i]));
    v = std::move(v_new);
    std::vector<Complex> inj_new = device_injections(devices, states, v);
    // Injections independent of V (linear network) reproduce themselves exactly.
    if (change <= settings.tol_v || inj_new == inj) {
      // Return the pair that satisfies Y V = I.
      return {std::move(v), std::move(inj), it, change};
    }
    inj = std::move(inj_new);
  }
  std::ostringstream msg;
  msg << "interface iteration did not converge in " << settings.max_iter << " iterations (last max |dV| = " << change
      << ")";
  throw NonConvergence(change, settings.max_iter, msg.str());
}

double power_mismatch(const NetworkModel& net, std::span<const Complex> v, std::span<const Complex> injections) {
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = v[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd yv = net.admittance() * x;
  double p_inj = 0.0, p_net = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p_inj += (x[i] * std::conj(injections[static_cast<std::size_t>(i)])).real();
    p_net += (x[i] * std::conj(yv[i])).real();
  }
  return p_inj - p_net;
}

// ---------------------------------------------------------------------------
// Samples and fitting

void SampleBuffer::push(double t, std::span<const Complex> v) {
  if (capacity_ == 0) throw Error(ErrorKind::contract_violation, "sample buffer has zero capacity");
  VoltageSample s;
  s.t = t;
  s.magnitude.reserve(v.size());
  s.angle.reserve(v.size());
  for (const Complex& x : v) {
    s.magnitude.push_back(std::abs(x));
    s.angle.push_back(std::arg(x));
  }
  if (!samples_.empty()) {
    const VoltageSample& prev = samples_.back();
    if (!(t > prev.t)) throw Error(ErrorKind::contract_violation, "sample timestamps must increase strictly");
    if (prev.angle.size() != v.size()) throw Error(ErrorKind::contract_violation, "sample bus count changed");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.angle[i] += two_pi * std::round((prev.angle[i] - s.angle[i]) / two_pi);
    }
  }
  samples_.push_back(std::move(s));
  while (samples_.size() > capacity_) samples_.pop_front();
}

namespace {

/// Coefficients of p(t) = sum c_k (t - from)^k re-expressed about `to`.
std::vector<double> taylor_shift(std::vector<double> c, double from, double to) {
  const double d = to - from;
  if (d == 0.0) return c;
  // Repeated synthetic division by (u - d), u = t - from.
  const std::size_t n = c.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t j = n - 1; j > k; --j) c[j - 1] += d * c[j];
  }
  return c;
}

}  // namespace

VoltageSeries fit_voltage_series(const SampleBuffer& buffer, double t0, std::size_t order) {
  const auto& samples = buffer.samples();
  if (samples.size() < order + 1 || samples.empty()) {
    std::ostringstream msg;
    msg << "voltage fit of order " << order << " needs " << order + 1 << " samples, buffer has " << samples.size()
        << "; self-start required";
    throw Error(ErrorKind::fit, msg.str());
  }
  const VoltageSample& last = samples.back();
  const std::size_t nb = last.magnitude.size();
  const std::size_t m = samples.size() - 1;  // rows besides the anchor

  VoltageSeries out;
  out.t0 = t0;
  out.order = order;
  out.buses.reserve(nb);

  // Design matrix in scaled time tau = (t - t_last) / scale, shared by all buses.
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(samples[i].t - last.t));
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(order));
  for (std::size_t i = 0; i < m; ++i) {
    const double tau = (samples[i].t - last.t) / scale;
    double p = 1.0;
    for (std::size_t k = 0; k < order; ++k) {
      p *= tau;
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  if (order > 0) qr.compute(a);

  auto fit_one = [&](auto value_of) {
    std::vector<double> c(order + 1, 0.0);
    c[0] = value_of(last);
    if (order > 0) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) rhs[static_cast<Eigen::Index>(i)] = value_of(samples[i]) - c[0];
      const Eigen::VectorXd sol = qr.solve(rhs);
      double s = 1.0;
      for (std::size_t k = 1; k <= order; ++k) {
        s *= scale;
        c[k] = sol[static_cast<Eigen::Index>(k - 1)] / s;
      }
    }
    return series::PowerSeries(t0, taylor_shift(std::move(c), last.t, t0));
  };

  for (std::size_t b = 0; b < nb; ++b) {
    PolarVoltageSeries pv;
    pv.magnitude = fit_one([b](const VoltageSample& s) { return s.magnitude[b]; });
    pv.angle = fit_one([b](const VoltageSample& s) { return s.angle[b]; });
    out.buses.push_back(std::move(pv));
  }
  return out;
}

}  // namespace sasim::network
