#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "sasim/series.hpp"

namespace sasim {

using Complex = std::complex<double>;

/// Polar-form time polynomial of one bus voltage, V(t) = Vm(t) * exp(j Va(t)).
struct PolarVoltageSeries {
  series::PowerSeries magnitude;  // pu
  series::PowerSeries angle;      // rad

  /// Constant voltage held over the window (all coefficients above order 0 are zero).
  static PolarVoltageSeries constant(double t0, Complex v, std::size_t order = 0);

  double t0() const noexcept { return magnitude.t0(); }
  std::size_t order() const noexcept { return magnitude.order(); }
  Complex evaluate(double t) const;
  /// Re-expressed at `order` (padding zeros or dropping high terms) for use inside propagation.
  PolarVoltageSeries at_order(std::size_t order) const;
};

/// Per-bus voltage polynomials sharing one origin and one order.
struct VoltageSeries {
  double t0 = 0.0;
  std::size_t order = 0;
  std::vector<PolarVoltageSeries> buses;

  static VoltageSeries constant(double t0, const std::vector<Complex>& v);
  std::vector<Complex> evaluate(double t) const;
};

}  // namespace sasim
