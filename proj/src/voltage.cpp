#include "sasim/voltage.hpp"

#include <cmath>

namespace sasim {

PolarVoltageSeries PolarVoltageSeries::constant(double t0, Complex v, std::size_t order) {
  return {series::PowerSeries::constant(t0, std::abs(v), order),
          series::PowerSeries::constant(t0, std::arg(v), order)};
}

Complex PolarVoltageSeries::evaluate(double t) const { return std::polar(magnitude.evaluate(t), angle.evaluate(t)); }

PolarVoltageSeries PolarVoltageSeries::at_order(std::size_t order) const {
  return {magnitude.truncated(order), angle.truncated(order)};
}

VoltageSeries VoltageSeries::constant(double t0, const std::vector<Complex>& v) {
  VoltageSeries out;
  out.t0 = t0;
  out.order = 0;
  out.buses.reserve(v.size());
  for (const Complex& vb : v) out.buses.push_back(PolarVoltageSeries::constant(t0, vb));
  return out;
}

std::vector<Complex> VoltageSeries::evaluate(double t) const {
  std::vector<Complex> out;
  out.reserve(buses.size());
  for (const auto& b : buses) out.push_back(b.evaluate(t));
  return out;
}

}  // namespace sasim
