#include "sasim/series.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "sasim/error.hpp"

namespace sasim::series {
namespace {

void require_compatible(const PowerSeries& a, const PowerSeries& b, const char* op) {
  if (a.t0() != b.t0() || a.order() != b.order()) {
    std::ostringstream msg;
    msg << "series " << op << ": operands differ (t0 " << a.t0() << " vs " << b.t0() << ", order "
        << a.order() << " vs " << b.order() << ")";
    throw Error(ErrorKind::contract_violation, msg.str());
  }
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

PowerSeries::PowerSeries(double t0, std::vector<double> coeffs) : t0_(t0), coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw Error(ErrorKind::contract_violation, "power series needs at least one coefficient");
}

PowerSeries PowerSeries::constant(double t0, double value, std::size_t order) {
  std::vector<double> c(order + 1, 0.0);
  c[0] = value;
  return {t0, std::move(c)};
}

PowerSeries PowerSeries::variable(double t0, double value, std::size_t order) {
  auto s = constant(t0, value, order);
  if (order >= 1) s.coeffs_[1] = 1.0;
  return s;
}

double PowerSeries::evaluate(double t) const noexcept {
  const double dt = t - t0_;
  double acc = coeffs_.back();
  for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * dt + coeffs_[k];
  return acc;
}

PowerSeries PowerSeries::truncated(std::size_t order) const {
  std::vector<double> c(order + 1, 0.0);
  std::copy_n(coeffs_.begin(), std::min(coeffs_.size(), c.size()), c.begin());
  return {t0_, std::move(c)};
}

PowerSeries& PowerSeries::operator+=(const PowerSeries& rhs) {
  require_compatible(*this, rhs, "add");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
  return *this;
}

PowerSeries& PowerSeries::operator-=(const PowerSeries& rhs) {
  require_compatible(*this, rhs, "subtract");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
  return *this;
}

PowerSeries& PowerSeries::operator*=(const PowerSeries& rhs) {
  *this = *this * rhs;
  return *this;
}

PowerSeries& PowerSeries::operator+=(double rhs) noexcept {
  coeffs_[0] += rhs;
  return *this;
}

PowerSeries& PowerSeries::operator-=(double rhs) noexcept {
  coeffs_[0] -= rhs;
  return *this;
}

PowerSeries& PowerSeries::operator*=(double rhs) noexcept {
  for (double& c : coeffs_) c *= rhs;
  return *this;
}

PowerSeries& PowerSeries::operator/=(double rhs) noexcept {
  for (double& c : coeffs_) c /= rhs;
  return *this;
}

PowerSeries operator-(PowerSeries a) {
  a *= -1.0;
  return a;
}

PowerSeries operator+(PowerSeries a, const PowerSeries& b) { return a += b; }
PowerSeries operator-(PowerSeries a, const PowerSeries& b) { return a -= b; }

PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
  require_compatible(a, b, "multiply");
  const std::size_t n = a.order();
  std::vector<double> c(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= k; ++j) acc += a[j] * b[k - j];
    c[k] = acc;
  }
  return {a.t0(), std::move(c)};
}

PowerSeries operator/(const PowerSeries& a, const PowerSeries& b) {
  require_compatible(a, b, "divide");
  if (b[0] == 0.0) throw Error(ErrorKind::singular_composition, "series division by a series with zero constant term");
  const std::size_t n = a.order();
  std::vector<double> q(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    double acc = a[k];
    for (std::size_t j = 1; j <= k; ++j) acc -= b[j] * q[k - j];
    q[k] = acc / b[0];
  }
  return {a.t0(), std::move(q)};
}

PowerSeries operator+(PowerSeries a, double b) { return a += b; }
PowerSeries operator+(double a, PowerSeries b) { return b += a; }
PowerSeries operator-(PowerSeries a, double b) { return a -= b; }
PowerSeries operator-(double a, const PowerSeries& b) { return -b + a; }
PowerSeries operator*(PowerSeries a, double b) { return a *= b; }
PowerSeries operator*(double a, PowerSeries b) { return b *= a; }
PowerSeries operator/(PowerSeries a, double b) { return a /= b; }
PowerSeries operator/(double a, const PowerSeries& b) { return reciprocal(b) *= a; }

PowerSeries exp(const PowerSeries& a) {
  const std::size_t n = a.order();
  std::vector<double> e(n + 1, 0.0);
  e[0] = std::exp(a[0]);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += static_cast<double>(j) * a[j] * e[k - j];
    e[k] = acc / static_cast<double>(k);
  }
  return {a.t0(), std::move(e)};
}

std::pair<PowerSeries, PowerSeries> sincos(const PowerSeries& a) {
  const std::size_t n = a.order();
  std::vector<double> s(n + 1, 0.0), c(n + 1, 0.0);
  s[0] = std::sin(a[0]);
  c[0] = std::cos(a[0]);
  for (std::size_t k = 1; k <= n; ++k) {
    double ss = 0.0, cc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double ja = static_cast<double>(j) * a[j];
      ss += ja * c[k - j];
      cc -= ja * s[k - j];
    }
    s[k] = ss / static_cast<double>(k);
    c[k] = cc / static_cast<double>(k);
  }
  return {PowerSeries(a.t0(), std::move(s)), PowerSeries(a.t0(), std::move(c))};
}

PowerSeries sin(const PowerSeries& a) { return sincos(a).first; }
PowerSeries cos(const PowerSeries& a) { return sincos(a).second; }

PowerSeries reciprocal(const PowerSeries& a) {
  if (a[0] == 0.0) throw Error(ErrorKind::singular_composition, "reciprocal of a series with zero constant term");
  const std::size_t n = a.order();
  std::vector<double> r(n + 1, 0.0);
  r[0] = 1.0 / a[0];
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += a[j] * r[k - j];
    r[k] = -acc / a[0];
  }
  return {a.t0(), std::move(r)};
}

PowerSeries pow(const PowerSeries& a, double lambda) {
  if (a[0] == 0.0) throw Error(ErrorKind::singular_composition, "power of a series with zero constant term");
  if (a[0] < 0.0 && !is_integer(lambda)) {
    throw Error(ErrorKind::singular_composition, "non-integer power of a series with negative constant term");
  }
  const std::size_t n = a.order();
  std::vector<double> p(n + 1, 0.0);
  p[0] = std::pow(a[0], lambda);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      acc += (lambda * static_cast<double>(j) - static_cast<double>(k - j)) * a[j] * p[k - j];
    }
    p[k] = acc / (static_cast<double>(k) * a[0]);
  }
  return {a.t0(), std::move(p)};
}

PowerSeries differentiate(const PowerSeries& a) {
  const std::size_t n = a.order();
  if (n == 0) return PowerSeries::zero(a.t0(), 0);
  std::vector<double> d(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) d[k - 1] = static_cast<double>(k) * a[k];
  return {a.t0(), std::move(d)};
}

PowerSeries elementary(const PowerSeries& a, Elementary kind, double lambda) {
  switch (kind) {
    case Elementary::exp: return exp(a);
    case Elementary::sin: return sin(a);
    case Elementary::cos: return cos(a);
    case Elementary::reciprocal: return reciprocal(a);
    case Elementary::power: return pow(a, lambda);
  }
  throw Error(ErrorKind::contract_violation, "unknown elementary function");
}

SeriesVector::SeriesVector(std::vector<PowerSeries> components) : components_(std::move(components)) {
  if (components_.empty()) return;
  t0_ = components_.front().t0();
  order_ = components_.front().order();
  for (const auto& c : components_) {
    if (c.t0() != t0_ || c.order() != order_) {
      throw Error(ErrorKind::contract_violation, "series vector components must share origin and order");
    }
  }
}

SeriesVector::SeriesVector(double t0, std::size_t order, std::size_t size)
    : t0_(t0), order_(order), components_(size, PowerSeries::zero(t0, order)) {}

std::vector<double> SeriesVector::evaluate(double t) const {
  std::vector<double> out(components_.size());
  evaluate_into(t, out);
  return out;
}

void SeriesVector::evaluate_into(double t, std::span<double> out) const {
  for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i].evaluate(t);
}

SeriesVector SeriesVector::truncated(std::size_t order) const {
  SeriesVector out(t0_, order, components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) out.components_[i] = components_[i].truncated(order);
  return out;
}

SeriesVector SeriesVector::differentiate() const {
  const std::size_t order = order_ == 0 ? 0 : order_ - 1;
  SeriesVector out(t0_, order, components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) out.components_[i] = series::differentiate(components_[i]);
  return out;
}

SeriesVector propagate(const SeriesField& f, std::span<const double> x0, double t0, std::size_t order) {
  const std::size_t dim = x0.size();
  if (dim == 0) return SeriesVector(t0, order, 0);
  std::vector<std::vector<double>> coeffs(dim, std::vector<double>(order + 1, 0.0));
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(x0[i])) {
      throw PropagationDiverged(0, "initial state component " + std::to_string(i) + " is not finite");
    }
    coeffs[i][0] = x0[i];
  }

  for (std::size_t k = 0; k < order; ++k) {
    std::vector<PowerSeries> partial;
    partial.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      partial.emplace_back(t0, std::vector<double>(coeffs[i].begin(), coeffs[i].begin() + static_cast<long>(k) + 1));
    }
    const SeriesVector rhs = f(SeriesVector(std::move(partial)));
    if (rhs.size() != dim || rhs.order() < k || rhs.t0() != t0) {
      throw Error(ErrorKind::contract_violation, "series field returned a vector of the wrong shape");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const double a = rhs[i][k] / static_cast<double>(k + 1);
      if (!std::isfinite(a) || std::abs(a) > kCoefficientLimit) {
        std::ostringstream msg;
        msg << "coefficient of order " << k + 1 << " in component " << i << " is " << a;
        throw PropagationDiverged(k + 1, msg.str());
      }
      coeffs[i][k + 1] = a;
    }
  }

  std::vector<PowerSeries> out;
  out.reserve(dim);
  for (auto& c : coeffs) out.emplace_back(t0, std::move(c));
  return SeriesVector(std::move(out));
}

}  // namespace sasim::series
