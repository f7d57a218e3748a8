#pragma once

// Truncated power series in (t - t0) and order-by-order Taylor propagation.
//
// A PowerSeries of order n holds n+1 dense coefficients. Binary operations
// require a common origin t0 and a common order; scalars act as constant
// series. Elementary functions use the usual convolution recurrences and are
// exact to the truncation order.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace sasim::series {

class PowerSeries {
 public:
  PowerSeries() : coeffs_(1, 0.0) {}
  PowerSeries(double t0, std::vector<double> coeffs);

  static PowerSeries constant(double t0, double value, std::size_t order);
  static PowerSeries zero(double t0, std::size_t order) { return constant(t0, 0.0, order); }
  /// value + (t - t0): the identity map shifted to `value`.
  static PowerSeries variable(double t0, double value, std::size_t order);

  double t0() const noexcept { return t0_; }
  std::size_t order() const noexcept { return coeffs_.size() - 1; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double operator[](std::size_t k) const { return coeffs_[k]; }
  double& operator[](std::size_t k) { return coeffs_[k]; }

  /// Horner evaluation at absolute time t.
  double evaluate(double t) const noexcept;

  /// Same polynomial re-expressed at another order: drops high terms or pads zeros.
  PowerSeries truncated(std::size_t order) const;

  PowerSeries& operator+=(const PowerSeries& rhs);
  PowerSeries& operator-=(const PowerSeries& rhs);
  PowerSeries& operator*=(const PowerSeries& rhs);
  PowerSeries& operator+=(double rhs) noexcept;
  PowerSeries& operator-=(double rhs) noexcept;
  PowerSeries& operator*=(double rhs) noexcept;
  PowerSeries& operator/=(double rhs) noexcept;

 private:
  double t0_ = 0.0;
  std::vector<double> coeffs_;
};

PowerSeries operator-(PowerSeries a);
PowerSeries operator+(PowerSeries a, const PowerSeries& b);
PowerSeries operator-(PowerSeries a, const PowerSeries& b);
PowerSeries operator*(const PowerSeries& a, const PowerSeries& b);
PowerSeries operator/(const PowerSeries& a, const PowerSeries& b);
PowerSeries operator+(PowerSeries a, double b);
PowerSeries operator+(double a, PowerSeries b);
PowerSeries operator-(PowerSeries a, double b);
PowerSeries operator-(double a, const PowerSeries& b);
PowerSeries operator*(PowerSeries a, double b);
PowerSeries operator*(double a, PowerSeries b);
PowerSeries operator/(PowerSeries a, double b);
PowerSeries operator/(double a, const PowerSeries& b);

PowerSeries exp(const PowerSeries& a);
PowerSeries sin(const PowerSeries& a);
PowerSeries cos(const PowerSeries& a);
std::pair<PowerSeries, PowerSeries> sincos(const PowerSeries& a);
/// 1/a. Requires a_0 != 0.
PowerSeries reciprocal(const PowerSeries& a);
/// a^lambda. Requires a_0 != 0, and a_0 > 0 unless lambda is an integer.
PowerSeries pow(const PowerSeries& a, double lambda);
/// Coefficients k*a_k shifted down; order drops by one (order-0 input gives a zero constant).
PowerSeries differentiate(const PowerSeries& a);

enum class Elementary { exp, sin, cos, reciprocal, power };
PowerSeries elementary(const PowerSeries& a, Elementary kind, double lambda = 1.0);

/// Components share one origin and one order.
class SeriesVector {
 public:
  SeriesVector() = default;
  explicit SeriesVector(std::vector<PowerSeries> components);
  SeriesVector(double t0, std::size_t order, std::size_t size);

  double t0() const noexcept { return t0_; }
  std::size_t order() const noexcept { return order_; }
  std::size_t size() const noexcept { return components_.size(); }
  const PowerSeries& operator[](std::size_t i) const { return components_[i]; }
  PowerSeries& operator[](std::size_t i) { return components_[i]; }
  std::span<const PowerSeries> components() const noexcept { return components_; }

  std::vector<double> evaluate(double t) const;
  void evaluate_into(double t, std::span<double> out) const;
  SeriesVector truncated(std::size_t order) const;
  SeriesVector differentiate() const;

 private:
  double t0_ = 0.0;
  std::size_t order_ = 0;
  std::vector<PowerSeries> components_;
};

/// Maps the partial state series of order k to f(x(t)) truncated to order k.
using SeriesField = std::function<SeriesVector(const SeriesVector&)>;

/// Coefficients above this magnitude abort propagation.
inline constexpr double kCoefficientLimit = 1e12;

/// Builds the order-n Taylor solution of x' = f(x), x(t0) = x0, one coefficient
/// vector at a time: a_{k+1} = b_k / (k+1), where b_k is the k-th coefficient of
/// f evaluated on the order-k partial series.
SeriesVector propagate(const SeriesField& f, std::span<const double> x0, double t0, std::size_t order);

}  // namespace sasim::series
