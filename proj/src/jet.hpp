#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace sflow {

// Shape of a nested dual number.  arity[0] is the number of derivative
// directions at the outermost level, arity[1] the next level in, and so on.
// Depth 0 is a plain scalar.
struct JetShape {
  static constexpr int kMaxDepth = 8;

  std::array<std::uint8_t, kMaxDepth> arity{};
  std::uint8_t depth = 0;

  bool operator==(const JetShape&) const = default;

  std::size_t flat_size() const {
    std::size_t s = 1;
    for (int i = 0; i < depth; ++i) s *= std::size_t(arity[i]) + 1;
    return s;
  }

  // Shape with the outermost level removed.
  JetShape inner() const;
  // Shape with one extra outer level of the given arity.
  JetShape nested(int outer_arity) const;
  // Shape [nvars]: one level carrying a full gradient.
  static JetShape gradient(int nvars);
};

// Truncated nested dual number with runtime shape.  Coefficients are stored
// flat: a depth-k jet is its value block followed by arity[0] derivative
// blocks, each a depth-(k-1) jet.  The scalar value sits at index 0.
//
// Binary operations require identical shapes; plain doubles broadcast as
// constants.  The value slot of every operation is computed by the same
// double expression a plain evaluation would use, so value parts agree
// bit-for-bit with an un-jetted evaluation.
class Jet {
 public:
  using Coeffs = boost::container::small_vector<double, 16>;

  Jet() : c_(1, 0.0) {}
  explicit Jet(double v) : c_(1, v) {}

  static Jet constant(const JetShape& shape, double v);
  // Gradient seed: shape [nvars], value v, unit derivative in slot `index`.
  static Jet variable(int nvars, int index, double v);
  // One-direction outer nesting: value block `value`, derivative block `dot`.
  // Both must share a shape; the result has shape [1] + that shape.
  static Jet nest1(const Jet& value, const Jet& dot);

  const JetShape& shape() const { return shape_; }
  int depth() const { return shape_.depth; }
  std::size_t size() const { return c_.size(); }

  double value() const { return c_[0]; }
  // First-order partial in direction i of the outermost level.
  double deriv(int i) const;
  // Second-order mixed partial (i at the outermost level, j one level in).
  double deriv2(int i, int j) const;

  Jet value_block() const;
  Jet deriv_block(int i) const;

  double* data() { return c_.data(); }
  const double* data() const { return c_.data(); }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(double s, const Jet& a);
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(double s, const Jet& a);
  friend Jet operator-(const Jet& a);

  friend Jet sin(const Jet& a);
  friend Jet cos(const Jet& a);
  friend Jet tan(const Jet& a);
  friend Jet exp(const Jet& a);
  friend Jet log(const Jet& a);
  friend Jet sqrt(const Jet& a);
  friend Jet pow(const Jet& a, double p);

 private:
  Jet(const JetShape& shape, std::size_t n) : shape_(shape), c_(n, 0.0) {}

  JetShape shape_{};
  Coeffs c_ = Coeffs(1, 0.0);
};

// Carrier helpers shared by code templated over double/Jet.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }
inline double constant_like(double, double v) { return v; }
inline Jet constant_like(const Jet& exemplar, double v) {
  return Jet::constant(exemplar.shape(), v);
}

}  // namespace sflow
