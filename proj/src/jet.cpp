#include "jet.hpp"

#include <cmath>
#include <stdexcept>

namespace sflow {

namespace {

std::size_t block_size(const JetShape& sh, int level) {
  std::size_t s = 1;
  for (int i = level; i < sh.depth; ++i) s *= std::size_t(sh.arity[i]) + 1;
  return s;
}

// out += a * b, all depth-(depth - level) blocks of the same shape.
void mul_acc(const double* a, const double* b, double* out, const JetShape& sh,
             int level) {
  if (level == sh.depth) {
    out[0] += a[0] * b[0];
    return;
  }
  const std::size_t s = block_size(sh, level + 1);
  const int n = sh.arity[level];
  mul_acc(a, b, out, sh, level + 1);
  for (int i = 0; i < n; ++i) {
    const std::size_t off = (std::size_t(i) + 1) * s;
    mul_acc(a + off, b, out + off, sh, level + 1);
    mul_acc(a, b + off, out + off, sh, level + 1);
  }
}

// out = a / b.
void div_into(const double* a, const double* b, double* out, const JetShape& sh,
              int level) {
  if (level == sh.depth) {
    out[0] = a[0] / b[0];
    return;
  }
  const std::size_t s = block_size(sh, level + 1);
  const int n = sh.arity[level];
  div_into(a, b, out, sh, level + 1);
  std::vector<double> tmp(s);
  for (int i = 0; i < n; ++i) {
    const std::size_t off = (std::size_t(i) + 1) * s;
    // out.g[i] = (a.g[i] - out.val * b.g[i]) / b.val
    std::fill(tmp.begin(), tmp.end(), 0.0);
    mul_acc(out, b + off, tmp.data(), sh, level + 1);
    std::vector<double> num(a + off, a + off + s);
    for (std::size_t k = 0; k < s; ++k) num[k] -= tmp[k];
    div_into(num.data(), b, out + off, sh, level + 1);
  }
}

using ScalarFn = double (*)(double);

// Generic chain rule: out.val = f(a.val); out.g[i] = df(a.val) * a.g[i],
// where df is itself evaluated recursively one level down.
template <class F, class DF>
void lift_into(const double* a, double* out, const JetShape& sh, int level,
               F&& f, DF&& df) {
  if (level == sh.depth) {
    out[0] = f(a[0]);
    return;
  }
  const std::size_t s = block_size(sh, level + 1);
  const int n = sh.arity[level];
  lift_into(a, out, sh, level + 1, f, df);
  if (n == 0) return;
  std::vector<double> d(s);
  df(a, d.data(), sh, level + 1);
  for (int i = 0; i < n; ++i) {
    const std::size_t off = (std::size_t(i) + 1) * s;
    std::fill(out + off, out + off + s, 0.0);
    mul_acc(d.data(), a + off, out + off, sh, level + 1);
  }
}

void sin_into(const double* a, double* out, const JetShape& sh, int level);
void cos_into(const double* a, double* out, const JetShape& sh, int level);

void sin_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::sin(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        cos_into(x, d, s2, l2);
      });
}

void cos_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::cos(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        sin_into(x, d, s2, l2);
        const std::size_t n = block_size(s2, l2);
        for (std::size_t k = 0; k < n; ++k) d[k] = -d[k];
      });
}

void exp_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::exp(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        exp_into(x, d, s2, l2);
      });
}

void log_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::log(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        // d = 1 / x
        const std::size_t n = block_size(s2, l2);
        std::vector<double> one(n, 0.0);
        one[0] = 1.0;
        div_into(one.data(), x, d, s2, l2);
      });
}

void sqrt_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::sqrt(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        // d = 0.5 / sqrt(x)
        const std::size_t n = block_size(s2, l2);
        std::vector<double> r(n);
        sqrt_into(x, r.data(), s2, l2);
        std::vector<double> half(n, 0.0);
        half[0] = 0.5;
        div_into(half.data(), r.data(), d, s2, l2);
      });
}

void pow_into(const double* a, double* out, const JetShape& sh, int level,
              double p) {
  lift_into(
      a, out, sh, level, [p](double x) { return std::pow(x, p); },
      [p](const double* x, double* d, const JetShape& s2, int l2) {
        pow_into(x, d, s2, l2, p - 1.0);
        const std::size_t n = block_size(s2, l2);
        for (std::size_t k = 0; k < n; ++k) d[k] *= p;
      });
}

void tan_into(const double* a, double* out, const JetShape& sh, int level) {
  lift_into(
      a, out, sh, level, [](double x) { return std::tan(x); },
      [](const double* x, double* d, const JetShape& s2, int l2) {
        // d = 1 + tan(x)^2
        const std::size_t n = block_size(s2, l2);
        std::vector<double> t(n);
        tan_into(x, t.data(), s2, l2);
        std::fill(d, d + n, 0.0);
        mul_acc(t.data(), t.data(), d, s2, l2);
        d[0] += 1.0;
      });
}

void check_same_shape(const JetShape& a, const JetShape& b) {
  if (!(a == b)) throw std::logic_error("jet shape mismatch");
}

}  // namespace

JetShape JetShape::inner() const {
  JetShape s;
  s.depth = depth > 0 ? std::uint8_t(depth - 1) : 0;
  for (int i = 1; i < depth; ++i) s.arity[i - 1] = arity[i];
  return s;
}

JetShape JetShape::nested(int outer_arity) const {
  if (depth + 1 > kMaxDepth) throw std::logic_error("jet nesting too deep");
  JetShape s;
  s.depth = std::uint8_t(depth + 1);
  s.arity[0] = std::uint8_t(outer_arity);
  for (int i = 0; i < depth; ++i) s.arity[i + 1] = arity[i];
  return s;
}

JetShape JetShape::gradient(int nvars) {
  JetShape s;
  s.depth = 1;
  s.arity[0] = std::uint8_t(nvars);
  return s;
}

Jet Jet::constant(const JetShape& shape, double v) {
  Jet r(shape, shape.flat_size());
  r.c_[0] = v;
  return r;
}

Jet Jet::variable(int nvars, int index, double v) {
  JetShape sh = JetShape::gradient(nvars);
  Jet r(sh, sh.flat_size());
  r.c_[0] = v;
  r.c_[std::size_t(index) + 1] = 1.0;
  return r;
}

Jet Jet::nest1(const Jet& value, const Jet& dot) {
  check_same_shape(value.shape_, dot.shape_);
  JetShape sh = value.shape_.nested(1);
  Jet r(sh, sh.flat_size());
  const std::size_t s = value.c_.size();
  std::copy(value.c_.begin(), value.c_.end(), r.c_.begin());
  std::copy(dot.c_.begin(), dot.c_.end(), r.c_.begin() + s);
  return r;
}

double Jet::deriv(int i) const {
  const std::size_t s = shape_.inner().flat_size();
  return c_[(std::size_t(i) + 1) * s];
}

double Jet::deriv2(int i, int j) const {
  const JetShape in1 = shape_.inner();
  const std::size_t s1 = in1.flat_size();
  const std::size_t s2 = in1.inner().flat_size();
  return c_[(std::size_t(i) + 1) * s1 + (std::size_t(j) + 1) * s2];
}

Jet Jet::value_block() const {
  JetShape in = shape_.inner();
  Jet r(in, in.flat_size());
  std::copy(c_.begin(), c_.begin() + r.c_.size(), r.c_.begin());
  return r;
}

Jet Jet::deriv_block(int i) const {
  JetShape in = shape_.inner();
  Jet r(in, in.flat_size());
  const std::size_t s = r.c_.size();
  const std::size_t off = (std::size_t(i) + 1) * s;
  std::copy(c_.begin() + off, c_.begin() + off + s, r.c_.begin());
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  if (depth() == 0 && o.depth() > 0) *this = constant(o.shape_, c_[0]);
  check_same_shape(shape_, o.shape_);
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  if (depth() == 0 && o.depth() > 0) *this = constant(o.shape_, c_[0]);
  check_same_shape(shape_, o.shape_);
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}
Jet& Jet::operator-=(double s) {
  c_[0] -= s;
  return *this;
}
Jet& Jet::operator*=(double s) {
  for (auto& x : c_) x *= s;
  return *this;
}
Jet& Jet::operator/=(double s) {
  for (auto& x : c_) x /= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  if (a.depth() == 0 && b.depth() > 0) return Jet::constant(b.shape_, a.c_[0]) * b;
  if (b.depth() == 0 && a.depth() > 0) return a * Jet::constant(a.shape_, b.c_[0]);
  check_same_shape(a.shape_, b.shape_);
  Jet r(a.shape_, a.c_.size());
  mul_acc(a.c_.data(), b.c_.data(), r.c_.data(), a.shape_, 0);
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (a.depth() == 0 && b.depth() > 0) return Jet::constant(b.shape_, a.c_[0]) / b;
  if (b.depth() == 0 && a.depth() > 0) return a / Jet::constant(a.shape_, b.c_[0]);
  check_same_shape(a.shape_, b.shape_);
  Jet r(a.shape_, a.c_.size());
  div_into(a.c_.data(), b.c_.data(), r.c_.data(), a.shape_, 0);
  return r;
}

Jet operator-(double s, const Jet& a) {
  Jet r = -a;
  r.c_[0] += s;
  return r;
}

Jet operator/(double s, const Jet& a) { return Jet::constant(a.shape_, s) / a; }

Jet operator-(const Jet& a) {
  Jet r = a;
  for (auto& x : r.c_) x = -x;
  return r;
}

#define SFLOW_JET_FN(name, kernel)                \
  Jet name(const Jet& a) {                        \
    Jet r = a;                                    \
    kernel(a.c_.data(), r.c_.data(), a.shape_, 0); \
    return r;                                     \
  }

SFLOW_JET_FN(sin, sin_into)
SFLOW_JET_FN(cos, cos_into)
SFLOW_JET_FN(tan, tan_into)
SFLOW_JET_FN(exp, exp_into)
SFLOW_JET_FN(log, log_into)
SFLOW_JET_FN(sqrt, sqrt_into)

#undef SFLOW_JET_FN

Jet pow(const Jet& a, double p) {
  Jet r = a;
  pow_into(a.c_.data(), r.c_.data(), a.shape_, 0, p);
  return r;
}

}  // namespace sflow
