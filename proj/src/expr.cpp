#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace sflow {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_integer(double p) { return p == std::floor(p) && std::abs(p) < 1e15; }

template <class C>
C make_const(std::span<const C> point, double v) {
  if (point.empty()) return C(v);
  return constant_like(point[0], v);
}

[[noreturn]] void domain_error(const Expr::Node* n, const std::string& what) {
  fail(Err::Domain, what + " in subexpression");
}

template <class C>
C eval_node(const Expr::Node* n, std::span<const C> point) {
  switch (n->kind) {
    case Expr::Kind::Const:
      return make_const(point, n->value);
    case Expr::Kind::Var:
      if (n->var_index < 0 || std::size_t(n->var_index) >= point.size())
        fail(Err::Dimension, "variable '" + n->name + "' out of range for point");
      return point[n->var_index];
    case Expr::Kind::Add:
      return eval_node(n->a.get(), point) + eval_node(n->b.get(), point);
    case Expr::Kind::Sub:
      return eval_node(n->a.get(), point) - eval_node(n->b.get(), point);
    case Expr::Kind::Mul:
      return eval_node(n->a.get(), point) * eval_node(n->b.get(), point);
    case Expr::Kind::Div: {
      C num = eval_node(n->a.get(), point);
      C den = eval_node(n->b.get(), point);
      if (value_of(den) == 0.0) domain_error(n, "division by zero");
      return num / den;
    }
    case Expr::Kind::Pow: {
      C base = eval_node(n->a.get(), point);
      if (value_of(base) < 0.0 && !is_integer(n->value))
        domain_error(n, "negative base with non-integer exponent");
      if (value_of(base) == 0.0 && n->value < 0.0)
        domain_error(n, "zero base with negative exponent");
      using std::pow;
      return pow(base, n->value);
    }
    case Expr::Kind::Neg:
      return -eval_node(n->a.get(), point);
    case Expr::Kind::Sin: {
      using std::sin;
      return sin(eval_node(n->a.get(), point));
    }
    case Expr::Kind::Cos: {
      using std::cos;
      return cos(eval_node(n->a.get(), point));
    }
    case Expr::Kind::Tan: {
      using std::tan;
      return tan(eval_node(n->a.get(), point));
    }
    case Expr::Kind::Exp: {
      using std::exp;
      return exp(eval_node(n->a.get(), point));
    }
    case Expr::Kind::Log: {
      C x = eval_node(n->a.get(), point);
      if (value_of(x) <= 0.0) domain_error(n, "log of non-positive value");
      using std::log;
      return log(x);
    }
    case Expr::Kind::Sqrt: {
      C x = eval_node(n->a.get(), point);
      if (value_of(x) < 0.0) domain_error(n, "sqrt of negative value");
      using std::sqrt;
      return sqrt(x);
    }
    case Expr::Kind::Call: {
      C arg = eval_node(n->a.get(), point);
      const C sub[1] = {arg};
      return eval_node(n->b.get(), std::span<const C>(sub, 1));
    }
  }
  fail(Err::Internal, "unreachable expression kind");
}

void print_node(const Expr::Node* n, std::string& out) {
  switch (n->kind) {
    case Expr::Kind::Const:
      if (!n->name.empty()) {
        out += n->name;
      } else if (n->value < 0.0 || std::signbit(n->value)) {
        out += "(-" + fmt_double(-n->value) + ")";
      } else {
        out += fmt_double(n->value);
      }
      return;
    case Expr::Kind::Var:
      out += n->name;
      return;
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
    case Expr::Kind::Mul:
    case Expr::Kind::Div: {
      const char* op = n->kind == Expr::Kind::Add   ? " + "
                       : n->kind == Expr::Kind::Sub ? " - "
                       : n->kind == Expr::Kind::Mul ? " * "
                                                    : " / ";
      out += '(';
      print_node(n->a.get(), out);
      out += op;
      print_node(n->b.get(), out);
      out += ')';
      return;
    }
    case Expr::Kind::Pow:
      out += '(';
      print_node(n->a.get(), out);
      out += ")^";
      out += fmt_double(n->value);
      return;
    case Expr::Kind::Neg:
      out += "(-";
      print_node(n->a.get(), out);
      out += ')';
      return;
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Tan:
    case Expr::Kind::Exp:
    case Expr::Kind::Log:
    case Expr::Kind::Sqrt: {
      const char* fn = n->kind == Expr::Kind::Sin   ? "sin"
                       : n->kind == Expr::Kind::Cos ? "cos"
                       : n->kind == Expr::Kind::Tan ? "tan"
                       : n->kind == Expr::Kind::Exp ? "exp"
                       : n->kind == Expr::Kind::Log ? "log"
                                                    : "sqrt";
      out += fn;
      out += '(';
      print_node(n->a.get(), out);
      out += ')';
      return;
    }
    case Expr::Kind::Call:
      out += n->name;
      out += '(';
      print_node(n->a.get(), out);
      out += ')';
      return;
  }
}

}  // namespace

double Expr::eval(std::span<const double> point) const {
  return eval_node(root_.get(), point);
}

Jet Expr::eval(std::span<const Jet> point) const {
  return eval_node(root_.get(), point);
}

std::string Expr::str() const {
  std::string out;
  print_node(root_.get(), out);
  return out;
}

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::named_constant(const std::string& name, double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = v;
  n->name = name;
  return Expr(std::move(n));
}

Expr Expr::variable(const std::string& name, int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->name = name;
  n->var_index = index;
  return Expr(std::move(n));
}

#define SFLOW_BINARY(fn, kind)                                     \
  Expr Expr::fn(Expr a, Expr b) {                                  \
    auto n = std::make_shared<Node>();                             \
    n->kind = Kind::kind;                                          \
    n->a = a.root_;                                                \
    n->b = b.root_;                                                \
    return Expr(std::move(n));                                     \
  }

SFLOW_BINARY(add, Add)
SFLOW_BINARY(sub, Sub)
SFLOW_BINARY(mul, Mul)
SFLOW_BINARY(div, Div)

#undef SFLOW_BINARY

Expr Expr::neg(Expr a) {
  // (-(-e)) collapses to e so serialized systems stay readable.
  if (a.root_ && a.root_->kind == Kind::Neg) return Expr(a.root_->a);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->a = a.root_;
  return Expr(std::move(n));
}

Expr Expr::call(const std::string& name, Expr body, Expr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->name = name;
  n->a = arg.root_;
  n->b = body.root_;
  return Expr(std::move(n));
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(const std::string& text, const ParseContext& ctx)
      : text_(text), ctx_(ctx) {}

  Expr run() {
    Expr e = parse_e();
    skip_ws();
    if (pos_ != text_.size()) syntax("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void syntax(const std::string& what) {
    fail(Err::Syntax,
         "syntax error at position " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(unsigned(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  double number() {
    skip_ws();
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) syntax("expected a number");
    pos_ += std::size_t(end - start);
    return v;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(unsigned(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Expr parse_e() {
    Expr e = parse_term();
    for (;;) {
      if (eat('+'))
        e = Expr::add(e, parse_term());
      else if (eat('-'))
        e = Expr::sub(e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (eat('*'))
        e = Expr::mul(e, parse_factor());
      else if (eat('/'))
        e = Expr::div(e, parse_factor());
      else
        return e;
    }
  }

  Expr parse_factor() {
    Expr e = parse_base();
    if (eat('^')) {
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Kind::Pow;
      n->value = number();
      n->a = e.root_;
      return Expr(std::move(n));
    }
    return e;
  }

  Expr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) syntax("unexpected end of input");
    char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return Expr::neg(parse_base());
    }
    if (c == '(') {
      ++pos_;
      Expr e = parse_e();
      if (!eat(')')) syntax("expected ')'");
      return e;
    }
    if (std::isdigit(unsigned(c)) || c == '.') return Expr::constant(number());
    if (std::isalpha(unsigned(c)) || c == '_') return parse_ident();
    syntax(std::string("unexpected character '") + c + "'");
  }

  Expr parse_ident() {
    std::size_t at = pos_;
    std::string name = ident();
    if (eat('(')) {
      Expr arg = parse_e();
      if (!eat(')')) syntax("expected ')'");
      Expr::Kind k;
      if (name == "sin")
        k = Expr::Kind::Sin;
      else if (name == "cos")
        k = Expr::Kind::Cos;
      else if (name == "tan")
        k = Expr::Kind::Tan;
      else if (name == "exp")
        k = Expr::Kind::Exp;
      else if (name == "log")
        k = Expr::Kind::Log;
      else if (name == "sqrt")
        k = Expr::Kind::Sqrt;
      else {
        if (const Expr* body = find_time_function(name))
          return Expr::call(name, *body, arg);
        fail(Err::UnknownIdentifier, "unknown function '" + name +
                                         "' at position " + std::to_string(at));
      }
      auto n = std::make_shared<Expr::Node>();
      n->kind = k;
      n->a = arg.root_;
      return Expr(std::move(n));
    }
    for (std::size_t i = 0; i < ctx_.variables.size(); ++i)
      if (ctx_.variables[i] == name)
        return Expr::variable(name, int(i));
    if (ctx_.parameters) {
      auto it = ctx_.parameters->find(name);
      if (it != ctx_.parameters->end())
        return Expr::named_constant(name, it->second);
    }
    if (const Expr* body = find_time_function(name)) {
      // Bare time-function name stands for its value at the time coordinate.
      if (ctx_.time_index < 0)
        fail(Err::UnknownIdentifier,
             "time function '" + name + "' used without a time variable");
      return Expr::call(
          name, *body,
          Expr::variable(ctx_.variables[ctx_.time_index], ctx_.time_index));
    }
    fail(Err::UnknownIdentifier,
         "unknown identifier '" + name + "' at position " + std::to_string(at));
  }

  const Expr* find_time_function(const std::string& name) const {
    if (!ctx_.time_functions) return nullptr;
    for (const auto& [n, body] : *ctx_.time_functions)
      if (n == name) return &body;
    return nullptr;
  }

  const std::string& text_;
  const ParseContext& ctx_;
  std::size_t pos_ = 0;
};

Expr parse_expr(const std::string& text, const ParseContext& ctx) {
  return Parser(text, ctx).run();
}

// ---------------------------------------------------------------------------
// Derivative entry points

double eval_value(const Expr& e, std::span<const double> point) {
  return e.eval(point);
}

std::pair<double, std::vector<double>> eval_grad(
    const Expr& e, std::span<const double> point) {
  const int n = int(point.size());
  std::vector<Jet> pt;
  pt.reserve(n);
  for (int i = 0; i < n; ++i) pt.push_back(Jet::variable(n, i, point[i]));
  Jet r = e.eval(pt);
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = r.deriv(i);
  return {r.value(), std::move(g)};
}

Scalar2 eval2(const Expr& e, std::span<const double> point) {
  const int n = int(point.size());
  JetShape sh = JetShape::gradient(n).nested(n);
  std::vector<Jet> pt;
  pt.reserve(n);
  for (int i = 0; i < n; ++i) {
    Jet v = Jet::constant(sh, point[i]);
    const std::size_t inner = std::size_t(n) + 1;
    v.data()[std::size_t(i) + 1] = 1.0;          // inner gradient seed
    v.data()[(std::size_t(i) + 1) * inner] = 1.0;  // outer gradient seed
    pt.push_back(std::move(v));
  }
  Jet r = e.eval(pt);
  Scalar2 out;
  out.value = r.value();
  out.grad.resize(n);
  for (int i = 0; i < n; ++i) out.grad[i] = r.deriv(i);
  out.hess.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double hij = r.deriv2(i, j);
      double hji = r.deriv2(j, i);
      out.hess[i][j] = 0.5 * (hij + hji);
    }
  return out;
}

}  // namespace sflow
