#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "jet.hpp"

namespace sflow {

// Immutable scalar expression over named variables.  Evaluable over plain
// doubles and over nested dual numbers (Jet), which yields exact forward-mode
// derivatives of any order the carrier supports.
class Expr {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  enum class Kind {
    Const,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Call,
  };

  struct Node {
    Kind kind;
    double value = 0.0;  // Const value, or Pow exponent
    std::string name;    // Var name, named Const, or Call-ee name
    int var_index = -1;
    NodePtr a, b;  // children; for Call: a = argument, b = body over one var
  };

  Expr() = default;

  bool valid() const { return root_ != nullptr; }
  const Node* root() const { return root_.get(); }

  double eval(std::span<const double> point) const;
  Jet eval(std::span<const Jet> point) const;

  // Canonical parenthesized-infix form; reparsing it reproduces an expression
  // with identical evaluation.
  std::string str() const;

  // Constructors for programmatic assembly.
  static Expr constant(double v);
  static Expr named_constant(const std::string& name, double v);
  static Expr variable(const std::string& name, int index);
  static Expr add(Expr a, Expr b);
  static Expr sub(Expr a, Expr b);
  static Expr mul(Expr a, Expr b);
  static Expr div(Expr a, Expr b);
  static Expr neg(Expr a);
  static Expr call(const std::string& name, Expr body, Expr arg);

 private:
  explicit Expr(NodePtr n) : root_(std::move(n)) {}
  NodePtr root_;

  friend class Parser;
};

struct ParseContext {
  std::vector<std::string> variables;  // chart order fixes variable indices
  const std::map<std::string, double>* parameters = nullptr;
  // name -> body over a single variable (the time coordinate)
  const std::vector<std::pair<std::string, Expr>>* time_functions = nullptr;
  int time_index = -1;  // index of the time variable, for bare R == R(t)
};

// Parses `text` per the grammar
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := base ("^" number)?
//   base   := number | ident | ident "(" expr ")" | "(" expr ")" | "-" base
// Throws Err::Syntax (position-annotated) and Err::UnknownIdentifier.
Expr parse_expr(const std::string& text, const ParseContext& ctx);

// Value with gradient and symmetric Hessian.
struct Scalar2 {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<std::vector<double>> hess;
};

double eval_value(const Expr& e, std::span<const double> point);
// Value plus gradient; the value agrees bit-for-bit with eval_value.
std::pair<double, std::vector<double>> eval_grad(const Expr& e,
                                                 std::span<const double> point);
Scalar2 eval2(const Expr& e, std::span<const double> point);

}  // namespace sflow
