#pragma once

#include <string>
#include <vector>

#include "cgo2d/errors.hpp"
#include "cgo2d/numerics.hpp"

namespace cgo2d {

// Expression over x1, x2, z, zbar with constants i/pi/e, operators + - * / ^
// (precedence ^ > unary- > * / > + -) and functions exp, sin, cos, re, im,
// conj, abs2. Parsed once into a flat tree; evaluation is deterministic.
class FieldExpr {
 public:
  enum class Op : std::uint8_t {
    Num, X1, X2, Z, Zbar,
    Add, Sub, Mul, Div, Pow, Neg,
    Exp, Sin, Cos, Re, Im, Conj, Abs2,
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    Complex val{};
  };

  const std::string& source() const { return source_; }
  bool empty() const { return nodes_.empty(); }

  // Evaluates at a point; throws Error(Err::EvalError) on division by zero
  // or non-finite result.
  Complex eval(double x1, double x2) const;

  static FieldExpr parse(const std::string& source);

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;
  friend class ExprParser;
};

// parse_field_expr("x1 + i*x2") -> expression tree for z
FieldExpr parse_field_expr(const std::string& source);

}  // namespace cgo2d
