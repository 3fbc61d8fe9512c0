#include "cgo2d/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace cgo2d {

namespace {

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

class ExprParser {
 public:
  explicit ExprParser(const std::string& src) : src_(src) {}

  FieldExpr run() {
    FieldExpr e;
    e.source_ = src_;
    skip_ws();
    if (pos_ >= src_.size()) fail(Err::SyntaxError, "empty expression at offset 0");
    nodes_ = &e.nodes_;
    e.root_ = parse_sum();
    skip_ws();
    if (pos_ < src_.size())
      fail(Err::SyntaxError, "unexpected character '" + std::string(1, src_[pos_]) +
                                 "' at offset " + std::to_string(pos_));
    return e;
  }

 private:
  using Op = FieldExpr::Op;

  int add_node(Op op, int a = -1, int b = -1, Complex val = {}) {
    nodes_->push_back({op, a, b, val});
    return int(nodes_->size()) - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  int parse_sum() {
    int lhs = parse_term();
    for (;;) {
      if (consume('+'))
        lhs = add_node(Op::Add, lhs, parse_term());
      else if (consume('-'))
        lhs = add_node(Op::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (consume('*'))
        lhs = add_node(Op::Mul, lhs, parse_unary());
      else if (consume('/'))
        lhs = add_node(Op::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  int parse_unary() {
    if (consume('-')) return add_node(Op::Neg, parse_unary());
    if (consume('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_atom();
    if (consume('^')) {
      // right side allows unary minus: z^-2
      int exp = parse_unary_for_power();
      return add_node(Op::Pow, base, exp);
    }
    return base;
  }

  int parse_unary_for_power() {
    if (consume('-')) return add_node(Op::Neg, parse_unary_for_power());
    return parse_power();
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail(Err::SyntaxError, "unexpected end of input at offset " + std::to_string(pos_));
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      int e = parse_sum();
      if (!consume(')'))
        fail(Err::SyntaxError, "expected ')' at offset " + std::to_string(pos_));
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail(Err::SyntaxError,
         "unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(pos_));
  }

  int parse_number() {
    std::size_t start = pos_;
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail(Err::SyntaxError, "malformed number at offset " + std::to_string(start));
    pos_ += std::size_t(end - begin);
    return add_node(Op::Num, -1, -1, Complex(v, 0.0));
  }

  int parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    std::string name = src_.substr(start, pos_ - start);
    if (name == "x1") return add_node(Op::X1);
    if (name == "x2") return add_node(Op::X2);
    if (name == "z") return add_node(Op::Z);
    if (name == "zbar") return add_node(Op::Zbar);
    if (name == "i") return add_node(Op::Num, -1, -1, Complex(0.0, 1.0));
    if (name == "pi") return add_node(Op::Num, -1, -1, Complex(M_PI, 0.0));
    if (name == "e") return add_node(Op::Num, -1, -1, Complex(M_E, 0.0));

    Op fop;
    if (name == "exp") fop = Op::Exp;
    else if (name == "sin") fop = Op::Sin;
    else if (name == "cos") fop = Op::Cos;
    else if (name == "re") fop = Op::Re;
    else if (name == "im") fop = Op::Im;
    else if (name == "conj") fop = Op::Conj;
    else if (name == "abs2") fop = Op::Abs2;
    else
      fail(Err::UnknownIdentifier, "'" + name + "' at offset " + std::to_string(start));

    if (!consume('('))
      fail(Err::SyntaxError, "expected '(' after '" + name + "' at offset " + std::to_string(pos_));
    int arg = parse_sum();
    if (!consume(')')) fail(Err::SyntaxError, "expected ')' at offset " + std::to_string(pos_));
    return add_node(fop, arg);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  std::vector<FieldExpr::Node>* nodes_ = nullptr;
};

FieldExpr FieldExpr::parse(const std::string& source) { return ExprParser(source).run(); }

FieldExpr parse_field_expr(const std::string& source) {
  if (source.empty()) fail(Err::SyntaxError, "empty expression at offset 0");
  return FieldExpr::parse(source);
}

Complex FieldExpr::eval(double x1, double x2) const {
  // iterative evaluation: nodes were appended post-order, children precede parents
  static thread_local std::vector<Complex> stack;
  stack.assign(nodes_.size(), Complex(0, 0));
  const Complex z(x1, x2);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& n = nodes_[k];
    Complex v;
    switch (n.op) {
      case Op::Num: v = n.val; break;
      case Op::X1: v = Complex(x1, 0); break;
      case Op::X2: v = Complex(x2, 0); break;
      case Op::Z: v = z; break;
      case Op::Zbar: v = std::conj(z); break;
      case Op::Add: v = stack[n.a] + stack[n.b]; break;
      case Op::Sub: v = stack[n.a] - stack[n.b]; break;
      case Op::Mul: v = stack[n.a] * stack[n.b]; break;
      case Op::Div: {
        Complex den = stack[n.b];
        if (den == Complex(0, 0)) fail(Err::EvalError, "division by zero");
        v = stack[n.a] / den;
        break;
      }
      case Op::Pow: {
        Complex b = stack[n.a], e = stack[n.b];
        if (e.imag() == 0.0 && e.real() == std::floor(e.real()) && std::abs(e.real()) <= 64.0)
          v = ipow(b, static_cast<long long>(e.real()));
        else
          v = std::pow(b, e);
        break;
      }
      case Op::Neg: v = -stack[n.a]; break;
      case Op::Exp: v = std::exp(stack[n.a]); break;
      case Op::Sin: v = std::sin(stack[n.a]); break;
      case Op::Cos: v = std::cos(stack[n.a]); break;
      case Op::Re: v = Complex(stack[n.a].real(), 0); break;
      case Op::Im: v = Complex(stack[n.a].imag(), 0); break;
      case Op::Conj: v = std::conj(stack[n.a]); break;
      case Op::Abs2: v = Complex(std::norm(stack[n.a]), 0); break;
    }
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(Err::EvalError, "non-finite value in '" + source_ + "'");
    stack[k] = v;
  }
  return stack[std::size_t(root_)];
}

const char* err_name(Err e) {
  switch (e) {
    case Err::SyntaxError: return "SyntaxError";
    case Err::UnknownIdentifier: return "UnknownIdentifier";
    case Err::EvalError: return "EvalError";
    case Err::DegenerateStencil: return "DegenerateStencil";
    case Err::EmptyRegion: return "EmptyRegion";
    case Err::MeshMismatch: return "MeshMismatch";
    case Err::EllipticityViolation: return "EllipticityViolation";
    case Err::NonRealVectorField: return "NonRealVectorField";
    case Err::MetricNotIdentity: return "MetricNotIdentity";
    case Err::NonPositiveBeta: return "NonPositiveBeta";
    case Err::NonDiffeomorphism: return "NonDiffeomorphism";
    case Err::IncompatibleDifferences: return "IncompatibleDifferences";
    case Err::MultiplyConnected: return "MultiplyConnected";
    case Err::SingularPrincipalPart: return "SingularPrincipalPart";
    case Err::SolveFailure: return "SolveFailure";
    case Err::BasisMismatch: return "BasisMismatch";
    case Err::CorrectionFailure: return "CorrectionFailure";
    case Err::OscillationUnresolved: return "OscillationUnresolved";
    case Err::DegenerateRequest: return "DegenerateRequest";
    case Err::ConstantWeight: return "ConstantWeight";
    case Err::BoundaryConditionUnachievable: return "BoundaryConditionUnachievable";
    case Err::CertificationFailure: return "CertificationFailure";
    case Err::IllConditionedBasis: return "IllConditionedBasis";
    case Err::InfeasibleConstraints: return "InfeasibleConstraints";
    case Err::InterpolationFailure: return "InterpolationFailure";
    case Err::MissingCriticalPoint: return "MissingCriticalPoint";
    case Err::MissingCertificates: return "MissingCertificates";
    case Err::AmplitudeNotVanishing: return "AmplitudeNotVanishing";
    case Err::CauchyDataMismatch: return "CauchyDataMismatch";
    case Err::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace cgo2d
