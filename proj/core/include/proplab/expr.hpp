// Symbolic expressions for metric components, connection entries and potentials.
// Closed under parsing, integer-power differentiation and IEEE evaluation.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace proplab::expr {

constexpr int kMaxDim = 4;

enum class Kind : std::uint8_t { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func : std::uint8_t { Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh };

const char* func_name(Func f);

struct SyntaxError : std::runtime_error {
  std::size_t offset;                 // byte offset into the input
  std::vector<std::string> expected;  // expected-token set at that offset
  SyntaxError(std::size_t off, std::vector<std::string> exp, const std::string& text);
};

struct UnknownIdentifier : std::runtime_error {
  std::size_t offset;
  std::string name;
  UnknownIdentifier(std::size_t off, std::string ident);
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

class Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable AST node. Expressions are shared freely across threads.
class Node {
 public:
  Kind kind;
  double value = 0.0;  // Number
  int var = -1;        // Var: 0..3 (t aliases x0)
  Func func = Func::Sin;
  int exponent = 0;    // Pow
  NodePtr a, b;

  explicit Node(Kind k) : kind(k) {}
};

// Value-semantic handle over the shared AST.
class Expr {
 public:
  Expr() : node_(nullptr) {}
  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static Expr number(double v);
  static Expr variable(int index);

  bool valid() const { return node_ != nullptr; }
  const Node& node() const { return *node_; }
  NodePtr ptr() const { return node_; }

  bool is_number() const { return node_ && node_->kind == Kind::Number; }
  bool is_zero() const { return is_number() && node_->value == 0.0; }
  bool is_one() const { return is_number() && node_->value == 1.0; }

  friend Expr operator-(const Expr& e);
  friend Expr operator+(const Expr& l, const Expr& r);
  friend Expr operator-(const Expr& l, const Expr& r);
  friend Expr operator*(const Expr& l, const Expr& r);
  friend Expr operator/(const Expr& l, const Expr& r);

 private:
  NodePtr node_;
};

Expr pow(const Expr& base, int exponent);
Expr call(Func f, const Expr& arg);

// Parses per the grammar: ^ > unary- > *,/ > +,- ; left-assoc except ^ (right-assoc,
// constant integer exponents only). Variables x0..x3 and alias t; functions
// sin cos tan exp log sqrt sinh cosh tanh.
Expr parse_expression(const std::string& text);

// Exact symbolic derivative with constant folding (0*e -> 0, e+0 -> e, 1*e -> e).
Expr differentiate(const Expr& e, int var);

double evaluate(const Expr& e, std::span<const double> x);

struct EvalResult {
  double value;
  bool finite;  // false when NaN/Inf propagated
};
EvalResult evaluate_flagged(const Expr& e, std::span<const double> x);

std::string to_string(const Expr& e);

// Structural equality (same tree shape and payloads).
bool equal(const Expr& l, const Expr& r);

// Flat postfix tape for fast repeated evaluation (flows call the metric
// derivatives thousands of times per trajectory).
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);
  double eval(std::span<const double> x) const;
  bool valid() const { return !ops_.empty(); }

 private:
  struct Op {
    Kind kind;
    double value;
    int arg;  // var index, integer exponent, or Func
  };
  std::vector<Op> ops_;
  void emit(const Node& n);
};

}  // namespace proplab::expr
