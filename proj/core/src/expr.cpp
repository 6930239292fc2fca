#include "proplab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace proplab::expr {

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Sinh: return "sinh";
    case Func::Cosh: return "cosh";
    case Func::Tanh: return "tanh";
  }
  return "?";
}

namespace {

std::string format_expected(std::size_t off, const std::vector<std::string>& exp) {
  std::ostringstream os;
  os << "syntax error at byte " << off << "; expected ";
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (i) os << (i + 1 == exp.size() ? " or " : ", ");
    os << exp[i];
  }
  return os.str();
}

}  // namespace

SyntaxError::SyntaxError(std::size_t off, std::vector<std::string> exp, const std::string&)
    : std::runtime_error(format_expected(off, exp)), offset(off), expected(std::move(exp)) {}

UnknownIdentifier::UnknownIdentifier(std::size_t off, std::string ident)
    : std::runtime_error("unknown identifier '" + ident + "' at byte " + std::to_string(off)),
      offset(off),
      name(std::move(ident)) {}

Expr Expr::number(double v) {
  auto n = std::make_shared<Node>(Kind::Number);
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(int index) {
  if (index < 0 || index >= kMaxDim) throw std::invalid_argument("variable index out of range");
  auto n = std::make_shared<Node>(Kind::Var);
  n->var = index;
  return Expr(std::move(n));
}

Expr operator-(const Expr& e) {
  if (e.is_number()) return Expr::number(-e.node().value);
  if (e.node().kind == Kind::Neg) return Expr(e.node().a);
  auto n = std::make_shared<Node>(Kind::Neg);
  n->a = e.ptr();
  return Expr(std::move(n));
}

Expr operator+(const Expr& l, const Expr& r) {
  if (l.is_zero()) return r;
  if (r.is_zero()) return l;
  if (l.is_number() && r.is_number()) return Expr::number(l.node().value + r.node().value);
  auto n = std::make_shared<Node>(Kind::Add);
  n->a = l.ptr();
  n->b = r.ptr();
  return Expr(std::move(n));
}

Expr operator-(const Expr& l, const Expr& r) {
  if (r.is_zero()) return l;
  if (l.is_zero()) return -r;
  if (l.is_number() && r.is_number()) return Expr::number(l.node().value - r.node().value);
  auto n = std::make_shared<Node>(Kind::Sub);
  n->a = l.ptr();
  n->b = r.ptr();
  return Expr(std::move(n));
}

Expr operator*(const Expr& l, const Expr& r) {
  if (l.is_zero() || r.is_zero()) return Expr::number(0.0);
  if (l.is_one()) return r;
  if (r.is_one()) return l;
  if (l.is_number() && r.is_number()) return Expr::number(l.node().value * r.node().value);
  auto n = std::make_shared<Node>(Kind::Mul);
  n->a = l.ptr();
  n->b = r.ptr();
  return Expr(std::move(n));
}

Expr operator/(const Expr& l, const Expr& r) {
  if (r.is_one()) return l;
  if (l.is_zero() && !r.is_zero()) return Expr::number(0.0);
  auto n = std::make_shared<Node>(Kind::Div);
  n->a = l.ptr();
  n->b = r.ptr();
  return Expr(std::move(n));
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::number(1.0);
  if (exponent == 1) return base;
  if (base.is_number()) {
    double b = base.node().value;
    double v = 1.0;
    int n = exponent < 0 ? -exponent : exponent;
    for (int i = 0; i < n; ++i) v *= b;
    if (exponent < 0) {
      if (v == 0.0) {
        // keep the division visible so evaluation reports it
      } else {
        return Expr::number(1.0 / v);
      }
    } else {
      return Expr::number(v);
    }
  }
  auto n = std::make_shared<Node>(Kind::Pow);
  n->a = base.ptr();
  n->exponent = exponent;
  return Expr(std::move(n));
}

Expr call(Func f, const Expr& arg) {
  auto n = std::make_shared<Node>(Kind::Call);
  n->func = f;
  n->a = arg.ptr();
  return Expr(std::move(n));
}

// ---------------------------------------------------------------------------
// Parser: recursive descent over bytes, reporting offset + expected set.

namespace {

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool accept(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    skip_ws();
    throw SyntaxError(pos, std::move(expected), text);
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+')) {
        e = e + parse_term();
      } else if (accept('-')) {
        e = e - parse_term();
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) {
        e = e * parse_unary();
      } else if (accept('/')) {
        e = e / parse_unary();
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_ws();
    if (accept('^')) {
      int e = parse_integer_exponent();
      return pow(base, e);
    }
    return base;
  }

  // Exponents are constant integers; x^2^3 is right-associative, i.e. x^(2^3),
  // and the whole exponent tower must fold to an integer.
  int parse_integer_exponent() {
    skip_ws();
    bool negate = false;
    while (accept('-')) negate = !negate;
    if (accept('(')) {
      int inner = parse_integer_exponent();
      if (!accept(')')) fail({"')'"});
      // allow (2)^3 inside the tower
      skip_ws();
      if (accept('^')) {
        int outer = parse_integer_exponent();
        inner = ipow_checked(inner, outer);
      }
      return negate ? -inner : inner;
    }
    std::size_t start = pos;
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      fail({"integer exponent"});
    long v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + (text[pos] - '0');
      if (v > 1000000) throw SyntaxError(start, {"integer exponent within range"}, text);
      ++pos;
    }
    int result = static_cast<int>(v);
    skip_ws();
    if (accept('^')) {
      int outer = parse_integer_exponent();
      result = ipow_checked(result, outer);
    }
    return negate ? -result : result;
  }

  int ipow_checked(int base, int exp) {
    if (exp < 0) fail({"nonnegative exponent in exponent tower"});
    long r = 1;
    for (int i = 0; i < exp; ++i) {
      r *= base;
      if (r > 1000000 || r < -1000000) fail({"integer exponent within range"});
    }
    return static_cast<int>(r);
  }

  Expr parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail({"number", "variable", "function", "'('"});
    char c = text[pos];
    if (c == '(') {
      ++pos;
      Expr e = parse_expr();
      if (!accept(')')) fail({"')'"});
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail({"number", "variable", "function", "'('"});
  }

  Expr parse_number() {
    std::size_t start = pos;
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail({"number"});
    pos += static_cast<std::size_t>(end - begin);
    (void)start;
    return Expr::number(v);
  }

  Expr parse_ident() {
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);

    if (name == "t") return Expr::variable(0);
    if (name.size() == 2 && name[0] == 'x' && name[1] >= '0' && name[1] <= '3')
      return Expr::variable(name[1] - '0');

    static const struct {
      const char* name;
      Func f;
    } kFuncs[] = {{"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},
                  {"exp", Func::Exp},   {"log", Func::Log},   {"sqrt", Func::Sqrt},
                  {"sinh", Func::Sinh}, {"cosh", Func::Cosh}, {"tanh", Func::Tanh}};
    for (const auto& fe : kFuncs) {
      if (name == fe.name) {
        if (!accept('(')) fail({"'(' after function name"});
        Expr arg = parse_expr();
        if (!accept(')')) fail({"')'"});
        return call(fe.f, arg);
      }
    }
    throw UnknownIdentifier(start, name);
  }
};

}  // namespace

Expr parse_expression(const std::string& text) {
  if (text.empty()) throw SyntaxError(0, {"nonempty expression"}, text);
  Parser p(text);
  Expr e = p.parse_expr();
  if (!p.eof()) p.fail({"operator", "end of input"});
  return e;
}

// ---------------------------------------------------------------------------

Expr differentiate(const Expr& e, int var) {
  if (!e.valid()) throw std::invalid_argument("differentiate: empty expression");
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Number:
      return Expr::number(0.0);
    case Kind::Var:
      return Expr::number(n.var == var ? 1.0 : 0.0);
    case Kind::Neg:
      return -differentiate(Expr(n.a), var);
    case Kind::Add:
      return differentiate(Expr(n.a), var) + differentiate(Expr(n.b), var);
    case Kind::Sub:
      return differentiate(Expr(n.a), var) - differentiate(Expr(n.b), var);
    case Kind::Mul: {
      Expr a(n.a), b(n.b);
      return differentiate(a, var) * b + a * differentiate(b, var);
    }
    case Kind::Div: {
      Expr a(n.a), b(n.b);
      return (differentiate(a, var) * b - a * differentiate(b, var)) / (b * b);
    }
    case Kind::Pow: {
      Expr a(n.a);
      return Expr::number(n.exponent) * pow(a, n.exponent - 1) * differentiate(a, var);
    }
    case Kind::Call: {
      Expr u(n.a);
      Expr du = differentiate(u, var);
      Expr outer;
      switch (n.func) {
        case Func::Sin: outer = call(Func::Cos, u); break;
        case Func::Cos: outer = -call(Func::Sin, u); break;
        case Func::Tan: outer = Expr::number(1.0) / pow(call(Func::Cos, u), 2); break;
        case Func::Exp: outer = call(Func::Exp, u); break;
        case Func::Log: outer = Expr::number(1.0) / u; break;
        case Func::Sqrt: outer = Expr::number(0.5) / call(Func::Sqrt, u); break;
        case Func::Sinh: outer = call(Func::Cosh, u); break;
        case Func::Cosh: outer = call(Func::Sinh, u); break;
        case Func::Tanh: outer = Expr::number(1.0) - pow(call(Func::Tanh, u), 2); break;
      }
      return outer * du;
    }
  }
  throw std::logic_error("differentiate: unreachable");
}

// ---------------------------------------------------------------------------

namespace {

double eval_node(const Node& n, std::span<const double> x) {
  switch (n.kind) {
    case Kind::Number:
      return n.value;
    case Kind::Var:
      if (n.var >= static_cast<int>(x.size()))
        throw DomainError("variable x" + std::to_string(n.var) + " outside coordinate tuple");
      return x[static_cast<std::size_t>(n.var)];
    case Kind::Neg:
      return -eval_node(*n.a, x);
    case Kind::Add:
      return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Kind::Sub:
      return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Kind::Mul:
      return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Kind::Div: {
      double num = eval_node(*n.a, x);
      double den = eval_node(*n.b, x);
      if (den == 0.0) throw DomainError("division by zero");
      return num / den;
    }
    case Kind::Pow: {
      double base = eval_node(*n.a, x);
      int k = n.exponent;
      bool inv = k < 0;
      if (inv) k = -k;
      double v = 1.0;
      double acc = base;
      while (k > 0) {
        if (k & 1) v *= acc;
        acc *= acc;
        k >>= 1;
      }
      if (inv) {
        if (v == 0.0) throw DomainError("division by zero in negative power");
        return 1.0 / v;
      }
      return v;
    }
    case Kind::Call: {
      double u = eval_node(*n.a, x);
      switch (n.func) {
        case Func::Sin: return std::sin(u);
        case Func::Cos: return std::cos(u);
        case Func::Tan: return std::tan(u);
        case Func::Exp: return std::exp(u);
        case Func::Log:
          if (u < 0.0) throw DomainError("log of negative argument");
          return std::log(u);
        case Func::Sqrt:
          if (u < 0.0) throw DomainError("sqrt of negative argument");
          return std::sqrt(u);
        case Func::Sinh: return std::sinh(u);
        case Func::Cosh: return std::cosh(u);
        case Func::Tanh: return std::tanh(u);
      }
      throw std::logic_error("evaluate: unreachable");
    }
  }
  throw std::logic_error("evaluate: unreachable");
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> x) {
  if (!e.valid()) throw std::invalid_argument("evaluate: empty expression");
  return eval_node(e.node(), x);
}

EvalResult evaluate_flagged(const Expr& e, std::span<const double> x) {
  double v = evaluate(e, x);
  return {v, std::isfinite(v)};
}

// ---------------------------------------------------------------------------
// Printer with minimal parentheses; numbers use %.17g so re-parsing is bit-exact.

namespace {

int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

void print_node(const Node& n, std::ostringstream& os, int parent_prec, bool right_side) {
  int prec = precedence(n);
  bool parens = prec < parent_prec || (prec == parent_prec && right_side && prec <= 2);
  if (parens) os << '(';
  switch (n.kind) {
    case Kind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      os << buf;
      break;
    }
    case Kind::Var:
      os << 'x' << n.var;
      break;
    case Kind::Neg:
      os << '-';
      print_node(*n.a, os, prec + 1, false);
      break;
    case Kind::Add:
      print_node(*n.a, os, prec, false);
      os << " + ";
      print_node(*n.b, os, prec, true);
      break;
    case Kind::Sub:
      print_node(*n.a, os, prec, false);
      os << " - ";
      print_node(*n.b, os, prec, true);
      break;
    case Kind::Mul:
      print_node(*n.a, os, prec, false);
      os << "*";
      print_node(*n.b, os, prec, true);
      break;
    case Kind::Div:
      print_node(*n.a, os, prec, false);
      os << "/";
      print_node(*n.b, os, prec, true);
      break;
    case Kind::Pow:
      print_node(*n.a, os, prec + 1, false);
      os << '^';
      if (n.exponent < 0)
        os << "(-" << -n.exponent << ')';
      else
        os << n.exponent;
      break;
    case Kind::Call:
      os << func_name(n.func) << '(';
      print_node(*n.a, os, 0, false);
      os << ')';
      break;
  }
  if (parens) os << ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  if (!e.valid()) return "<empty>";
  std::ostringstream os;
  print_node(e.node(), os, 0, false);
  return os.str();
}

bool equal(const Expr& l, const Expr& r) {
  if (!l.valid() || !r.valid()) return l.valid() == r.valid();
  const Node& a = l.node();
  const Node& b = r.node();
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Number: return a.value == b.value;
    case Kind::Var: return a.var == b.var;
    case Kind::Neg: return equal(Expr(a.a), Expr(b.a));
    case Kind::Pow: return a.exponent == b.exponent && equal(Expr(a.a), Expr(b.a));
    case Kind::Call: return a.func == b.func && equal(Expr(a.a), Expr(b.a));
    default:
      return equal(Expr(a.a), Expr(b.a)) && equal(Expr(a.b), Expr(b.b));
  }
}

// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e) {
  if (e.valid()) emit(e.node());
}

void CompiledExpr::emit(const Node& n) {
  switch (n.kind) {
    case Kind::Number:
      ops_.push_back({Kind::Number, n.value, 0});
      return;
    case Kind::Var:
      ops_.push_back({Kind::Var, 0.0, n.var});
      return;
    case Kind::Neg:
      emit(*n.a);
      ops_.push_back({Kind::Neg, 0.0, 0});
      return;
    case Kind::Pow:
      emit(*n.a);
      ops_.push_back({Kind::Pow, 0.0, n.exponent});
      return;
    case Kind::Call:
      emit(*n.a);
      ops_.push_back({Kind::Call, 0.0, static_cast<int>(n.func)});
      return;
    default:
      emit(*n.a);
      emit(*n.b);
      ops_.push_back({n.kind, 0.0, 0});
      return;
  }
}

double CompiledExpr::eval(std::span<const double> x) const {
  double stack[64];
  int sp = 0;
  for (const Op& op : ops_) {
    switch (op.kind) {
      case Kind::Number: stack[sp++] = op.value; break;
      case Kind::Var: stack[sp++] = x[static_cast<std::size_t>(op.arg)]; break;
      case Kind::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Kind::Add: stack[sp - 2] += stack[sp - 1]; --sp; break;
      case Kind::Sub: stack[sp - 2] -= stack[sp - 1]; --sp; break;
      case Kind::Mul: stack[sp - 2] *= stack[sp - 1]; --sp; break;
      case Kind::Div: {
        if (stack[sp - 1] == 0.0) throw DomainError("division by zero");
        stack[sp - 2] /= stack[sp - 1];
        --sp;
        break;
      }
      case Kind::Pow: {
        double base = stack[sp - 1];
        int k = op.arg;
        bool inv = k < 0;
        if (inv) k = -k;
        double v = 1.0, acc = base;
        while (k > 0) {
          if (k & 1) v *= acc;
          acc *= acc;
          k >>= 1;
        }
        if (inv) {
          if (v == 0.0) throw DomainError("division by zero in negative power");
          v = 1.0 / v;
        }
        stack[sp - 1] = v;
        break;
      }
      case Kind::Call: {
        double u = stack[sp - 1];
        switch (static_cast<Func>(op.arg)) {
          case Func::Sin: stack[sp - 1] = std::sin(u); break;
          case Func::Cos: stack[sp - 1] = std::cos(u); break;
          case Func::Tan: stack[sp - 1] = std::tan(u); break;
          case Func::Exp: stack[sp - 1] = std::exp(u); break;
          case Func::Log:
            if (u < 0.0) throw DomainError("log of negative argument");
            stack[sp - 1] = std::log(u);
            break;
          case Func::Sqrt:
            if (u < 0.0) throw DomainError("sqrt of negative argument");
            stack[sp - 1] = std::sqrt(u);
            break;
          case Func::Sinh: stack[sp - 1] = std::sinh(u); break;
          case Func::Cosh: stack[sp - 1] = std::cosh(u); break;
          case Func::Tanh: stack[sp - 1] = std::tanh(u); break;
        }
        break;
      }
    }
    if (sp >= 63) throw std::runtime_error("expression too deep for compiled evaluation");
  }
  return sp == 1 ? stack[0] : throw std::logic_error("compiled expression stack imbalance");
}

}  // namespace proplab::expr
