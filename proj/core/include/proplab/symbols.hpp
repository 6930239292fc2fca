// Matrix-valued symbol calculus for second-order operators: half-density
// total symbols, subprincipal symbols, Weitzenboeck assembly/decomposition,
// truncated first-order composition, identity verification and the square
// root construction.
//
// Conventions: the symbol of d/dx^mu is i xi_mu; the subprincipal symbol is
// p_{m-1} - (1/2i) d^2 p_m / dx^a dxi_a. Symbols carry at most three
// homogeneous components and all compositions are truncated at subleading
// order.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "proplab/expr.hpp"
#include "proplab/geometry.hpp"

namespace proplab::sym {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;

struct TruncationUnderflow : std::runtime_error {
  explicit TruncationUnderflow(const std::string& w) : std::runtime_error(w) {}
};
struct IdentityInapplicable : std::runtime_error {
  explicit IdentityInapplicable(const std::string& w) : std::runtime_error(w) {}
};
struct NotElliptic : std::runtime_error {
  explicit NotElliptic(const std::string& w) : std::runtime_error(w) {}
};
struct NotNormallyHyperbolic : std::runtime_error {
  explicit NotNormallyHyperbolic(const std::string& w) : std::runtime_error(w) {}
};
struct NonNullPoint : std::runtime_error {
  explicit NonNullPoint(const std::string& w) : std::runtime_error(w) {}
};

// ---------------------------------------------------------------------------
// Complex symbolic scalars and matrices.

struct CExpr {
  expr::Expr re, im;

  CExpr() : re(expr::Expr::number(0.0)), im(expr::Expr::number(0.0)) {}
  explicit CExpr(const expr::Expr& real) : re(real), im(expr::Expr::number(0.0)) {}
  CExpr(const expr::Expr& real, const expr::Expr& imag) : re(real), im(imag) {}
  static CExpr constant(Cplx z) {
    return CExpr(expr::Expr::number(z.real()), expr::Expr::number(z.imag()));
  }

  CExpr operator+(const CExpr& o) const { return {re + o.re, im + o.im}; }
  CExpr operator-(const CExpr& o) const { return {re - o.re, im - o.im}; }
  CExpr operator*(const CExpr& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  CExpr operator-() const { return {-re, -im}; }
  CExpr conj() const { return {re, -im}; }
  CExpr scaled(Cplx z) const { return *this * constant(z); }
  CExpr dx(int a) const { return {expr::differentiate(re, a), expr::differentiate(im, a)}; }
  Cplx eval(std::span<const double> x) const {
    return {expr::evaluate(re, x), expr::evaluate(im, x)};
  }
};

class CExprMat {
 public:
  CExprMat() : rows_(0), cols_(0) {}
  CExprMat(int rows, int cols)
      : rows_(rows), cols_(cols), e_(static_cast<std::size_t>(rows * cols)) {}

  static CExprMat identity(int n);
  static CExprMat from_real(const std::vector<std::vector<expr::Expr>>& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  CExpr& at(int i, int j) { return e_[static_cast<std::size_t>(i * cols_ + j)]; }
  const CExpr& at(int i, int j) const { return e_[static_cast<std::size_t>(i * cols_ + j)]; }

  CExprMat operator+(const CExprMat& o) const;
  CExprMat operator-(const CExprMat& o) const;
  CExprMat operator*(const CExprMat& o) const;  // matrix product
  CExprMat scaled(const CExpr& s) const;
  CExprMat scaled(Cplx z) const { return scaled(CExpr::constant(z)); }
  CExprMat dx(int a) const;
  CExprMat adjoint() const;

  Mat eval(const Vec& x) const;

 private:
  int rows_, cols_;
  std::vector<CExpr> e_;
};

// xi-polynomial with symbolic matrix coefficients: sum_alpha M_alpha(x) xi^alpha.
class SymbolPoly {
 public:
  struct Term {
    std::array<int, expr::kMaxDim> alpha{};  // xi multi-index
    CExprMat coeff;
  };

  SymbolPoly(int dim, int rank) : dim_(dim), rank_(rank) {}

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  const std::vector<Term>& terms() const { return terms_; }

  void add_term(const std::array<int, expr::kMaxDim>& alpha, const CExprMat& coeff);

  SymbolPoly operator+(const SymbolPoly& o) const;
  SymbolPoly scaled(Cplx z) const;
  SymbolPoly dx(int a) const;
  SymbolPoly dxi(int a) const;

  Mat eval(const Vec& x, const Vec& xi) const;

 private:
  int dim_, rank_;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Homogeneous symbol components. Derivative callables are exact when the
// component was built symbolically; anything missing falls back to central
// differences with step 1e-5 * (1 + |coordinate|).

class Component {
 public:
  using ValueFn = std::function<Mat(const Vec&, const Vec&)>;
  using DerivFn = std::function<Mat(int, const Vec&, const Vec&)>;

  Component() = default;
  Component(double degree, ValueFn value, DerivFn dx = nullptr, DerivFn dxi = nullptr,
            DerivFn dx_dxi = nullptr);

  static Component from_poly(double degree, const SymbolPoly& poly);
  static Component zero(double degree, int rank);

  double degree() const { return degree_; }
  bool valid() const { return static_cast<bool>(value_); }

  Mat value(const Vec& x, const Vec& xi) const { return value_(x, xi); }
  Mat dx(int a, const Vec& x, const Vec& xi) const;
  Mat dxi(int a, const Vec& x, const Vec& xi) const;
  // same-index mixed derivative d^2 / dx^a dxi_a
  Mat dx_dxi(int a, const Vec& x, const Vec& xi) const;

 private:
  double degree_ = 0.0;
  ValueFn value_;
  DerivFn dx_, dxi_, dxdxi_;
};

// Finitely truncated polyhomogeneous matrix symbol: components k = 0..K of
// homogeneity degree m - k.
struct MatrixSymbol {
  double degree = 0.0;
  int dim = 0;
  int rank = 0;
  std::vector<Component> comps;

  const Component& top() const { return comps.front(); }
  Mat principal(const Vec& x, const Vec& xi) const { return comps.front().value(x, xi); }
};

// Pads a one-component symbol with an explicit zero subleading component.
MatrixSymbol pad_to_two(const MatrixSymbol& s);

// Checks homogeneity of every component at the given points for lambda in
// {2, 5}; returns the worst relative defect.
double homogeneity_defect(const MatrixSymbol& s, const std::vector<geom::PhasePoint>& pts);

// ---------------------------------------------------------------------------
// Differential-operator data.

// Operator  -A^{mu nu} d_mu d_nu + B^mu d_mu + C  with symbolic N x N
// coefficient matrices; A^{mu nu} = g^{mu nu} * Id in normally hyperbolic mode.
struct SecondOrderOperator {
  int dim = 0;
  int rank = 1;
  bool normally_hyperbolic = false;
  bool half_density = false;  // coefficients already in half-density form
  std::vector<CExprMat> A;    // dim*dim entries, row-major (mu, nu)
  std::vector<CExprMat> B;    // dim entries
  CExprMat C;

  const CExprMat& a(int mu, int nu) const { return A[static_cast<std::size_t>(mu * dim + nu)]; }
};

// Connection 1-form Gamma_mu (N x N); bookkeeping follows nabla_mu e_j =
// i Gamma^i_{mu j} e_i. Parallel transport solves v' = -i Gamma(xdot) v.
struct BundleConnection {
  int dim = 0;
  int rank = 1;
  std::vector<CExprMat> gamma;  // dim entries

  Mat eval(int mu, const Vec& x) const { return gamma[static_cast<std::size_t>(mu)].eval(x); }
};

struct Potential {
  CExprMat V;
};

// ---------------------------------------------------------------------------
// Operations.

// Total symbol of |det g|^{1/4} op |det g|^{-1/4} with components
// p2 = A^{mu nu} xi_mu xi_nu, p1 = i B'^nu xi_nu, p0 = C'.
MatrixSymbol total_symbol_halfdensity(const SecondOrderOperator& op,
                                      const geom::MetricChart& chart);

// sigma_sub = p1 - (1/2i) d^2 p2 / dx^a dxi_a, exact symbolic derivatives.
MatrixSymbol subprincipal(const SecondOrderOperator& op, const geom::MetricChart& chart);

// Subprincipal of an already-computed two-component symbol (used on composed
// symbols during identity verification).
Component subprincipal_component(const MatrixSymbol& s);

SecondOrderOperator weitzenbock_assemble(const geom::MetricChart& chart,
                                         const BundleConnection& conn, const Potential& pot);

std::pair<BundleConnection, Potential> weitzenbock_decompose(const SecondOrderOperator& op,
                                                             const geom::MetricChart& chart);

// Truncated standard composition: c = p q + (1/i) sum_mu d_xi_mu p d_x_mu q,
// keeping the top two homogeneous components.
MatrixSymbol compose_first_order(const MatrixSymbol& P, const MatrixSymbol& Q);

// Adjoint symbol at truncation order: (a*)_0 = a_0^dagger,
// (a*)_1 = a_1^dagger + (1/i) sum_a d_xi_a d_x_a (a_0^dagger).
MatrixSymbol symbol_adjoint(const MatrixSymbol& P);

// --- identity residuals (max componentwise |lhs - rhs| over the cloud) ---

double residual_product(const MatrixSymbol& P, const MatrixSymbol& Q,
                        const std::vector<geom::PhasePoint>& pts);
double residual_power(const MatrixSymbol& P, int k, const std::vector<geom::PhasePoint>& pts);
double residual_inverse(const MatrixSymbol& P, const std::vector<geom::PhasePoint>& pts);
double residual_commutator(const MatrixSymbol& P, const MatrixSymbol& Q,
                           const std::vector<geom::PhasePoint>& pts);
// Egorov with kappa = identity graph: sigma(BPA) vs sigma(BA) sigma_P.
double residual_egorov_identity(const MatrixSymbol& B, const MatrixSymbol& P,
                                const MatrixSymbol& A, const std::vector<geom::PhasePoint>& pts);
// Egorov with a linear symplectomorphism kappa(y, eta) = (T y, T^{-T} eta):
// the conjugated operator is computed symbolically and its principal symbol
// compared with sigma_P o kappa.
double residual_egorov_linear(const SecondOrderOperator& op, const Eigen::MatrixXd& T,
                              const std::vector<geom::PhasePoint>& pts);

enum class IdentityKind { Product, Power, Inverse, Commutator, Egorov };
const char* to_string(IdentityKind k);

// ||sigma_sub(op)(x, xi) - Gamma_nu(x) * (-2 g^{mu nu} xi_mu)|| per point;
// throws NonNullPoint off the characteristic set.
std::vector<double> compatibility_residual(const SecondOrderOperator& op,
                                           const BundleConnection& conn,
                                           const geom::MetricChart& chart,
                                           const std::vector<geom::PhasePoint>& pts,
                                           double null_tol = 1e-8);

struct SquareRootResult {
  MatrixSymbol Q;      // components Q0 (hermitized q) and, for K = 1, Q1
  double residual;     // max norm of [p - Q* # Q]_{m-1} over the sample cloud
};

SquareRootResult square_root_symbols(const MatrixSymbol& p, const Component& q, int K,
                                     const std::vector<geom::PhasePoint>& pts);

}  // namespace proplab::sym
