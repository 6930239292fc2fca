#include "proplab/symbols.hpp"

#include <algorithm>
#include <cmath>

namespace proplab::sym {

namespace {

constexpr Cplx kI{0.0, 1.0};

double fd_step(double coord) { return 1e-5 * (1.0 + std::abs(coord)); }

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// CExprMat

CExprMat CExprMat::identity(int n) {
  CExprMat m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = CExpr(expr::Expr::number(1.0));
  return m;
}

CExprMat CExprMat::from_real(const std::vector<std::vector<expr::Expr>>& src) {
  int r = static_cast<int>(src.size());
  int c = r > 0 ? static_cast<int>(src[0].size()) : 0;
  CExprMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      m.at(i, j) = CExpr(src[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return m;
}

CExprMat CExprMat::operator+(const CExprMat& o) const {
  CExprMat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m.at(i, j) = at(i, j) + o.at(i, j);
  return m;
}

CExprMat CExprMat::operator-(const CExprMat& o) const {
  CExprMat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m.at(i, j) = at(i, j) - o.at(i, j);
  return m;
}

CExprMat CExprMat::operator*(const CExprMat& o) const {
  CExprMat m(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j) {
      CExpr sum;
      for (int k = 0; k < cols_; ++k) sum = sum + at(i, k) * o.at(k, j);
      m.at(i, j) = sum;
    }
  return m;
}

CExprMat CExprMat::scaled(const CExpr& s) const {
  CExprMat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m.at(i, j) = at(i, j) * s;
  return m;
}

CExprMat CExprMat::dx(int a) const {
  CExprMat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m.at(i, j) = at(i, j).dx(a);
  return m;
}

CExprMat CExprMat::adjoint() const {
  CExprMat m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m.at(j, i) = at(i, j).conj();
  return m;
}

Mat CExprMat::eval(const Vec& x) const {
  Mat m(rows_, cols_);
  std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = at(i, j).eval(xs);
  return m;
}

// ---------------------------------------------------------------------------
// SymbolPoly

void SymbolPoly::add_term(const std::array<int, expr::kMaxDim>& alpha, const CExprMat& coeff) {
  for (auto& t : terms_) {
    if (t.alpha == alpha) {
      t.coeff = t.coeff + coeff;
      return;
    }
  }
  terms_.push_back({alpha, coeff});
}

SymbolPoly SymbolPoly::operator+(const SymbolPoly& o) const {
  SymbolPoly out = *this;
  for (const auto& t : o.terms_) out.add_term(t.alpha, t.coeff);
  return out;
}

SymbolPoly SymbolPoly::scaled(Cplx z) const {
  SymbolPoly out(dim_, rank_);
  for (const auto& t : terms_) out.add_term(t.alpha, t.coeff.scaled(z));
  return out;
}

SymbolPoly SymbolPoly::dx(int a) const {
  SymbolPoly out(dim_, rank_);
  for (const auto& t : terms_) out.add_term(t.alpha, t.coeff.dx(a));
  return out;
}

SymbolPoly SymbolPoly::dxi(int a) const {
  SymbolPoly out(dim_, rank_);
  for (const auto& t : terms_) {
    if (t.alpha[static_cast<std::size_t>(a)] == 0) continue;
    auto alpha = t.alpha;
    double k = alpha[static_cast<std::size_t>(a)];
    alpha[static_cast<std::size_t>(a)] -= 1;
    out.add_term(alpha, t.coeff.scaled(Cplx{k, 0.0}));
  }
  return out;
}

Mat SymbolPoly::eval(const Vec& x, const Vec& xi) const {
  Mat out = Mat::Zero(rank_, rank_);
  for (const auto& t : terms_) {
    double mono = 1.0;
    for (int a = 0; a < dim_; ++a)
      for (int k = 0; k < t.alpha[static_cast<std::size_t>(a)]; ++k) mono *= xi[a];
    out += mono * t.coeff.eval(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Component

Component::Component(double degree, ValueFn value, DerivFn dx, DerivFn dxi, DerivFn dx_dxi)
    : degree_(degree),
      value_(std::move(value)),
      dx_(std::move(dx)),
      dxi_(std::move(dxi)),
      dxdxi_(std::move(dx_dxi)) {}

Component Component::from_poly(double degree, const SymbolPoly& poly) {
  auto p = std::make_shared<SymbolPoly>(poly);
  const int dim = poly.dim();
  auto dxp = std::make_shared<std::vector<SymbolPoly>>();
  auto dxip = std::make_shared<std::vector<SymbolPoly>>();
  auto dxdxip = std::make_shared<std::vector<SymbolPoly>>();
  for (int a = 0; a < dim; ++a) {
    dxp->push_back(p->dx(a));
    dxip->push_back(p->dxi(a));
    dxdxip->push_back(p->dx(a).dxi(a));
  }
  return Component(
      degree, [p](const Vec& x, const Vec& xi) { return p->eval(x, xi); },
      [dxp](int a, const Vec& x, const Vec& xi) {
        return (*dxp)[static_cast<std::size_t>(a)].eval(x, xi);
      },
      [dxip](int a, const Vec& x, const Vec& xi) {
        return (*dxip)[static_cast<std::size_t>(a)].eval(x, xi);
      },
      [dxdxip](int a, const Vec& x, const Vec& xi) {
        return (*dxdxip)[static_cast<std::size_t>(a)].eval(x, xi);
      });
}

Component Component::zero(double degree, int rank) {
  Mat z = Mat::Zero(rank, rank);
  return Component(
      degree, [z](const Vec&, const Vec&) { return z; },
      [z](int, const Vec&, const Vec&) { return z; },
      [z](int, const Vec&, const Vec&) { return z; },
      [z](int, const Vec&, const Vec&) { return z; });
}

Mat Component::dx(int a, const Vec& x, const Vec& xi) const {
  if (dx_) return dx_(a, x, xi);
  double h = fd_step(x[a]);
  Vec xp = x, xm = x;
  xp[a] += h;
  xm[a] -= h;
  return (value_(xp, xi) - value_(xm, xi)) / (2 * h);
}

Mat Component::dxi(int a, const Vec& x, const Vec& xi) const {
  if (dxi_) return dxi_(a, x, xi);
  double h = fd_step(xi[a]);
  Vec xp = xi, xm = xi;
  xp[a] += h;
  xm[a] -= h;
  return (value_(x, xp) - value_(x, xm)) / (2 * h);
}

Mat Component::dx_dxi(int a, const Vec& x, const Vec& xi) const {
  if (dxdxi_) return dxdxi_(a, x, xi);
  double h = fd_step(xi[a]);
  Vec xp = xi, xm = xi;
  xp[a] += h;
  xm[a] -= h;
  return (dx(a, x, xp) - dx(a, x, xm)) / (2 * h);
}

MatrixSymbol pad_to_two(const MatrixSymbol& s) {
  MatrixSymbol out = s;
  while (out.comps.size() < 2)
    out.comps.push_back(Component::zero(out.degree - static_cast<double>(out.comps.size()),
                                        out.rank));
  return out;
}

double homogeneity_defect(const MatrixSymbol& s, const std::vector<geom::PhasePoint>& pts) {
  double worst = 0.0;
  for (const auto& pt : pts) {
    for (std::size_t k = 0; k < s.comps.size(); ++k) {
      const Component& c = s.comps[k];
      Mat base = c.value(pt.x, pt.xi);
      double scale = std::max(1.0, max_abs(base));
      for (double lambda : {2.0, 5.0}) {
        Mat scaled_eval = c.value(pt.x, lambda * pt.xi);
        double factor = std::pow(lambda, c.degree());
        worst = std::max(worst, max_abs(scaled_eval - factor * base) / (factor * scale));
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Symbolic metric helpers

namespace {

using ExprMat = std::vector<std::vector<expr::Expr>>;

ExprMat chart_metric_exprs(const geom::MetricChart& chart) {
  int n = chart.dim();
  ExprMat g(static_cast<std::size_t>(n), std::vector<expr::Expr>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = chart.component(i, j);
  return g;
}

expr::Expr sym_det(const ExprMat& m) {
  std::size_t n = m.size();
  if (n == 1) return m[0][0];
  expr::Expr det = expr::Expr::number(0.0);
  double sign = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    ExprMat minor(n - 1, std::vector<expr::Expr>(n - 1));
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t jj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == col) continue;
        minor[i - 1][jj++] = m[i][j];
      }
    }
    det = det + expr::Expr::number(sign) * m[0][col] * sym_det(minor);
    sign = -sign;
  }
  return det;
}

// inverse via adjugate / det
ExprMat sym_inverse(const ExprMat& m, const expr::Expr& det) {
  std::size_t n = m.size();
  ExprMat inv(n, std::vector<expr::Expr>(n));
  if (n == 1) {
    inv[0][0] = expr::Expr::number(1.0) / m[0][0];
    return inv;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ExprMat minor(n - 1, std::vector<expr::Expr>(n - 1));
      std::size_t ii = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::size_t jj = 0;
        for (std::size_t c = 0; c < n; ++c) {
          if (c == j) continue;
          minor[ii][jj++] = m[r][c];
        }
        ++ii;
      }
      double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      inv[j][i] = expr::Expr::number(sign) * sym_det(minor) / det;
    }
  return inv;
}

// g^{mu nu} Gamma^{LC, rho}_{mu nu} as expressions, one per rho
std::vector<expr::Expr> sym_trace_christoffel(const geom::MetricChart& chart,
                                              const ExprMat& ginv) {
  int n = chart.dim();
  std::vector<expr::Expr> out(static_cast<std::size_t>(n), expr::Expr::number(0.0));
  for (int rho = 0; rho < n; ++rho) {
    expr::Expr acc = expr::Expr::number(0.0);
    for (int mu = 0; mu < n; ++mu)
      for (int nu = 0; nu < n; ++nu)
        for (int sig = 0; sig < n; ++sig) {
          expr::Expr bracket = chart.component_derivative(sig, nu, mu) +
                               chart.component_derivative(sig, mu, nu) -
                               chart.component_derivative(mu, nu, sig);
          acc = acc + expr::Expr::number(0.5) *
                          ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] *
                          ginv[static_cast<std::size_t>(rho)][static_cast<std::size_t>(sig)] *
                          bracket;
        }
    out[static_cast<std::size_t>(rho)] = acc;
  }
  return out;
}

// w_mu = d_mu det(g) / (4 det(g)); the |.| drops out of the logarithmic derivative
std::vector<expr::Expr> halfdensity_weights(const geom::MetricChart& chart) {
  ExprMat g = chart_metric_exprs(chart);
  expr::Expr det = sym_det(g);
  int n = chart.dim();
  std::vector<expr::Expr> w(static_cast<std::size_t>(n));
  for (int mu = 0; mu < n; ++mu)
    w[static_cast<std::size_t>(mu)] =
        expr::differentiate(det, mu) / (expr::Expr::number(4.0) * det);
  return w;
}

std::array<int, expr::kMaxDim> mono(int a, int b = -1) {
  std::array<int, expr::kMaxDim> alpha{};
  if (a >= 0) alpha[static_cast<std::size_t>(a)] += 1;
  if (b >= 0) alpha[static_cast<std::size_t>(b)] += 1;
  return alpha;
}

struct HalfDensityCoefficients {
  std::vector<CExprMat> A;  // unchanged
  std::vector<CExprMat> B;  // conjugated first-order coefficients
  CExprMat C;               // conjugated zeroth-order coefficient
};

HalfDensityCoefficients halfdensity_coefficients(const SecondOrderOperator& op,
                                                 const geom::MetricChart& chart) {
  HalfDensityCoefficients out;
  out.A = op.A;
  out.B = op.B;
  out.C = op.C;
  if (op.half_density) return out;

  int n = op.dim;
  std::vector<expr::Expr> w = halfdensity_weights(chart);
  for (int nu = 0; nu < n; ++nu) {
    CExprMat acc = out.B[static_cast<std::size_t>(nu)];
    for (int mu = 0; mu < n; ++mu)
      acc = acc + op.a(mu, nu).scaled(CExpr(expr::Expr::number(2.0) * w[static_cast<std::size_t>(mu)]));
    out.B[static_cast<std::size_t>(nu)] = acc;
  }
  CExprMat c = out.C;
  for (int nu = 0; nu < n; ++nu)
    c = c - op.B[static_cast<std::size_t>(nu)].scaled(CExpr(w[static_cast<std::size_t>(nu)]));
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      expr::Expr term = w[static_cast<std::size_t>(mu)] * w[static_cast<std::size_t>(nu)] -
                        expr::differentiate(w[static_cast<std::size_t>(nu)], mu);
      c = c - op.a(mu, nu).scaled(CExpr(term));
    }
  out.C = c;
  return out;
}

}  // namespace

MatrixSymbol total_symbol_halfdensity(const SecondOrderOperator& op,
                                      const geom::MetricChart& chart) {
  if (op.dim != chart.dim()) throw std::invalid_argument("operator/chart dimension mismatch");
  HalfDensityCoefficients hd = halfdensity_coefficients(op, chart);
  const int n = op.dim;

  SymbolPoly p2(n, op.rank), p1(n, op.rank), p0(n, op.rank);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu)
      p2.add_term(mono(mu, nu), hd.A[static_cast<std::size_t>(mu * n + nu)]);
  for (int nu = 0; nu < n; ++nu)
    p1.add_term(mono(nu), hd.B[static_cast<std::size_t>(nu)].scaled(kI));
  p0.add_term(mono(-1), hd.C);

  MatrixSymbol s;
  s.degree = 2.0;
  s.dim = n;
  s.rank = op.rank;
  s.comps = {Component::from_poly(2.0, p2), Component::from_poly(1.0, p1),
             Component::from_poly(0.0, p0)};
  return s;
}

MatrixSymbol subprincipal(const SecondOrderOperator& op, const geom::MetricChart& chart) {
  HalfDensityCoefficients hd = halfdensity_coefficients(op, chart);
  const int n = op.dim;

  SymbolPoly p2(n, op.rank), p1(n, op.rank);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu)
      p2.add_term(mono(mu, nu), hd.A[static_cast<std::size_t>(mu * n + nu)]);
  for (int nu = 0; nu < n; ++nu)
    p1.add_term(mono(nu), hd.B[static_cast<std::size_t>(nu)].scaled(kI));

  // sigma_sub = p1 - (1/2i) d^2 p2/dx^a dxi_a = p1 + (i/2) sum_a d_x d_xi p2
  SymbolPoly sub = p1;
  for (int a = 0; a < n; ++a) sub = sub + p2.dx(a).dxi(a).scaled(kI * 0.5);

  MatrixSymbol s;
  s.degree = 1.0;
  s.dim = n;
  s.rank = op.rank;
  s.comps = {Component::from_poly(1.0, sub)};
  return s;
}

Component subprincipal_component(const MatrixSymbol& s) {
  if (s.comps.size() < 2)
    throw TruncationUnderflow("subprincipal requires two homogeneous components");
  Component top = s.comps[0];
  Component sub = s.comps[1];
  int dim = s.dim;
  return Component(sub.degree(), [top, sub, dim](const Vec& x, const Vec& xi) {
    Mat acc = sub.value(x, xi);
    for (int a = 0; a < dim; ++a) acc += 0.5 * kI * top.dx_dxi(a, x, xi);
    return acc;
  });
}

// ---------------------------------------------------------------------------
// Weitzenboeck assembly and decomposition

SecondOrderOperator weitzenbock_assemble(const geom::MetricChart& chart,
                                         const BundleConnection& conn, const Potential& pot) {
  const int n = chart.dim();
  const int N = conn.rank;
  if (pot.V.rows() != N) throw std::invalid_argument("connection/potential rank mismatch");

  ExprMat g = chart_metric_exprs(chart);
  expr::Expr det = sym_det(g);
  ExprMat ginv = sym_inverse(g, det);
  std::vector<expr::Expr> trLC = sym_trace_christoffel(chart, ginv);

  SecondOrderOperator op;
  op.dim = n;
  op.rank = N;
  op.normally_hyperbolic = true;
  op.half_density = false;

  CExprMat id = CExprMat::identity(N);

  op.A.resize(static_cast<std::size_t>(n * n));
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu)
      op.A[static_cast<std::size_t>(mu * n + nu)] =
          id.scaled(CExpr(ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)]));

  op.B.resize(static_cast<std::size_t>(n));
  for (int rho = 0; rho < n; ++rho) {
    CExprMat acc = id.scaled(CExpr(trLC[static_cast<std::size_t>(rho)]));
    for (int mu = 0; mu < n; ++mu) {
      CExpr two_i_g = CExpr(ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(rho)])
                          .scaled(Cplx{0.0, 2.0});
      acc = acc + conn.gamma[static_cast<std::size_t>(mu)].scaled(two_i_g);
    }
    op.B[static_cast<std::size_t>(rho)] = acc;
  }

  CExprMat c(N, N);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      CExpr gmn = CExpr(ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)]);
      c = c + conn.gamma[static_cast<std::size_t>(nu)].dx(mu).scaled(gmn.scaled(kI));
      c = c + (conn.gamma[static_cast<std::size_t>(mu)] * conn.gamma[static_cast<std::size_t>(nu)])
                  .scaled(gmn);
    }
  for (int rho = 0; rho < n; ++rho)
    c = c - conn.gamma[static_cast<std::size_t>(rho)].scaled(
                CExpr(trLC[static_cast<std::size_t>(rho)]).scaled(kI));
  op.C = c + pot.V;
  return op;
}

std::pair<BundleConnection, Potential> weitzenbock_decompose(const SecondOrderOperator& op,
                                                             const geom::MetricChart& chart) {
  const int n = op.dim;
  const int N = op.rank;

  ExprMat g = chart_metric_exprs(chart);
  expr::Expr det = sym_det(g);
  ExprMat ginv = sym_inverse(g, det);
  std::vector<expr::Expr> trLC = sym_trace_christoffel(chart, ginv);

  // A must equal g^{-1} * Id: check on a fixed interior lattice
  {
    Vec x(n);
    for (int sample = 0; sample < 9; ++sample) {
      for (int i = 0; i < n; ++i) {
        const geom::Interval& iv = chart.box()[static_cast<std::size_t>(i)];
        double f = 0.2 + 0.6 * ((sample * (i + 2) * 29) % 101) / 100.0;
        x[i] = iv.lo + f * (iv.hi - iv.lo);
      }
      std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu) {
          double gval =
              expr::evaluate(ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)], xs);
          Mat a = op.a(mu, nu).eval(x);
          Mat target = gval * Mat::Identity(N, N);
          if (max_abs(a - target) > 1e-10 * (1.0 + std::abs(gval)))
            throw NotNormallyHyperbolic("A^{mu nu} differs from g^{mu nu} * Id beyond 1e-10");
        }
    }
  }

  BundleConnection conn;
  conn.dim = n;
  conn.rank = N;
  conn.gamma.resize(static_cast<std::size_t>(n));
  CExprMat id = CExprMat::identity(N);
  for (int mu = 0; mu < n; ++mu) {
    CExprMat acc(N, N);
    for (int rho = 0; rho < n; ++rho) {
      CExprMat rest = op.B[static_cast<std::size_t>(rho)] -
                      id.scaled(CExpr(trLC[static_cast<std::size_t>(rho)]));
      CExpr factor = CExpr(g[static_cast<std::size_t>(mu)][static_cast<std::size_t>(rho)])
                         .scaled(Cplx{0.0, -0.5});
      acc = acc + rest.scaled(factor);
    }
    conn.gamma[static_cast<std::size_t>(mu)] = acc;
  }

  CExprMat lower(N, N);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      CExpr gmn = CExpr(ginv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)]);
      lower = lower + conn.gamma[static_cast<std::size_t>(nu)].dx(mu).scaled(gmn.scaled(kI));
      lower = lower +
              (conn.gamma[static_cast<std::size_t>(mu)] * conn.gamma[static_cast<std::size_t>(nu)])
                  .scaled(gmn);
    }
  for (int rho = 0; rho < n; ++rho)
    lower = lower - conn.gamma[static_cast<std::size_t>(rho)].scaled(
                        CExpr(trLC[static_cast<std::size_t>(rho)]).scaled(kI));

  Potential pot;
  pot.V = op.C - lower;
  return {conn, pot};
}

// ---------------------------------------------------------------------------
// Composition, adjoint

MatrixSymbol compose_first_order(const MatrixSymbol& P, const MatrixSymbol& Q) {
  if (P.comps.size() < 2 || Q.comps.size() < 2)
    throw TruncationUnderflow("compose_first_order needs two components on each factor");
  if (P.dim != Q.dim || P.rank != Q.rank)
    throw std::invalid_argument("compose_first_order: dimension or rank mismatch");

  const int dim = P.dim;
  Component p0 = P.comps[0], p1 = P.comps[1];
  Component q0 = Q.comps[0], q1 = Q.comps[1];

  Component top(
      p0.degree() + q0.degree(),
      [p0, q0](const Vec& x, const Vec& xi) { return Mat(p0.value(x, xi) * q0.value(x, xi)); },
      [p0, q0](int a, const Vec& x, const Vec& xi) {
        return Mat(p0.dx(a, x, xi) * q0.value(x, xi) + p0.value(x, xi) * q0.dx(a, x, xi));
      },
      [p0, q0](int a, const Vec& x, const Vec& xi) {
        return Mat(p0.dxi(a, x, xi) * q0.value(x, xi) + p0.value(x, xi) * q0.dxi(a, x, xi));
      },
      [p0, q0](int a, const Vec& x, const Vec& xi) {
        return Mat(p0.dx_dxi(a, x, xi) * q0.value(x, xi) + p0.dxi(a, x, xi) * q0.dx(a, x, xi) +
                   p0.dx(a, x, xi) * q0.dxi(a, x, xi) + p0.value(x, xi) * q0.dx_dxi(a, x, xi));
      });

  Component sub(p0.degree() + q0.degree() - 1.0, [p0, p1, q0, q1, dim](const Vec& x, const Vec& xi) {
    Mat acc = p0.value(x, xi) * q1.value(x, xi) + p1.value(x, xi) * q0.value(x, xi);
    for (int a = 0; a < dim; ++a)
      acc += (1.0 / kI) * (p0.dxi(a, x, xi) * q0.dx(a, x, xi));
    return acc;
  });

  MatrixSymbol out;
  out.degree = P.degree + Q.degree;
  out.dim = dim;
  out.rank = P.rank;
  out.comps = {top, sub};
  return out;
}

MatrixSymbol symbol_adjoint(const MatrixSymbol& P) {
  MatrixSymbol out;
  out.degree = P.degree;
  out.dim = P.dim;
  out.rank = P.rank;
  const int dim = P.dim;

  Component c0 = P.comps[0];
  Component top(
      c0.degree(),
      [c0](const Vec& x, const Vec& xi) { return Mat(c0.value(x, xi).adjoint()); },
      [c0](int a, const Vec& x, const Vec& xi) { return Mat(c0.dx(a, x, xi).adjoint()); },
      [c0](int a, const Vec& x, const Vec& xi) { return Mat(c0.dxi(a, x, xi).adjoint()); },
      [c0](int a, const Vec& x, const Vec& xi) { return Mat(c0.dx_dxi(a, x, xi).adjoint()); });
  out.comps.push_back(top);

  if (P.comps.size() >= 2) {
    Component c1 = P.comps[1];
    out.comps.push_back(Component(c1.degree(), [c0, c1, dim](const Vec& x, const Vec& xi) {
      Mat acc = c1.value(x, xi).adjoint();
      for (int a = 0; a < dim; ++a) acc += (1.0 / kI) * c0.dx_dxi(a, x, xi).adjoint();
      return acc;
    }));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identity residuals

namespace {

// scalar part of a (numerically scalar) matrix value
Cplx scalar_of(const Mat& m) { return m.trace() / static_cast<double>(m.rows()); }

void require_scalar_principal(const MatrixSymbol& P, const std::vector<geom::PhasePoint>& pts) {
  for (const auto& pt : pts) {
    Mat v = P.comps[0].value(pt.x, pt.xi);
    Mat dev = v - scalar_of(v) * Mat::Identity(v.rows(), v.cols());
    if (max_abs(dev) > 1e-9 * (1.0 + max_abs(v)))
      throw IdentityInapplicable("principal symbol is not scalar at a sample point");
  }
}

}  // namespace

const char* to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::Product: return "product";
    case IdentityKind::Power: return "power";
    case IdentityKind::Inverse: return "inverse";
    case IdentityKind::Commutator: return "commutator";
    case IdentityKind::Egorov: return "egorov";
  }
  return "?";
}

double residual_product(const MatrixSymbol& P, const MatrixSymbol& Q,
                        const std::vector<geom::PhasePoint>& pts) {
  require_scalar_principal(P, pts);
  MatrixSymbol PQ = compose_first_order(P, Q);
  Component sub_pq = subprincipal_component(PQ);
  Component sub_p = subprincipal_component(P);
  Component sub_q = subprincipal_component(Q);
  const int dim = P.dim;

  double worst = 0.0;
  for (const auto& pt : pts) {
    Mat lhs = sub_pq.value(pt.x, pt.xi);
    Cplx p = scalar_of(P.comps[0].value(pt.x, pt.xi));
    Mat rhs = sub_p.value(pt.x, pt.xi) * Q.comps[0].value(pt.x, pt.xi) +
              p * sub_q.value(pt.x, pt.xi);
    // + (1/2i) X_p(sigma_Q) with the Poisson orientation matching the
    // composition formula: X_p f = sum_a d_xi_a p d_x_a f - d_x_a p d_xi_a f
    Mat flow = Mat::Zero(P.rank, P.rank);
    for (int a = 0; a < dim; ++a) {
      Cplx p_xi = scalar_of(P.comps[0].dxi(a, pt.x, pt.xi));
      Cplx p_x = scalar_of(P.comps[0].dx(a, pt.x, pt.xi));
      flow += p_xi * Q.comps[0].dx(a, pt.x, pt.xi) - p_x * Q.comps[0].dxi(a, pt.x, pt.xi);
    }
    rhs += (0.5 / kI) * flow;
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

double residual_power(const MatrixSymbol& P, int k, const std::vector<geom::PhasePoint>& pts) {
  if (k < 2) throw std::invalid_argument("power identity needs k >= 2");
  require_scalar_principal(P, pts);
  MatrixSymbol R = P;
  for (int i = 1; i < k; ++i) R = compose_first_order(R, P);
  Component sub_r = subprincipal_component(R);
  Component sub_p = subprincipal_component(P);

  double worst = 0.0;
  for (const auto& pt : pts) {
    Mat lhs = sub_r.value(pt.x, pt.xi);
    Cplx p = scalar_of(P.comps[0].value(pt.x, pt.xi));
    Cplx factor = static_cast<double>(k) * std::pow(p, k - 1);
    Mat rhs = factor * sub_p.value(pt.x, pt.xi);
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

double residual_inverse(const MatrixSymbol& P, const std::vector<geom::PhasePoint>& pts) {
  require_scalar_principal(P, pts);
  Component p0 = P.comps[0];
  Component p1 = P.comps[1];
  const int dim = P.dim;
  const int rank = P.rank;

  for (const auto& pt : pts) {
    Cplx p = scalar_of(p0.value(pt.x, pt.xi));
    if (std::abs(p) < 1e-10 * (1.0 + std::pow(pt.xi.norm(), P.degree)))
      throw IdentityInapplicable("principal symbol not elliptic at a sample point");
  }

  // two-term parametrix
  Component q0(
      -P.degree,
      [p0, rank](const Vec& x, const Vec& xi) {
        return Mat((1.0 / scalar_of(p0.value(x, xi))) * Mat::Identity(rank, rank));
      },
      [p0, rank](int a, const Vec& x, const Vec& xi) {
        Cplx p = scalar_of(p0.value(x, xi));
        Cplx px = scalar_of(p0.dx(a, x, xi));
        return Mat((-px / (p * p)) * Mat::Identity(rank, rank));
      },
      [p0, rank](int a, const Vec& x, const Vec& xi) {
        Cplx p = scalar_of(p0.value(x, xi));
        Cplx pxi = scalar_of(p0.dxi(a, x, xi));
        return Mat((-pxi / (p * p)) * Mat::Identity(rank, rank));
      },
      [p0, rank](int a, const Vec& x, const Vec& xi) {
        Cplx p = scalar_of(p0.value(x, xi));
        Cplx px = scalar_of(p0.dx(a, x, xi));
        Cplx pxi = scalar_of(p0.dxi(a, x, xi));
        Cplx pxxi = scalar_of(p0.dx_dxi(a, x, xi));
        return Mat((2.0 * px * pxi / (p * p * p) - pxxi / (p * p)) * Mat::Identity(rank, rank));
      });

  Component q1(-P.degree - 1.0, [p0, p1, dim, rank](const Vec& x, const Vec& xi) {
    Cplx p = scalar_of(p0.value(x, xi));
    Mat bracket = p1.value(x, xi) / p;
    Cplx cross = 0.0;
    for (int a = 0; a < dim; ++a) {
      Cplx pxi = scalar_of(p0.dxi(a, x, xi));
      Cplx px = scalar_of(p0.dx(a, x, xi));
      cross += kI * pxi * px / (p * p);
    }
    bracket += cross * Mat::Identity(rank, rank);
    return Mat(-bracket / p);
  });

  MatrixSymbol Q;
  Q.degree = -P.degree;
  Q.dim = dim;
  Q.rank = rank;
  Q.comps = {q0, q1};

  Component sub_q = subprincipal_component(Q);
  Component sub_p = subprincipal_component(P);

  double worst = 0.0;
  for (const auto& pt : pts) {
    Cplx p = scalar_of(p0.value(pt.x, pt.xi));
    Mat lhs = sub_q.value(pt.x, pt.xi);
    Mat rhs = (-1.0 / (p * p)) * sub_p.value(pt.x, pt.xi);
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

double residual_commutator(const MatrixSymbol& P, const MatrixSymbol& Q,
                           const std::vector<geom::PhasePoint>& pts) {
  require_scalar_principal(P, pts);
  MatrixSymbol PQ = compose_first_order(P, Q);
  MatrixSymbol QP = compose_first_order(Q, P);
  Component sub_p = subprincipal_component(P);
  const int dim = P.dim;

  double worst = 0.0;
  for (const auto& pt : pts) {
    Mat lhs = PQ.comps[1].value(pt.x, pt.xi) - QP.comps[1].value(pt.x, pt.xi);
    Mat q0 = Q.comps[0].value(pt.x, pt.xi);
    Mat bracket = Mat::Zero(P.rank, P.rank);
    for (int a = 0; a < dim; ++a) {
      Cplx p_xi = scalar_of(P.comps[0].dxi(a, pt.x, pt.xi));
      Cplx p_x = scalar_of(P.comps[0].dx(a, pt.x, pt.xi));
      bracket += p_xi * Q.comps[0].dx(a, pt.x, pt.xi) - p_x * Q.comps[0].dxi(a, pt.x, pt.xi);
    }
    Mat subp = sub_p.value(pt.x, pt.xi);
    Mat rhs = (1.0 / kI) * bracket + subp * q0 - q0 * subp;
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

double residual_egorov_identity(const MatrixSymbol& B, const MatrixSymbol& P,
                                const MatrixSymbol& A,
                                const std::vector<geom::PhasePoint>& pts) {
  require_scalar_principal(P, pts);
  MatrixSymbol BP = compose_first_order(B, P);
  MatrixSymbol BPA = compose_first_order(BP, A);
  MatrixSymbol BA = compose_first_order(B, A);

  double worst = 0.0;
  for (const auto& pt : pts) {
    Mat lhs = BPA.comps[0].value(pt.x, pt.xi);
    Cplx p = scalar_of(P.comps[0].value(pt.x, pt.xi));
    Mat rhs = BA.comps[0].value(pt.x, pt.xi) * p;
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

namespace {

expr::Expr subst_vars(const expr::Expr& e, const std::vector<expr::Expr>& repl) {
  using expr::Kind;
  const expr::Node& n = e.node();
  switch (n.kind) {
    case Kind::Number: return e;
    case Kind::Var: return repl[static_cast<std::size_t>(n.var)];
    case Kind::Neg: return -subst_vars(expr::Expr(n.a), repl);
    case Kind::Add: return subst_vars(expr::Expr(n.a), repl) + subst_vars(expr::Expr(n.b), repl);
    case Kind::Sub: return subst_vars(expr::Expr(n.a), repl) - subst_vars(expr::Expr(n.b), repl);
    case Kind::Mul: return subst_vars(expr::Expr(n.a), repl) * subst_vars(expr::Expr(n.b), repl);
    case Kind::Div: return subst_vars(expr::Expr(n.a), repl) / subst_vars(expr::Expr(n.b), repl);
    case Kind::Pow: return expr::pow(subst_vars(expr::Expr(n.a), repl), n.exponent);
    case Kind::Call: return expr::call(n.func, subst_vars(expr::Expr(n.a), repl));
  }
  throw std::logic_error("subst_vars: unreachable");
}

CExprMat subst_vars(const CExprMat& m, const std::vector<expr::Expr>& repl) {
  CExprMat out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out.at(i, j) = CExpr(subst_vars(m.at(i, j).re, repl), subst_vars(m.at(i, j).im, repl));
  return out;
}

}  // namespace

double residual_egorov_linear(const SecondOrderOperator& op, const Eigen::MatrixXd& T,
                              const std::vector<geom::PhasePoint>& pts) {
  const int n = op.dim;
  if (T.rows() != n || T.cols() != n) throw std::invalid_argument("T must be dim x dim");
  Eigen::MatrixXd S = T.inverse();

  // x = T y substitution
  std::vector<expr::Expr> repl(static_cast<std::size_t>(expr::kMaxDim), expr::Expr::number(0.0));
  for (int mu = 0; mu < n; ++mu) {
    expr::Expr acc = expr::Expr::number(0.0);
    for (int nu = 0; nu < n; ++nu)
      acc = acc + expr::Expr::number(T(mu, nu)) * expr::Expr::variable(nu);
    repl[static_cast<std::size_t>(mu)] = acc;
  }

  // conjugated second-order coefficients A_T^{rho sigma}(y) =
  // S_{rho mu} S_{sigma nu} A^{mu nu}(T y); the half-density pullback factor
  // |det T|^{1/2} is constant and cancels, and sigma(B A) = Id for the
  // coordinate-change pair, so the Egorov formula reduces to
  // sigma(P_T)(y, eta) = sigma_P(T y, T^{-T} eta).
  std::vector<CExprMat> At(static_cast<std::size_t>(n * n), CExprMat(op.rank, op.rank));
  for (int rho = 0; rho < n; ++rho)
    for (int sig = 0; sig < n; ++sig) {
      CExprMat acc(op.rank, op.rank);
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu) {
          double c = S(rho, mu) * S(sig, nu);
          if (c == 0.0) continue;
          acc = acc + subst_vars(op.a(mu, nu), repl).scaled(Cplx{c, 0.0});
        }
      At[static_cast<std::size_t>(rho * n + sig)] = acc;
    }

  double worst = 0.0;
  for (const auto& pt : pts) {
    const Vec& y = pt.x;
    const Vec& eta = pt.xi;
    Mat lhs = Mat::Zero(op.rank, op.rank);
    for (int rho = 0; rho < n; ++rho)
      for (int sig = 0; sig < n; ++sig)
        lhs += eta[rho] * eta[sig] * At[static_cast<std::size_t>(rho * n + sig)].eval(y);

    Vec x = T * y;
    Vec xi = S.transpose() * eta;
    Mat rhs = Mat::Zero(op.rank, op.rank);
    for (int mu = 0; mu < n; ++mu)
      for (int nu = 0; nu < n; ++nu) rhs += xi[mu] * xi[nu] * op.a(mu, nu).eval(x);

    worst = std::max(worst, max_abs(lhs - rhs));
  }
  return worst;
}

// ---------------------------------------------------------------------------

std::vector<double> compatibility_residual(const SecondOrderOperator& op,
                                           const BundleConnection& conn,
                                           const geom::MetricChart& chart,
                                           const std::vector<geom::PhasePoint>& pts,
                                           double null_tol) {
  MatrixSymbol sub = subprincipal(op, chart);
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& pt : pts) {
    geom::MetricData md = geom::metric_data(chart, pt.x);
    double p = pt.xi.dot(md.g_inv * pt.xi);
    if (std::abs(p) > null_tol * pt.xi.squaredNorm())
      throw NonNullPoint("compatibility residual requested off the characteristic set");
    // W = Gamma(pi_* X) with pi_* X^nu = -2 g^{mu nu} xi_mu
    Vec xdot = -2.0 * (md.g_inv * pt.xi);
    Mat W = Mat::Zero(op.rank, op.rank);
    for (int nu = 0; nu < op.dim; ++nu) W += xdot[nu] * conn.eval(nu, pt.x);
    Mat sigma = sub.comps[0].value(pt.x, pt.xi);
    out.push_back(max_abs(sigma - W));
  }
  return out;
}

// ---------------------------------------------------------------------------

SquareRootResult square_root_symbols(const MatrixSymbol& p_in, const Component& q, int K,
                                     const std::vector<geom::PhasePoint>& pts) {
  if (K != 0 && K != 1) throw std::invalid_argument("K must be 0 or 1");
  MatrixSymbol p = pad_to_two(p_in);
  const int rank = p.rank;

  for (const auto& pt : pts) {
    Mat qv = q.value(pt.x, pt.xi);
    double scale = std::pow(std::max(1e-30, max_abs(qv)), rank);
    if (std::abs(qv.determinant()) < 1e-10 * scale)
      throw NotElliptic("factor q is singular at a sample point");
  }

  // Q0 = (q + q*)/2
  Component Q0(
      q.degree(),
      [q](const Vec& x, const Vec& xi) {
        Mat v = q.value(x, xi);
        return Mat(0.5 * (v + v.adjoint()));
      },
      [q](int a, const Vec& x, const Vec& xi) {
        Mat v = q.dx(a, x, xi);
        return Mat(0.5 * (v + v.adjoint()));
      },
      [q](int a, const Vec& x, const Vec& xi) {
        Mat v = q.dxi(a, x, xi);
        return Mat(0.5 * (v + v.adjoint()));
      },
      [q](int a, const Vec& x, const Vec& xi) {
        Mat v = q.dx_dxi(a, x, xi);
        return Mat(0.5 * (v + v.adjoint()));
      });

  MatrixSymbol Q;
  Q.degree = p.degree / 2.0;
  Q.dim = p.dim;
  Q.rank = rank;
  Q.comps = {Q0, Component::zero(Q.degree - 1.0, rank)};

  auto order_m1_defect = [&](const MatrixSymbol& cand) {
    MatrixSymbol cc = compose_first_order(symbol_adjoint(cand), cand);
    // [p - Q* # Q] at homogeneity degree m-1
    return [cc, p](const Vec& x, const Vec& xi) {
      return Mat(p.comps[1].value(x, xi) - cc.comps[1].value(x, xi));
    };
  };

  if (K == 1) {
    auto r1 = order_m1_defect(Q);
    Component Q1(Q.degree - 1.0, [q, r1](const Vec& x, const Vec& xi) {
      Mat qv = q.value(x, xi);
      return Mat(qv.adjoint().inverse() * r1(x, xi) * 0.5);
    });
    Q.comps[1] = Q1;
  }

  auto defect = order_m1_defect(Q);
  double worst = 0.0;
  for (const auto& pt : pts) worst = std::max(worst, max_abs(defect(pt.x, pt.xi)));

  return {Q, worst};
}

}  // namespace proplab::sym
