#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <proplab/suite.hpp>
#include <proplab/symbols.hpp>

using namespace proplab;
using geom::MetricChart;
using geom::PhasePoint;
using sym::CExpr;
using sym::CExprMat;
using sym::Mat;
using sym::Vec;

namespace {

MetricChart frw() { return MetricChart::frw(expr::parse_expression("exp(t)"), 8.0); }

CExprMat scalar_mat(const char* text) {
  CExprMat m(1, 1);
  m.at(0, 0) = CExpr(expr::parse_expression(text));
  return m;
}

sym::SecondOrderOperator toy_x_operator() {
  // -d_x^2 + x d_x on the x1 axis of a flat 2d chart, already half-density form
  sym::SecondOrderOperator op;
  op.dim = 2;
  op.rank = 1;
  op.half_density = true;
  op.A.assign(4, CExprMat(1, 1));
  op.B.assign(2, CExprMat(1, 1));
  op.C = CExprMat(1, 1);
  op.A[3] = scalar_mat("1");  // A^{11}
  op.B[1] = scalar_mat("x1");
  return op;
}

std::vector<PhasePoint> cloud(int n, std::uint64_t seed = 7) {
  Rng rng(seed);
  return suite::sample_cloud(rng, 2, n);
}

PhasePoint frw_null_pt(Rng& rng) {
  geom::Vec x(2), xi(2);
  x << rng.uniform(-1, 1), rng.uniform(-2, 2);
  double xi1 = rng.uniform(0.5, 1.5) * (rng.uniform(0, 1) < 0.5 ? -1 : 1);
  xi << std::exp(-x[0]) * std::abs(xi1), xi1;
  return PhasePoint(x, xi);
}

}  // namespace

TEST_CASE("total symbol: flat wave operator") {
  MetricChart mink = MetricChart::minkowski(2);
  sym::BundleConnection conn;
  conn.dim = 2;
  conn.rank = 1;
  conn.gamma.assign(2, CExprMat(1, 1));
  sym::Potential pot{CExprMat(1, 1)};
  sym::SecondOrderOperator box = sym::weitzenbock_assemble(mink, conn, pot);
  sym::MatrixSymbol s = sym::total_symbol_halfdensity(box, mink);

  Vec x(2), xi(2);
  x << 0.2, -0.1;
  xi << 0.7, 1.3;
  CHECK(s.comps[0].value(x, xi)(0, 0).real() ==
        doctest::Approx(-0.49 + 1.69).epsilon(1e-12));
  CHECK(std::abs(s.comps[1].value(x, xi)(0, 0)) <= 1e-14);
  CHECK(std::abs(s.comps[2].value(x, xi)(0, 0)) <= 1e-14);
}

TEST_CASE("total symbol: -d_x^2 + x d_x gives p2 = xi^2, p1 = i x xi") {
  MetricChart mink = MetricChart::minkowski(2);
  sym::MatrixSymbol s = sym::total_symbol_halfdensity(toy_x_operator(), mink);
  Vec x(2), xi(2);
  x << 0.0, 0.7;
  xi << 0.0, 1.3;
  CHECK(s.comps[0].value(x, xi)(0, 0).real() == doctest::Approx(1.69).epsilon(1e-13));
  auto p1 = s.comps[1].value(x, xi)(0, 0);
  CHECK(p1.real() == doctest::Approx(0.0));
  CHECK(p1.imag() == doctest::Approx(0.7 * 1.3).epsilon(1e-13));
}

TEST_CASE("half-density conjugation supplies the first-order correction") {
  // g = diag(-1, a(x1)^2): the half-density total symbol has
  // p1 = -i (d_mu g^{mu nu}) xi_nu, here -i d_1(a^{-2}) xi_1
  std::vector<std::vector<expr::Expr>> g(2, std::vector<expr::Expr>(2));
  g[0][0] = expr::Expr::number(-1.0);
  g[0][1] = expr::Expr::number(0.0);
  g[1][0] = expr::Expr::number(0.0);
  g[1][1] = expr::pow(expr::parse_expression("1.2 + 0.3*sin(x1)"), 2);
  MetricChart chart(2, g);

  sym::BundleConnection triv;
  triv.dim = 2;
  triv.rank = 1;
  triv.gamma.assign(2, CExprMat(1, 1));
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(chart, triv, sym::Potential{CExprMat(1, 1)});
  sym::MatrixSymbol s = sym::total_symbol_halfdensity(op, chart);

  Rng rng(3);
  for (int c = 0; c < 10; ++c) {
    Vec x(2), xi(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    xi << rng.normal(), rng.normal();
    double a = 1.2 + 0.3 * std::sin(x[1]);
    double da = 0.3 * std::cos(x[1]);
    double dg11 = -2.0 * da / (a * a * a);  // d_1 of a^{-2}
    auto p1 = s.comps[1].value(x, xi)(0, 0);
    CHECK(p1.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p1.imag() == doctest::Approx(-dg11 * xi[1]).epsilon(1e-10));
    // and the subprincipal symbol of the scalar operator still vanishes
    sym::MatrixSymbol sub = sym::subprincipal(op, chart);
    CHECK(std::abs(sub.comps[0].value(x, xi)(0, 0)) <= 1e-12);
  }
}

TEST_CASE("subprincipal: flat is zero, scalar curved d'Alembertian is zero") {
  MetricChart f = frw();
  sym::BundleConnection conn;
  conn.dim = 2;
  conn.rank = 1;
  conn.gamma.assign(2, CExprMat(1, 1));
  sym::Potential pot{scalar_mat("1 + x0^2")};  // mass-squared style potential
  sym::SecondOrderOperator kg = sym::weitzenbock_assemble(f, conn, pot);
  sym::MatrixSymbol sub = sym::subprincipal(kg, f);
  Rng rng(4);
  for (int c = 0; c < 10; ++c) {
    PhasePoint pt = frw_null_pt(rng);
    CHECK(std::abs(sub.comps[0].value(pt.x, pt.xi)(0, 0)) <= 1e-12);
  }
}

TEST_CASE("subprincipal of the Weitzenboeck operator is -2 g^{mu nu} Gamma_nu xi_mu") {
  MetricChart f = frw();
  Rng rng(8);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2);
  sym::Potential pot{suite::random_connection(rng, 2, 2).gamma[0]};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(f, conn, pot);
  sym::MatrixSymbol sub = sym::subprincipal(op, f);

  for (int c = 0; c < 10; ++c) {
    geom::Vec x(2), xi(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    xi << rng.normal(), rng.normal();
    if (xi.norm() < 1e-3) continue;
    geom::MetricData md = geom::metric_data(f, x);
    Mat expected = Mat::Zero(2, 2);
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < 2; ++nu)
        expected += -2.0 * md.g_inv(mu, nu) * xi[mu] * conn.eval(nu, x);
    Mat got = sub.comps[0].value(x, xi);
    CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("subprincipal invariant under constant second-order additions") {
  MetricChart mink = MetricChart::minkowski(2);
  sym::SecondOrderOperator op = toy_x_operator();
  sym::MatrixSymbol sub0 = sym::subprincipal(op, mink);
  op.A[0] = scalar_mat("2");  // constant A^{00} shift: d^2 p2/dx dxi = 0
  sym::MatrixSymbol sub1 = sym::subprincipal(op, mink);
  Vec x(2), xi(2);
  x << 0.3, 0.7;
  xi << 1.1, -0.4;
  CHECK((sub0.comps[0].value(x, xi) - sub1.comps[0].value(x, xi)).cwiseAbs().maxCoeff() <=
        1e-14);
}

TEST_CASE("weitzenbock round trip on random bundles") {
  MetricChart f = frw();
  Rng rng(15);
  for (int c = 0; c < 20; ++c) {
    sym::BundleConnection conn = suite::random_connection(rng, 2, 2);
    sym::Potential pot{suite::random_connection(rng, 2, 2).gamma[1]};
    sym::SecondOrderOperator op = sym::weitzenbock_assemble(f, conn, pot);
    auto [conn2, pot2] = sym::weitzenbock_decompose(op, f);
    for (int c2 = 0; c2 < 3; ++c2) {
      geom::Vec x(2);
      x << rng.uniform(-1, 1), rng.uniform(-1, 1);
      for (int mu = 0; mu < 2; ++mu)
        CHECK((conn2.eval(mu, x) - conn.eval(mu, x)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((pot2.V.eval(x) - pot.V.eval(x)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("decompose rejects non-normally-hyperbolic operators") {
  MetricChart mink = MetricChart::minkowski(2);
  sym::SecondOrderOperator op = toy_x_operator();  // A != g^{-1} Id
  op.half_density = false;
  CHECK_THROWS_AS(sym::weitzenbock_decompose(op, mink), sym::NotNormallyHyperbolic);
}

TEST_CASE("compose: D1-type square and the hand-expanded cross term") {
  // P = Q = xi1 * Id
  sym::SymbolPoly top(2, 1);
  std::array<int, expr::kMaxDim> e1{};
  e1[1] = 1;
  top.add_term(e1, scalar_mat("1"));
  sym::MatrixSymbol P;
  P.degree = 1;
  P.dim = 2;
  P.rank = 1;
  P.comps = {sym::Component::from_poly(1.0, top), sym::Component::zero(0.0, 1)};
  sym::MatrixSymbol PP = sym::compose_first_order(P, P);
  Vec x(2), xi(2);
  x << 0.4, -0.3;
  xi << 0.6, 1.7;
  CHECK(PP.comps[0].value(x, xi)(0, 0).real() == doctest::Approx(1.7 * 1.7));
  CHECK(std::abs(PP.comps[1].value(x, xi)(0, 0)) <= 1e-14);

  // p = xi^2, q = x xi on the x1 axis: subleading contains (1/i) 2 xi * xi
  sym::SymbolPoly ptop(2, 1), qtop(2, 1);
  std::array<int, expr::kMaxDim> e11{};
  e11[1] = 2;
  ptop.add_term(e11, scalar_mat("1"));
  qtop.add_term(e1, scalar_mat("x1"));
  sym::MatrixSymbol Ps{2.0, 2, 1, {sym::Component::from_poly(2.0, ptop),
                                   sym::Component::zero(1.0, 1)}};
  sym::MatrixSymbol Qs{1.0, 2, 1, {sym::Component::from_poly(1.0, qtop),
                                   sym::Component::zero(0.0, 1)}};
  sym::MatrixSymbol C = sym::compose_first_order(Ps, Qs);
  auto sub = C.comps[1].value(x, xi)(0, 0);
  CHECK(sub.real() == doctest::Approx(0.0));
  CHECK(sub.imag() == doctest::Approx(-2.0 * 1.7 * 1.7).epsilon(1e-12));
}

TEST_CASE("compose matches the exact product for first-order symbols") {
  // for degree-1 factors the two retained components are the whole symbol;
  // apply P and Q as differential operators to plane waves for the oracle
  Rng rng(23);
  for (int inst = 0; inst < 5; ++inst) {
    sym::MatrixSymbol P = suite::random_matrix_symbol(rng, 2, 2, 1);
    sym::MatrixSymbol Q = suite::random_matrix_symbol(rng, 2, 2, 1);
    sym::MatrixSymbol C = sym::compose_first_order(P, Q);
    for (int k = 0; k < 10; ++k) {
      Vec x(2), xi(2);
      x << rng.uniform(-1, 1), rng.uniform(-1, 1);
      xi << rng.normal(), rng.normal();
      if (xi.norm() < 0.1) continue;
      // full composed symbol: c = p q + (1/i) sum d_xi p d_x q (exact here)
      Mat full = P.comps[0].value(x, xi) * Q.comps[0].value(x, xi) +
                 P.comps[0].value(x, xi) * Q.comps[1].value(x, xi) +
                 P.comps[1].value(x, xi) * Q.comps[0].value(x, xi) +
                 P.comps[1].value(x, xi) * Q.comps[1].value(x, xi);
      for (int a = 0; a < 2; ++a)
        full += (1.0 / std::complex<double>{0, 1}) *
                (P.comps[0].dxi(a, x, xi) *
                 (Q.comps[0].dx(a, x, xi) + Q.comps[1].dx(a, x, xi)));
      Mat truncated = C.comps[0].value(x, xi) + C.comps[1].value(x, xi) +
                      P.comps[1].value(x, xi) * Q.comps[1].value(x, xi);
      for (int a = 0; a < 2; ++a)
        truncated += (1.0 / std::complex<double>{0, 1}) *
                     (P.comps[0].dxi(a, x, xi) * Q.comps[1].dx(a, x, xi));
      CHECK((full - truncated).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("compose requires two components") {
  sym::SymbolPoly top(2, 1);
  std::array<int, expr::kMaxDim> e1{};
  e1[1] = 1;
  top.add_term(e1, scalar_mat("1"));
  sym::MatrixSymbol P{1.0, 2, 1, {sym::Component::from_poly(1.0, top)}};
  CHECK_THROWS_AS(sym::compose_first_order(P, P), sym::TruncationUnderflow);
  sym::MatrixSymbol P2 = sym::pad_to_two(P);
  CHECK_NOTHROW(sym::compose_first_order(P2, P2));
}

TEST_CASE("homogeneity defect of poly symbols is tiny") {
  Rng rng(99);
  sym::MatrixSymbol P = suite::random_scalar_symbol(rng, 2, 2);
  CHECK(sym::homogeneity_defect(P, cloud(20)) <= 1e-8);
}

TEST_CASE("identity residuals on trivial cases") {
  // product with P = Q = D1-type: both sides vanish
  sym::SymbolPoly top(2, 2);
  std::array<int, expr::kMaxDim> e1{};
  e1[1] = 1;
  top.add_term(e1, CExprMat::identity(2));
  sym::MatrixSymbol D1{1.0, 2, 2, {sym::Component::from_poly(1.0, top),
                                   sym::Component::zero(0.0, 2)}};
  CHECK(sym::residual_product(D1, D1, cloud(50)) <= 1e-12);

  // egorov with the identity graph
  Rng rng(41);
  sym::MatrixSymbol P = suite::random_scalar_symbol(rng, 2, 2);
  sym::MatrixSymbol A = suite::random_matrix_symbol(rng, 2, 2, 1);
  sym::MatrixSymbol B = suite::random_matrix_symbol(rng, 2, 2, 1);
  CHECK(sym::residual_egorov_identity(B, P, A, cloud(50)) <= 1e-10);
}

TEST_CASE("identity corpus: every kind passes at 1e-6") {
  auto rows = suite::run_identity_corpus(2024, 2, 2, 4);
  for (const auto& r : rows) {
    INFO(sym::to_string(r.kind));
    CHECK(r.max_residual <= 1e-6);
  }
}

TEST_CASE("identity preconditions are enforced") {
  Rng rng(55);
  sym::MatrixSymbol M = suite::random_matrix_symbol(rng, 2, 2, 2);  // matrix principal
  CHECK_THROWS_AS(sym::residual_product(M, M, cloud(10)), sym::IdentityInapplicable);
}

TEST_CASE("compatibility residual: Weitzenboeck connection on and off") {
  MetricChart f = frw();
  Rng rng(61);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2);
  sym::Potential pot{suite::random_connection(rng, 2, 2).gamma[0]};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(f, conn, pot);

  std::vector<PhasePoint> pts;
  for (int c = 0; c < 20; ++c) pts.push_back(frw_null_pt(rng));

  auto res = sym::compatibility_residual(op, conn, f, pts);
  for (double r : res) CHECK(r <= 1e-8);

  // perturbation response is linear in epsilon
  auto perturbed = [&](double eps) {
    sym::BundleConnection p = conn;
    p.gamma[0].at(0, 1) = p.gamma[0].at(0, 1) + CExpr(expr::Expr::number(eps));
    auto rr = sym::compatibility_residual(op, p, f, pts);
    return *std::max_element(rr.begin(), rr.end());
  };
  double r1 = perturbed(1e-2);
  double r2 = perturbed(2e-2);
  CHECK(r1 > 1e-4);
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(0.2));

  // off-characteristic points are rejected
  geom::Vec x(2), xi(2);
  x << 0, 0;
  xi << 1.0, 0.1;
  CHECK_THROWS_AS(sym::compatibility_residual(op, conn, f, {PhasePoint(x, xi)}),
                  sym::NonNullPoint);

  // trivial bundle, flat: residual identically zero
  MetricChart mink = MetricChart::minkowski(2);
  sym::BundleConnection triv;
  triv.dim = 2;
  triv.rank = 1;
  triv.gamma.assign(2, CExprMat(1, 1));
  sym::SecondOrderOperator box = sym::weitzenbock_assemble(mink, triv, sym::Potential{CExprMat(1, 1)});
  geom::Vec xn(2), xin(2);
  xn << 0, 0;
  xin << 1, 1;
  auto res0 = sym::compatibility_residual(box, triv, mink, {PhasePoint(xn, xin)});
  CHECK(res0[0] <= 1e-14);
}

namespace {

// function-backed |xi| component scaled by a symbolic factor a(x1)
sym::Component abs_xi_component(const expr::Expr& a_expr) {
  auto a = std::make_shared<expr::CompiledExpr>(a_expr);
  auto da = std::make_shared<expr::CompiledExpr>(expr::differentiate(a_expr, 1));
  auto value = [a](const Vec& x, const Vec& xi) {
    Mat m(1, 1);
    m(0, 0) = a->eval(std::span<const double>(x.data(), 2)) * std::abs(xi[1]);
    return m;
  };
  auto dx = [da](int arg, const Vec& x, const Vec& xi) {
    Mat m = Mat::Zero(1, 1);
    if (arg == 1) m(0, 0) = da->eval(std::span<const double>(x.data(), 2)) * std::abs(xi[1]);
    return m;
  };
  auto dxi = [a](int arg, const Vec& x, const Vec& xi) {
    Mat m = Mat::Zero(1, 1);
    if (arg == 1)
      m(0, 0) = a->eval(std::span<const double>(x.data(), 2)) * (xi[1] >= 0 ? 1.0 : -1.0);
    return m;
  };
  auto dxdxi = [da](int arg, const Vec& x, const Vec& xi) {
    Mat m = Mat::Zero(1, 1);
    if (arg == 1)
      m(0, 0) = da->eval(std::span<const double>(x.data(), 2)) * (xi[1] >= 0 ? 1.0 : -1.0);
    return m;
  };
  return sym::Component(1.0, value, dx, dxi, dxdxi);
}

std::vector<PhasePoint> off_cone_cloud(int n) {
  Rng rng(71);
  std::vector<PhasePoint> pts;
  while (static_cast<int>(pts.size()) < n) {
    geom::Vec x(2), xi(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    xi << 0.0, rng.uniform(0.4, 1.5) * (rng.uniform(0, 1) < 0.5 ? -1 : 1);
    pts.emplace_back(x, xi);
  }
  return pts;
}

}  // namespace

TEST_CASE("square root symbols") {
  auto pts = off_cone_cloud(30);

  // x-independent scalar case: p = xi^2, q = |xi|, no correction needed
  sym::Component q0 = abs_xi_component(expr::Expr::number(1.0));
  sym::SymbolPoly ptop(2, 1);
  std::array<int, expr::kMaxDim> e2{};
  e2[1] = 2;
  ptop.add_term(e2, scalar_mat("1"));
  sym::MatrixSymbol P{2.0, 2, 1, {sym::Component::from_poly(2.0, ptop)}};
  auto r0 = sym::square_root_symbols(P, q0, 0, pts);
  CHECK(r0.residual <= 1e-12);

  // x-dependent factor: p built as Q~* # Q~ for a reference symbol with a
  // random subleading part; the construction recovers a correction making the
  // degree-(m-1) defect vanish
  expr::Expr a = expr::parse_expression("1.5 + 0.3*sin(x1)");
  sym::Component q1 = abs_xi_component(a);
  Rng rng(81);
  sym::SymbolPoly rsub(2, 1);
  std::array<int, expr::kMaxDim> e0{};
  rsub.add_term(e0, scalar_mat("0.4 + 0.2*cos(x1)"));
  sym::MatrixSymbol Qref{1.0, 2, 1, {q1, sym::Component::from_poly(0.0, rsub)}};
  sym::MatrixSymbol Pfull = sym::compose_first_order(sym::symbol_adjoint(Qref), Qref);
  auto r1 = sym::square_root_symbols(Pfull, q1, 1, pts);
  CHECK(r1.residual <= 1e-8);
  // without the correction the defect is visible
  auto r1bare = sym::square_root_symbols(Pfull, q1, 0, pts);
  CHECK(r1bare.residual > 1e-4);

  // diagonal 2x2 reduces to two scalar problems
  auto qd_value = [](const Vec& x, const Vec& xi) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = (1.2 + 0.2 * std::sin(x[1])) * std::abs(xi[1]);
    m(1, 1) = (0.8 + 0.1 * std::cos(x[1])) * std::abs(xi[1]);
    return m;
  };
  sym::Component qd(1.0, qd_value);
  sym::MatrixSymbol Qd{1.0, 2, 2, {qd, sym::Component::zero(0.0, 2)}};
  sym::MatrixSymbol Pd = sym::compose_first_order(sym::symbol_adjoint(Qd), Qd);
  auto rd = sym::square_root_symbols(Pd, qd, 1, pts);
  CHECK(rd.residual <= 1e-8);

  // singular factor is rejected
  auto q_sing = [](const Vec&, const Vec& xi) {
    Mat m = Mat::Zero(1, 1);
    m(0, 0) = xi[0];  // vanishes on the cloud (xi0 = 0 there)
    return m;
  };
  sym::MatrixSymbol Ps{2.0, 2, 1, {sym::Component(2.0, [](const Vec&, const Vec& xi) {
                                     Mat m(1, 1);
                                     m(0, 0) = xi[0] * xi[0];
                                     return m;
                                   })}};
  CHECK_THROWS_AS(sym::square_root_symbols(Ps, sym::Component(1.0, q_sing), 0, pts),
                  sym::NotElliptic);
}
