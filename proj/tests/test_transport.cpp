#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <proplab/suite.hpp>
#include <proplab/transport.hpp>

#include "oracles.hpp"

using namespace proplab;
using transport::CurveSamples;
using transport::Mat;
using geom::MetricChart;
using geom::PhasePoint;

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

MetricChart frw() { return MetricChart::frw(expr::parse_expression("exp(t)"), 8.0); }

CurveSamples straight_line(int count, double length, const geom::Vec& dir) {
  CurveSamples c;
  for (int i = 0; i < count; ++i) {
    double s = length * i / (count - 1);
    c.s.push_back(s);
    c.x.push_back(s * dir);
    c.xdot.push_back(dir);
  }
  return c;
}

sym::BundleConnection constant_connection(const Mat& m0, const Mat& m1) {
  // constant matrices enter through Expr constants
  sym::BundleConnection conn;
  conn.dim = 2;
  conn.rank = static_cast<int>(m0.rows());
  for (const Mat* m : {&m0, &m1}) {
    sym::CExprMat g(conn.rank, conn.rank);
    for (int i = 0; i < conn.rank; ++i)
      for (int j = 0; j < conn.rank; ++j)
        g.at(i, j) = sym::CExpr(expr::Expr::number((*m)(i, j).real()),
                                expr::Expr::number((*m)(i, j).imag()));
    conn.gamma.push_back(g);
  }
  return conn;
}

}  // namespace

TEST_CASE("parallel transport: zero connection, constant-matrix oracle") {
  geom::Vec dir(2);
  dir << 1.0, 0.0;
  CurveSamples line = straight_line(201, 2.0, dir);

  sym::BundleConnection zero = constant_connection(Mat::Zero(2, 2), Mat::Zero(2, 2));
  Eigen::VectorXcd v0(2);
  v0 << 1.0, std::complex<double>(0.3, -0.2);
  auto v = transport::parallel_transport(zero, line, v0);
  CHECK((v.back() - v0).cwiseAbs().maxCoeff() == 0.0);

  // constant Gamma(xdot) = M over length L: v = exp(-i M L) v0
  Mat M(2, 2);
  M << std::complex<double>(0.4, 0.0), std::complex<double>(0.1, 0.2),
      std::complex<double>(0.1, -0.2), std::complex<double>(-0.3, 0.0);
  sym::BundleConnection conn = constant_connection(M, Mat::Zero(2, 2));
  auto vc = transport::parallel_transport(conn, line, v0);
  Eigen::VectorXcd expected = oracle::expm(-kI * M * 2.0) * v0;
  CHECK((vc.back() - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("holonomy of a small square matches the curvature") {
  // spatially varying connection on the (x0, x1) plane
  Rng rng(17);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2);
  const double eps = 1e-2;

  auto leg = [&](const geom::Vec& from, const geom::Vec& to, const Mat& start) {
    CurveSamples c;
    const int n = 41;
    for (int i = 0; i < n; ++i) {
      double f = static_cast<double>(i) / (n - 1);
      c.s.push_back(f * eps);
      c.x.push_back(from + f * (to - from));
      c.xdot.push_back((to - from) / eps);
    }
    return transport::transport_frame(conn, c, start).back();
  };

  geom::Vec p00(2), p10(2), p11(2), p01(2);
  p00 << 0.2, -0.1;
  p10 = p00;
  p10[0] += eps;
  p11 = p10;
  p11[1] += eps;
  p01 = p00;
  p01[1] += eps;

  Mat U = Mat::Identity(2, 2);
  U = leg(p00, p10, U);
  U = leg(p10, p11, U);
  U = leg(p11, p01, U);
  U = leg(p01, p00, U);

  // holonomy deviation ~ eps^2 F with F = -i(d0 G1 - d1 G0) + [G0, G1]
  // (left-multiplication transport, counterclockwise loop)
  geom::Vec xc = p00;
  auto gamma_at = [&](int mu, const geom::Vec& x) { return conn.eval(mu, x); };
  double h = 1e-6;
  geom::Vec xp = xc, xm = xc;
  xp[0] += h;
  xm[0] -= h;
  Mat d0G1 = (gamma_at(1, xp) - gamma_at(1, xm)) / (2 * h);
  xp = xc;
  xm = xc;
  xp[1] += h;
  xm[1] -= h;
  Mat d1G0 = (gamma_at(0, xp) - gamma_at(0, xm)) / (2 * h);
  Mat G0 = gamma_at(0, xc), G1 = gamma_at(1, xc);
  Mat F = -kI * (d0G1 - d1G0) + (G0 * G1 - G1 * G0);
  Mat predicted = Mat::Identity(2, 2) + eps * eps * F;
  double dev = (U - predicted).cwiseAbs().maxCoeff();
  double scale = (eps * eps * F).cwiseAbs().maxCoeff();
  CHECK(dev <= 0.1 * scale);
}

TEST_CASE("norm preserved under hermitian connections") {
  Rng rng(19);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2, true);
  geom::Vec dir(2);
  dir << 0.7, 0.7;
  CurveSamples line = straight_line(401, 3.0, dir);
  Eigen::VectorXcd v0(2);
  v0 << 0.6, std::complex<double>(-0.2, 0.5);
  auto v = transport::parallel_transport(conn, line, v0);
  CHECK(std::abs(v.back().norm() - v0.norm()) <= 1e-8);
}

TEST_CASE("lie derivative of alpha-densities") {
  auto Xconst = [](const geom::Vec& x) {
    geom::Vec v(2);
    v << 1.0, 2.0;
    (void)x;
    return v;
  };
  auto fconst = [](const geom::Vec&) { return 3.0; };
  geom::Vec x(2);
  x << 0.3, 0.4;
  CHECK(std::abs(transport::lie_halfdensity(Xconst, fconst, 0.5, x)) <= 1e-9);

  // X = x d_x on the line (embedded as the x0 axis), f = 1, alpha = 1/2
  auto Xscale = [](const geom::Vec& p) {
    geom::Vec v(2);
    v << p[0], 0.0;
    return v;
  };
  CHECK(transport::lie_halfdensity(Xscale, fconst, 0.5, x) ==
        doctest::Approx(0.5 * 3.0).epsilon(1e-6));

  // rotation field, f = x0^2, alpha = 1/2 at (1, 1): X(f) = 2, div = 0
  auto Xrot = [](const geom::Vec& p) {
    geom::Vec v(2);
    v << p[1], -p[0];
    return v;
  };
  auto fsq = [](const geom::Vec& p) { return p[0] * p[0]; };
  geom::Vec one(2);
  one << 1.0, 1.0;
  CHECK(transport::lie_halfdensity(Xrot, fsq, 0.5, one) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("transport_symbol: constants, sources, and the compatibility cross-check") {
  geom::Vec dir(2);
  dir << 1.0, 0.0;
  CurveSamples line = straight_line(201, 1.0, dir);

  // f = 0, sigma_sub = 0: constant
  transport::TransportProblem flatp;
  flatp.curve = line;
  flatp.sigma_sub.assign(201, Mat::Zero(2, 2));
  flatp.a0 = Mat::Identity(2, 2);
  auto a = transport::transport_symbol(flatp);
  CHECK((a.back() - flatp.a0).cwiseAbs().maxCoeff() == 0.0);

  // sigma_sub = 0, constant source F: a(s) = a0 + i s F
  Mat F(2, 2);
  F << 1.0, std::complex<double>(0, 2), 0.5, -1.0;
  flatp.source.assign(201, F);
  auto af = transport::transport_symbol(flatp);
  Mat expected = flatp.a0 + kI * 1.0 * F;
  CHECK((af.back() - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // f = 0 with Weitzenboeck sigma_sub along a null geodesic equals parallel
  // transport (the compatibility identity exercised dynamically)
  MetricChart f = frw();
  Rng rng(29);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2);
  sym::Potential pot{suite::random_connection(rng, 2, 2).gamma[0]};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(f, conn, pot);
  sym::MatrixSymbol sub = sym::subprincipal(op, f);

  geom::Vec x0(2), xi0(2);
  x0 << 0.1, -0.3;
  xi0 << std::exp(-0.1), 1.0;
  auto curve = geom::flow_bicharacteristic(f, PhasePoint(x0, xi0), geom::uniform_params(1.5, 513));
  REQUIRE(curve.size() == 513);
  CurveSamples cs = CurveSamples::from_bicharacteristic(f, curve);

  transport::TransportProblem prob;
  prob.curve = cs;
  prob.a0 = Mat::Identity(2, 2);
  for (std::size_t k = 0; k < curve.size(); ++k)
    prob.sigma_sub.push_back(sub.comps[0].value(curve.x[k], curve.xi[k]));
  auto at = transport::transport_symbol(prob);
  auto frames = transport::transport_frame(conn, cs, Mat::Identity(2, 2));
  REQUIRE(at.size() == frames.size());
  double dev = 0;
  for (std::size_t k = 0; k < at.size(); ++k)
    dev = std::max(dev, (at[k] - frames[k]).cwiseAbs().maxCoeff());
  CHECK(dev <= 1e-8);
}

TEST_CASE("transport_symbol preserves the fiber norm for hermitian connections") {
  MetricChart f = frw();
  Rng rng(53);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2, true);
  sym::Potential pot{suite::random_connection(rng, 2, 2, true).gamma[0]};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(f, conn, pot);
  sym::MatrixSymbol sub = sym::subprincipal(op, f);

  geom::Vec x0(2), xi0(2);
  x0 << -0.2, 0.4;
  xi0 << std::exp(0.2), 1.0;
  auto curve = geom::flow_bicharacteristic(f, PhasePoint(x0, xi0), geom::uniform_params(1.2, 513));
  REQUIRE(curve.size() == 513);

  transport::TransportProblem prob;
  prob.curve = CurveSamples::from_bicharacteristic(f, curve);
  prob.a0 = Mat::Zero(2, 2);
  prob.a0(0, 0) = 0.6;
  prob.a0(1, 0) = std::complex<double>(0.0, 0.8);
  for (std::size_t k = 0; k < curve.size(); ++k)
    prob.sigma_sub.push_back(sub.comps[0].value(curve.x[k], curve.xi[k]));
  auto a = transport::transport_symbol(prob);
  double n0 = a.front().col(0).norm();
  for (const auto& m : a) CHECK(std::abs(m.col(0).norm() - n0) <= 1e-8);
}

TEST_CASE("grid mismatch reported") {
  geom::Vec dir(2);
  dir << 1.0, 0.0;
  transport::TransportProblem p;
  p.curve = straight_line(201, 1.0, dir);
  p.sigma_sub.assign(100, Mat::Zero(2, 2));
  p.a0 = Mat::Identity(2, 2);
  CHECK_THROWS_AS(transport::transport_symbol(p), transport::GridMismatch);
  CHECK_THROWS_AS(transport::transport_frame(constant_connection(Mat::Zero(2, 2), Mat::Zero(2, 2)),
                                             straight_line(200, 1.0, dir), Mat::Identity(2, 2)),
                  transport::GridMismatch);
}

TEST_CASE("model duhamel: b0 paths") {
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(i / 4000.0);

  auto qzero = [](double) { return Mat(Mat::Zero(2, 2)); };
  auto b0 = transport::model_duhamel_b0(qzero, grid);
  CHECK((b0.back() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  Mat Q(2, 2);
  Q << 0.3, std::complex<double>(0.1, 0.4), std::complex<double>(-0.2, 0.1), -0.5;
  auto qconst = [&](double) { return Q; };
  auto bc = transport::model_duhamel_b0(qconst, grid);
  Mat expected = oracle::expm(-kI * Q * 1.0);
  CHECK((bc.back() - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("model duhamel: k >= 1 and the defining ODE residual") {
  std::vector<double> grid;
  for (int i = 0; i <= 8000; ++i) grid.push_back(i / 8000.0);

  // q = 0, r = Id: b = -i y Id
  auto qzero = [](double) { return Mat(Mat::Zero(2, 2)); };
  auto rid = [](double) { return Mat(Mat::Identity(2, 2)); };
  auto b = transport::model_duhamel(qzero, rid, grid);
  Mat expected = -kI * 1.0 * Mat::Identity(2, 2);
  CHECK((b.back() - expected).cwiseAbs().maxCoeff() <= 1e-10);

  // random smooth coefficients: residual of -i b' + q b + r
  Rng rng(37);
  Mat q0(2, 2), q1(2, 2), r0(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      q0(i, j) = std::complex<double>(rng.normal(), rng.normal()) * 0.3;
      q1(i, j) = std::complex<double>(rng.normal(), rng.normal()) * 0.2;
      r0(i, j) = std::complex<double>(rng.normal(), rng.normal()) * 0.3;
    }
  auto q = [&](double t) { return Mat(q0 + std::sin(t) * q1); };
  auto r = [&](double t) { return Mat(std::cos(2 * t) * r0); };
  auto bk = transport::model_duhamel(q, r, grid);
  CHECK(transport::duhamel_ode_residual(q, r, grid, bk) <= 1e-7);
}

TEST_CASE("causal symbol") {
  MetricChart f = frw();
  Rng rng(43);
  sym::BundleConnection conn = suite::random_connection(rng, 2, 2);

  geom::Vec x(2), xi(2);
  x << 0.0, 0.2;
  xi << 1.0, 1.0;
  PhasePoint B(x, xi);

  // diagonal
  auto diag = transport::causal_symbol(f, conn, B, B);
  CHECK(diag.relation == geom::Relation::Diagonal);
  CHECK((diag.u - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  // related pair: matches the frame transported along the same segment
  auto curve = geom::flow_bicharacteristic(f, B, geom::uniform_params(0.8, 513));
  REQUIRE(curve.size() == 513);
  PhasePoint A(curve.x.back(), curve.xi.back());
  auto cs = transport::causal_symbol(f, conn, A, B);
  CHECK(cs.relation == geom::Relation::CPlus);
  // the scalar prefactor is reported symbolically; the density factor is not
  // computed numerically
  CHECK(std::string(transport::CausalSymbol::prefactor).find("sqrt(2*pi") != std::string::npos);
  auto frames = transport::transport_frame(conn, CurveSamples::from_bicharacteristic(f, curve),
                                           Mat::Identity(2, 2));
  CHECK((cs.u - frames.back()).cwiseAbs().maxCoeff() <= 1e-9);

  // path reversal gives the inverse
  auto rev = transport::causal_symbol(f, conn, B, A);
  CHECK((cs.u * rev.u - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);

  // trivial connection transports the identity
  sym::BundleConnection triv;
  triv.dim = 2;
  triv.rank = 2;
  triv.gamma.assign(2, sym::CExprMat(2, 2));
  auto ut = transport::causal_symbol(f, triv, A, B);
  CHECK((ut.u - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);

  // unrelated points are rejected
  geom::Vec xo(2), xio(2);
  xo << 0.5, 3.0;
  xio << std::exp(-0.5), 1.0;
  CHECK_THROWS_AS(transport::causal_symbol(f, conn, PhasePoint(xo, xio), B),
                  transport::NotRelated);
}
