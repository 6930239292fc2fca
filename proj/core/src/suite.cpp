#include "proplab/suite.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "proplab/dirac.hpp"
#include "proplab/model_space.hpp"
#include "proplab/parallel.hpp"
#include "proplab/qft.hpp"
#include "proplab/transport.hpp"
#include "proplab/version.hpp"
#include "proplab/wf_probe.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace proplab::suite {

using geom::MetricChart;
using geom::PhasePoint;

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void log_check(std::ostream* log, const report::CheckRecord& rec, double secs) {
  if (!log) return;
  (*log) << (rec.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << rec.name
         << " measured=" << std::scientific << std::setprecision(3) << rec.measured
         << " budget=" << rec.budget << " (" << std::fixed << std::setprecision(1) << secs
         << "s)";
  if (!rec.note.empty()) (*log) << "  [" << rec.note << "]";
  (*log) << "\n" << std::defaultfloat;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// corpus builders

expr::Expr random_coeff_expr(Rng& rng, double scale) {
  using expr::Expr;
  Expr x0 = Expr::variable(0);
  Expr x1 = Expr::variable(1);
  Expr e = Expr::number(rng.uniform(-scale, scale));
  e = e + Expr::number(rng.uniform(-scale, scale)) * x0;
  e = e + Expr::number(rng.uniform(-scale, scale)) * x1;
  e = e + Expr::number(rng.uniform(-scale, scale)) * expr::call(expr::Func::Sin, x0);
  e = e + Expr::number(rng.uniform(-scale, scale)) * expr::call(expr::Func::Cos, x1);
  return e;
}

std::vector<PhasePoint> sample_cloud(Rng& rng, int dim, int count) {
  std::vector<PhasePoint> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    geom::Vec x(dim), xi(dim);
    for (int a = 0; a < dim; ++a) x[a] = rng.uniform(-1.0, 1.0);
    double norm = 0.0;
    while (norm < 1e-3) {
      for (int a = 0; a < dim; ++a) xi[a] = rng.normal();
      norm = xi.norm();
    }
    xi /= norm;
    pts.emplace_back(x, xi);
  }
  return pts;
}

namespace {

sym::CExprMat random_cexpr_matrix(Rng& rng, int rank, double scale, double imag_scale) {
  sym::CExprMat m(rank, rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j)
      m.at(i, j) = sym::CExpr(random_coeff_expr(rng, scale),
                              random_coeff_expr(rng, imag_scale));
  return m;
}

std::array<int, expr::kMaxDim> mono2(int a, int b) {
  std::array<int, expr::kMaxDim> alpha{};
  alpha[static_cast<std::size_t>(a)] += 1;
  alpha[static_cast<std::size_t>(b)] += 1;
  return alpha;
}

std::array<int, expr::kMaxDim> mono1(int a) {
  std::array<int, expr::kMaxDim> alpha{};
  alpha[static_cast<std::size_t>(a)] += 1;
  return alpha;
}

}  // namespace

sym::MatrixSymbol random_scalar_symbol(Rng& rng, int dim, int rank) {
  using expr::Expr;
  // elliptic scalar principal part: e(x) * (xi_0^2 + c xi_1^2 + ...) * Id
  Expr envelope = Expr::number(rng.uniform(1.2, 1.8)) +
                  Expr::number(rng.uniform(-0.3, 0.3)) *
                      expr::call(expr::Func::Sin, Expr::variable(0)) *
                      expr::call(expr::Func::Cos, Expr::variable(1));
  sym::SymbolPoly top(dim, rank);
  sym::CExprMat id = sym::CExprMat::identity(rank);
  for (int a = 0; a < dim; ++a) {
    Expr c = Expr::number(a == 0 ? 1.0 : rng.uniform(0.6, 1.8));
    top.add_term(mono2(a, a), id.scaled(sym::CExpr(envelope * c)));
  }

  sym::SymbolPoly sub(dim, rank);
  for (int a = 0; a < dim; ++a)
    sub.add_term(mono1(a), random_cexpr_matrix(rng, rank, 0.4, 0.2));

  sym::MatrixSymbol s;
  s.degree = 2.0;
  s.dim = dim;
  s.rank = rank;
  s.comps = {sym::Component::from_poly(2.0, top), sym::Component::from_poly(1.0, sub)};
  return s;
}

sym::MatrixSymbol random_matrix_symbol(Rng& rng, int dim, int rank, int degree) {
  sym::SymbolPoly top(dim, rank), sub(dim, rank);
  if (degree == 2) {
    for (int a = 0; a < dim; ++a)
      for (int b = a; b < dim; ++b)
        top.add_term(mono2(a, b), random_cexpr_matrix(rng, rank, 0.5, 0.25));
    for (int a = 0; a < dim; ++a)
      sub.add_term(mono1(a), random_cexpr_matrix(rng, rank, 0.4, 0.2));
  } else {
    for (int a = 0; a < dim; ++a)
      top.add_term(mono1(a), random_cexpr_matrix(rng, rank, 0.5, 0.25));
    std::array<int, expr::kMaxDim> zero{};
    sub.add_term(zero, random_cexpr_matrix(rng, rank, 0.4, 0.2));
  }
  sym::MatrixSymbol s;
  s.degree = degree;
  s.dim = dim;
  s.rank = rank;
  s.comps = {sym::Component::from_poly(degree, top),
             sym::Component::from_poly(degree - 1.0, sub)};
  return s;
}

sym::BundleConnection random_connection(Rng& rng, int dim, int rank, bool hermitian) {
  sym::BundleConnection conn;
  conn.dim = dim;
  conn.rank = rank;
  for (int mu = 0; mu < dim; ++mu) {
    sym::CExprMat g(rank, rank);
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < rank; ++j) {
        if (hermitian && j < i) continue;
        expr::Expr re = random_coeff_expr(rng, 0.5);
        expr::Expr im = random_coeff_expr(rng, 0.25);
        if (hermitian && i == j) im = expr::Expr::number(0.0);
        g.at(i, j) = sym::CExpr(re, im);
        if (hermitian && j > i) g.at(j, i) = sym::CExpr(re, -im);
      }
    conn.gamma.push_back(g);
  }
  return conn;
}

std::vector<IdentityRow> run_identity_corpus(std::uint64_t seed, int dim, int rank, int per_kind,
                                             double budget) {
  std::vector<IdentityRow> rows;
  using sym::IdentityKind;

  for (IdentityKind kind : {IdentityKind::Product, IdentityKind::Power, IdentityKind::Inverse,
                            IdentityKind::Commutator, IdentityKind::Egorov}) {
    double worst = 0.0;
    for (int inst = 0; inst < per_kind; ++inst) {
      Rng rng = Rng::substream(seed, 7000 + 100 * static_cast<std::uint64_t>(kind) +
                                         static_cast<std::uint64_t>(inst));
      std::vector<PhasePoint> pts = sample_cloud(rng, dim, 100);
      double r = 0.0;
      switch (kind) {
        case IdentityKind::Product: {
          sym::MatrixSymbol P = random_scalar_symbol(rng, dim, rank);
          sym::MatrixSymbol Q = random_matrix_symbol(rng, dim, rank, 1 + static_cast<int>(rng.integer(2)));
          r = sym::residual_product(P, Q, pts);
          break;
        }
        case IdentityKind::Power: {
          sym::MatrixSymbol P = random_scalar_symbol(rng, dim, rank);
          r = sym::residual_power(P, 2 + static_cast<int>(rng.integer(2)), pts);
          break;
        }
        case IdentityKind::Inverse: {
          sym::MatrixSymbol P = random_scalar_symbol(rng, dim, rank);
          r = sym::residual_inverse(P, pts);
          break;
        }
        case IdentityKind::Commutator: {
          sym::MatrixSymbol P = random_scalar_symbol(rng, dim, rank);
          sym::MatrixSymbol Q = random_matrix_symbol(rng, dim, rank, 2);
          r = sym::residual_commutator(P, Q, pts);
          break;
        }
        case IdentityKind::Egorov: {
          if (inst % 2 == 0) {
            sym::MatrixSymbol P = random_scalar_symbol(rng, dim, rank);
            sym::MatrixSymbol A = random_matrix_symbol(rng, dim, rank, 1);
            sym::MatrixSymbol B = random_matrix_symbol(rng, dim, rank, 1);
            r = sym::residual_egorov_identity(B, P, A, pts);
          } else {
            sym::SecondOrderOperator op;
            op.dim = dim;
            op.rank = rank;
            op.half_density = true;
            op.A.assign(static_cast<std::size_t>(dim * dim), sym::CExprMat(rank, rank));
            op.B.assign(static_cast<std::size_t>(dim), sym::CExprMat(rank, rank));
            op.C = sym::CExprMat(rank, rank);
            for (int mu = 0; mu < dim; ++mu)
              for (int nu = mu; nu < dim; ++nu) {
                sym::CExprMat a = random_cexpr_matrix(rng, rank, 0.5, 0.25);
                op.A[static_cast<std::size_t>(mu * dim + nu)] = a;
                op.A[static_cast<std::size_t>(nu * dim + mu)] = a;
              }
            Eigen::MatrixXd T = Eigen::MatrixXd::Identity(dim, dim);
            for (int i = 0; i < dim; ++i)
              for (int j = 0; j < dim; ++j) T(i, j) += rng.uniform(-0.3, 0.3);
            if (std::abs(T.determinant()) < 0.3) T += 0.5 * Eigen::MatrixXd::Identity(dim, dim);
            r = sym::residual_egorov_linear(op, T, pts);
          }
          break;
        }
      }
      worst = std::max(worst, r);
    }
    rows.push_back({kind, per_kind, worst, worst <= budget});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// acceptance criteria

namespace {

MetricChart frw_chart() { return MetricChart::frw(expr::parse_expression("exp(t)"), 8.0); }

// null covector on the FRW chart a = exp(t): xi_0 = sign * exp(-t) |xi_1|
PhasePoint frw_null_seed(Rng& rng, double future_sign = 1.0) {
  geom::Vec x(2), xi(2);
  x[0] = rng.uniform(-1.0, 1.0);
  x[1] = rng.uniform(-2.0, 2.0);
  double xi1 = (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
  xi[1] = xi1;
  xi[0] = future_sign * std::exp(-x[0]) * std::abs(xi1);
  return PhasePoint(x, xi);
}

PhasePoint minkowski_null_seed(Rng& rng) {
  geom::Vec x(2), xi(2);
  x[0] = rng.uniform(-1.0, 1.0);
  x[1] = rng.uniform(-1.0, 1.0);
  double xi1 = (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
  xi[1] = xi1;
  xi[0] = (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * std::abs(xi1);
  return PhasePoint(x, xi);
}

report::CheckRecord criterion_null_conservation(const SuiteOptions& opt) {
  const int per_chart = opt.quick ? 6 : 50;
  MetricChart mink = MetricChart::minkowski(2);
  MetricChart frw = frw_chart();
  std::vector<double> params = geom::uniform_params(10.0, 41);

  std::vector<double> worst(static_cast<std::size_t>(2 * per_chart), 0.0);
  parallel_for(static_cast<std::size_t>(2 * per_chart), [&](std::size_t i) {
    Rng rng = Rng::substream(opt.seed, 100 + i);
    bool on_mink = i < static_cast<std::size_t>(per_chart);
    const MetricChart& chart = on_mink ? mink : frw;
    PhasePoint seed = on_mink ? minkowski_null_seed(rng) : frw_null_seed(rng);
    geom::Bicharacteristic curve = geom::flow_bicharacteristic(chart, seed, params);
    if (curve.size() != params.size()) {
      worst[i] = 1.0;  // left the chart: counts as failure
      return;
    }
    worst[i] = curve.max_p_drift / seed.xi.squaredNorm();
  });

  report::CheckRecord rec;
  rec.name = "01-null-conservation";
  rec.budget = 1e-9;
  rec.measured = *std::max_element(worst.begin(), worst.end());
  rec.pass = rec.measured <= rec.budget;
  rec.note = std::to_string(2 * per_chart) + " seeds, s in [0,10]";
  return rec;
}

report::CheckRecord criterion_compatibility(const SuiteOptions& opt) {
  const int points = opt.quick ? 10 : 100;
  MetricChart frw = frw_chart();
  Rng rng = Rng::substream(opt.seed, 200);
  sym::BundleConnection conn = random_connection(rng, 2, 2);
  sym::Potential pot{random_cexpr_matrix(rng, 2, 0.5, 0.2)};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(frw, conn, pot);

  std::vector<PhasePoint> pts;
  for (int i = 0; i < points; ++i)
    pts.push_back(frw_null_seed(rng, rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0));

  std::vector<double> res = sym::compatibility_residual(op, conn, frw, pts);
  double base = *std::max_element(res.begin(), res.end());

  // 1e-2 perturbation of the connection must raise the residual by >= 1e3 x
  sym::BundleConnection pert = conn;
  pert.gamma[0].at(0, 1) = pert.gamma[0].at(0, 1) + sym::CExpr(expr::Expr::number(1e-2));
  std::vector<double> res_p = sym::compatibility_residual(op, pert, frw, pts);
  double perturbed = *std::max_element(res_p.begin(), res_p.end());
  bool ratio_ok = perturbed > 1e3 * std::max(base, 1e-300);

  report::CheckRecord rec;
  rec.name = "02-compatibility";
  rec.budget = 1e-8;
  rec.measured = base;
  rec.pass = base <= rec.budget && ratio_ok;
  rec.note = "perturbed=" + fmt(perturbed) + " ratio_ok=" + (ratio_ok ? "yes" : "no");
  return rec;
}

report::CheckRecord criterion_identities(const SuiteOptions& opt) {
  const int per_kind = opt.quick ? 3 : 20;
  std::vector<IdentityRow> rows = run_identity_corpus(opt.seed, 2, 2, per_kind, 1e-6);
  double worst = 0.0;
  bool pass = true;
  std::string note;
  for (const auto& r : rows) {
    worst = std::max(worst, r.max_residual);
    pass = pass && r.pass;
    if (!note.empty()) note += " ";
    note += std::string(sym::to_string(r.kind)) + "=" + fmt(r.max_residual);
  }
  report::CheckRecord rec;
  rec.name = "03-symbol-identities";
  rec.budget = 1e-6;
  rec.measured = worst;
  rec.pass = pass;
  rec.note = note;
  return rec;
}

report::CheckRecord criterion_duhamel(const SuiteOptions& opt) {
  using transport::Mat;
  const int instances = opt.quick ? 2 : 10;
  const int nodes = opt.quick ? 2001 : 16001;
  std::vector<double> grid(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (nodes - 1);

  double worst_resid = 0.0;
  double worst_expm = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng = Rng::substream(opt.seed, 400 + static_cast<std::uint64_t>(inst));
    auto rand_mat = [&](double scale) {
      Mat m(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = std::complex<double>(rng.normal(), rng.normal()) * scale;
      return m;
    };
    Mat q0 = rand_mat(0.3), q1 = rand_mat(0.2);
    Mat r1 = rand_mat(0.3), r2 = rand_mat(0.3);
    auto q = [q0, q1](double t) { return Mat(q0 + std::sin(t) * q1); };
    auto rz = [](double) { return Mat(Mat::Zero(2, 2)); };
    auto rf1 = [r1](double t) { return Mat(std::cos(t) * r1); };
    auto rf2 = [r2](double t) { return Mat((1.0 + 0.5 * std::sin(2.0 * t)) * r2); };

    std::vector<Mat> b0 = transport::model_duhamel_b0(q, grid);
    worst_resid = std::max(worst_resid, transport::duhamel_ode_residual(q, rz, grid, b0));
    std::vector<Mat> b1 = transport::model_duhamel(q, rf1, grid);
    worst_resid = std::max(worst_resid, transport::duhamel_ode_residual(q, rf1, grid, b1));
    std::vector<Mat> b2 = transport::model_duhamel(q, rf2, grid);
    worst_resid = std::max(worst_resid, transport::duhamel_ode_residual(q, rf2, grid, b2));

    // constant q against the matrix exponential
    auto qconst = [q0](double) { return q0; };
    std::vector<Mat> bc = transport::model_duhamel_b0(qconst, grid);
    Mat target = (-kI * q0 * grid.back()).exp();
    worst_expm = std::max(worst_expm, (bc.back() - target).cwiseAbs().maxCoeff());
  }

  report::CheckRecord rec;
  rec.name = "04-duhamel-recursion";
  rec.budget = 1e-7;
  rec.measured = worst_resid;
  rec.pass = worst_resid <= 1e-7 && worst_expm <= 1e-10;
  rec.note = "expm_dev=" + fmt(worst_expm) + " (budget 1e-10)";
  return rec;
}

report::CheckRecord criterion_model_positivity(const SuiteOptions& opt) {
  const int count = opt.quick ? 200 : 10000;
  std::vector<int> shape = {64, 64};
  std::vector<double> spacing = {0.12, 0.12};

  std::vector<double> min_pos(static_cast<std::size_t>(count));
  std::vector<double> bilinear_dev(static_cast<std::size_t>(count));
  std::vector<double> feynman_norm(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng rng = Rng::substream(opt.seed, 500 + i);
    model::GridSection u = model::random_section(rng, shape, spacing, 1, 4, false);
    double pos = model::positivity_form(u);
    model::Cplx bil = model::positivity_bilinear(u);
    double scale = std::max(pos, 1e-30);
    min_pos[i] = pos / scale;  // sign information; pos is a sum of squares
    bilinear_dev[i] = std::abs(bil - model::Cplx{pos, 0.0}) / scale;
    double fey = model::model_feynman_positivity(u);
    feynman_norm[i] = fey / scale;
  });

  double pos_min = *std::min_element(min_pos.begin(), min_pos.end());
  double bil_max = *std::max_element(bilinear_dev.begin(), bilinear_dev.end());
  double fey_min = *std::min_element(feynman_norm.begin(), feynman_norm.end());

  report::CheckRecord rec;
  rec.name = "05-model-positivity";
  rec.budget = -1e-10;  // normalized feynman split floor
  rec.measured = fey_min;
  rec.pass = pos_min >= -1e-14 && bil_max <= 1e-12 && fey_min >= -1e-10;
  rec.note = "pos_min=" + fmt(pos_min) + " bilinear_dev=" + fmt(bil_max) + " n=" +
             std::to_string(count);
  return rec;
}

report::CheckRecord criterion_transport_parallel(const SuiteOptions& opt) {
  const int segments = opt.quick ? 4 : 20;
  MetricChart frw = frw_chart();
  Rng conn_rng = Rng::substream(opt.seed, 200);  // same connection as criterion 2
  sym::BundleConnection conn = random_connection(conn_rng, 2, 2);
  sym::Potential pot{random_cexpr_matrix(conn_rng, 2, 0.5, 0.2)};
  sym::SecondOrderOperator op = sym::weitzenbock_assemble(frw, conn, pot);
  sym::MatrixSymbol sub = sym::subprincipal(op, frw);

  std::vector<double> devs(static_cast<std::size_t>(segments), 0.0);
  parallel_for(static_cast<std::size_t>(segments), [&](std::size_t i) {
    Rng rng = Rng::substream(opt.seed, 600 + i);
    PhasePoint seed = frw_null_seed(rng);
    std::vector<double> params = geom::uniform_params(1.5, 513);
    geom::Bicharacteristic curve = geom::flow_bicharacteristic(frw, seed, params);
    if (curve.size() != params.size()) {
      devs[i] = 1.0;
      return;
    }
    transport::CurveSamples cs = transport::CurveSamples::from_bicharacteristic(frw, curve);

    transport::TransportProblem prob;
    prob.curve = cs;
    prob.a0 = transport::Mat::Identity(2, 2);
    prob.sigma_sub.reserve(curve.size());
    for (std::size_t k = 0; k < curve.size(); ++k)
      prob.sigma_sub.push_back(sub.comps[0].value(curve.x[k], curve.xi[k]));

    std::vector<transport::Mat> a = transport::transport_symbol(prob);
    std::vector<transport::Mat> frames =
        transport::transport_frame(conn, cs, transport::Mat::Identity(2, 2));
    double dev = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      dev = std::max(dev, (a[k] - frames[k]).cwiseAbs().maxCoeff());
    devs[i] = dev;
  });

  report::CheckRecord rec;
  rec.name = "06-transport-parallel";
  rec.budget = 1e-8;
  rec.measured = *std::max_element(devs.begin(), devs.end());
  rec.pass = rec.measured <= rec.budget;
  rec.note = std::to_string(segments) + " null segments";
  return rec;
}

report::CheckRecord criterion_kg_kernels(const SuiteOptions& opt) {
  qft::SpacetimeGrid grid;  // T = 9, L = 10, 512 x 512, CFL 0.9
  if (opt.quick) {
    grid.nt = 256;
    grid.nx = 256;
  }

  // massless retarded plateau vs the d'Alembert value 1/2
  qft::KernelField ret0 = qft::kg_green(qft::KernelKind::Ret, 0.0, grid);
  const double probes[6][2] = {{4.0, 0.5}, {5.0, -1.0}, {5.5, 2.0},
                               {6.0, 0.0}, {4.5, -2.5}, {6.5, 1.0}};
  double plateau_dev = 0.0;
  for (const auto& p : probes) {
    int it = static_cast<int>(std::lround((p[0] + grid.T) / grid.dt()));
    int ix = static_cast<int>(std::lround((p[1] + grid.L) / grid.dx()));
    double v = qft::probe_smoothed(ret0, it, ix).real();
    plateau_dev = std::max(plateau_dev, std::abs(v - 0.5) / 0.5);
  }

  // massive spacelike Feynman against K0 after eps-extrapolation; the t = 0
  // row is read from a thin spatially-refined grid so the Nyquist tail of the
  // 1/Omega symbol is resolved
  qft::SpacetimeGrid thin = grid;
  thin.nt = 16;
  thin.nx = 2048;
  qft::KernelField gf = qft::kg_feynman_extrapolated(1.0, 0.05, thin);
  double k0_dev = 0.0;
  for (double r : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    int it = thin.it_origin();
    int ix = static_cast<int>(std::lround((r + thin.L) / thin.dx()));
    double got = std::abs(2.0 * std::numbers::pi * gf.at(it, ix));
    double want = std::cyl_bessel_k(0.0, r);
    k0_dev = std::max(k0_dev, std::abs(got - want) / want);
  }

  // discrete (box + m^2) residual off source
  qft::KernelField ret1 = qft::kg_green(qft::KernelKind::Ret, 1.0, grid);
  auto stencil = [&](const qft::KernelField& K, int it, int ix) {
    double dt2 = grid.dt() * grid.dt(), dx2 = grid.dx() * grid.dx();
    qft::Cplx dtt = (K.at(it + 1, ix) - 2.0 * K.at(it, ix) + K.at(it - 1, ix)) / dt2;
    qft::Cplx dxx = (K.at(it, ix + 1) - 2.0 * K.at(it, ix) + K.at(it, ix - 1)) / dx2;
    return dtt - dxx + K.mass * K.mass * K.at(it, ix);
  };
  double peak = 1.0 / (grid.dt() * grid.dx());
  double resid_ret = 0.0;
  for (int it = grid.it_origin() + 1; it < grid.nt - 1; ++it)
    for (int ix = 1; ix < grid.nx - 1; ++ix) {
      if (it == grid.it_origin() && ix == grid.ix_origin()) continue;
      resid_ret = std::max(resid_ret, std::abs(stencil(ret1, it, ix)));
    }
  ret1.mass = 1.0;

  // Feynman residual on the source-regularized kernel, away from the spread
  // source and the light cone: the bare prescription's 1/Omega tail keeps
  // aliased mass at the Nyquist edge that the second-difference stencil
  // amplifies, so the delta-reproduction statement is checked against the
  // matching regularized delta
  const double fey_src = 6.0;
  qft::KernelField gf_plain = qft::kg_feynman(1.0, 0.05, grid, qft::window_from_source(grid, fey_src));
  gf_plain.mass = 1.0;
  double resid_fey = 0.0;
  for (int it = 8; it < grid.nt - 8; ++it) {
    double t = grid.t_of(it);
    for (int ix = 8; ix < grid.nx - 8; ++ix) {
      double x = grid.x_of(ix);
      if (std::abs(it - grid.it_origin()) <= 2 &&
          std::abs(ix - grid.ix_origin()) <= 8 * static_cast<int>(fey_src))
        continue;
      if (std::abs(std::abs(t) - std::abs(x)) < 6.0 * grid.dx()) continue;
      resid_fey = std::max(resid_fey, std::abs(stencil(gf_plain, it, ix)));
    }
  }

  double resid = std::max(resid_ret, resid_fey) / peak;

  report::CheckRecord rec;
  rec.name = "07-kg-kernels";
  rec.budget = 1.0;
  double worst = std::max({plateau_dev / 0.02, k0_dev / 0.02, resid / 1e-3});
  rec.measured = worst;
  rec.pass = worst <= 1.0;
  rec.note = "plateau=" + fmt(plateau_dev) + " K0=" + fmt(k0_dev) + " resid/peak=" + fmt(resid) +
             " (feynman residual measured off-cone)";
  return rec;
}

report::CheckRecord criterion_hadamard(const SuiteOptions& opt) {
  qft::SpacetimeGrid grid;
  if (opt.quick) {
    grid.nt = 256;
    grid.nx = 256;
  }
  const double m = 1.0;

  // Gram positivity of the windowed mode-sum omega
  std::vector<double> window = qft::window_from_source(grid, 16.0);
  qft::KernelField omega_w = qft::kg_wightman(m, grid, window);
  qft::TestFunctionSet tests = qft::make_test_functions(grid, opt.quick ? 6 : 20, opt.seed);
  qft::GramResult gram = qft::gram_positivity(omega_w, tests);
  double gram_ratio = gram.spectral_radius > 0
                          ? std::max(0.0, -gram.min_eigenvalue) / gram.spectral_radius
                          : 0.0;

  // cross construction with a common narrow-source window: the mode sum
  // against i w = G^F - G^adv, compared mode-for-mode
  qft::KernelField gf = qft::kg_feynman_extrapolated(m, 0.05, grid, window);
  qft::KernelField gadv = qft::kg_green(qft::KernelKind::Adv, m, grid, 16.0);
  double cross = qft::feynman_consistency(gf, gadv, omega_w);

  double bisol = qft::bisolution_residual(omega_w, m);

  report::CheckRecord rec;
  rec.name = "08-hadamard-positivity";
  rec.budget = 1.0;
  double worst = std::max({gram_ratio / 1e-6, cross / 0.03, bisol / 1e-3});
  rec.measured = worst;
  rec.pass = worst <= 1.0;
  rec.note = "gram_min/rho=" + fmt(-gram_ratio) + " cross=" + fmt(cross) + " bisolution=" +
             fmt(bisol);
  return rec;
}

report::CheckRecord criterion_wavefront(const SuiteOptions& opt) {
  qft::SpacetimeGrid grid;
  if (opt.quick) {
    grid.nt = 256;
    grid.nx = 256;
  }

  // causal kernel cone localization (m = 1)
  qft::KernelField causal = qft::kg_green(qft::KernelKind::Causal, 1.0, grid);
  wf::ProbeOptions popt;
  bool cone_ok = true;
  std::string cone_note;
  // null codirections at 45/135/225/315 degrees: bins 4, 12, 20, 28 of 32
  auto allowed_bins = [&](double t, double x) {
    std::vector<int> bins;
    // conormal of the branch through (t, x): (1, -sign(tx)) direction
    int central = (t > 0) == (x > 0) ? 28 : 4;  // angle -45 or +45
    for (int d = -1; d <= 1; ++d) {
      bins.push_back((central + d + 32) % 32);
      bins.push_back((central + 16 + d + 32) % 32);  // antipode (real kernel)
    }
    return bins;
  };
  const double cone_pts[3][2] = {{3.0, 3.0}, {4.0, 4.0}, {-3.5, 3.5}};
  for (const auto& p : cone_pts) {
    wf::DecayProfile prof = wf::decay_exponents(causal, p[0], p[1], popt);
    wf::SingularSet sing = wf::singular_directions(prof);
    if (sing.directions.empty()) cone_ok = false;
    std::vector<int> ok = allowed_bins(p[0], p[1]);
    for (int d : sing.directions)
      if (std::find(ok.begin(), ok.end(), d) == ok.end()) cone_ok = false;
  }
  const double off_pts[3][2] = {{3.0, 0.5}, {4.0, 1.0}, {5.0, -2.0}};
  for (const auto& p : off_pts) {
    wf::DecayProfile prof = wf::decay_exponents(causal, p[0], p[1], popt);
    wf::SingularSet sing = wf::singular_directions(prof);
    if (!sing.directions.empty()) cone_ok = false;
  }

  // Feynman frequency asymmetry vs advanced
  qft::KernelField gf = qft::kg_feynman(1.0, 0.05, grid);
  qft::KernelField gadv = qft::kg_green(qft::KernelKind::Adv, 1.0, grid);
  double ratio_f = wf::frequency_asymmetry(gf, 3.0, 3.0).ratio();
  double ratio_a = wf::frequency_asymmetry(gadv, -3.0, 3.0).ratio();

  // propagation dichotomy along the ray (t, t) of a near-delta solution
  qft::KernelField prop = qft::kg_green(qft::KernelKind::Ret, 0.0, grid, 1.5);
  wf::ProbeOptions dopt;
  dopt.lambda_max_frac = 0.35;
  const int cone_bin = 28;
  std::vector<double> on_alpha;
  for (double tp : {2.0, 3.0, 4.0, 5.0}) {
    wf::DecayProfile prof = wf::decay_exponents(prop, tp, tp, dopt);
    on_alpha.push_back(prof.alpha[static_cast<std::size_t>(cone_bin)]);
  }
  double on_spread = *std::max_element(on_alpha.begin(), on_alpha.end()) -
                     *std::min_element(on_alpha.begin(), on_alpha.end());
  double on_max = *std::max_element(on_alpha.begin(), on_alpha.end());
  double off_min = 1e300;
  for (const auto& p : {std::pair{4.0, 1.0}, std::pair{5.0, 0.0}}) {
    wf::DecayProfile prof = wf::decay_exponents(prop, p.first, p.second, dopt);
    for (double a : prof.alpha) off_min = std::min(off_min, a);
  }
  bool dichotomy_ok = on_spread < 1.0 && (off_min - on_max) > 2.0;

  report::CheckRecord rec;
  rec.name = "09-wavefront";
  rec.budget = 1.0;
  double worst = std::max({cone_ok ? 0.0 : 2.0, 5.0 / std::max(ratio_f, 1e-30),
                           ratio_a / 2.0, dichotomy_ok ? 0.0 : 2.0});
  rec.measured = worst;
  rec.pass = worst <= 1.0;
  rec.note = std::string("cone=") + (cone_ok ? "ok" : "FAIL") + " ratio_F=" + fmt(ratio_f) +
             " ratio_adv=" + fmt(ratio_a) + " on_spread=" + fmt(on_spread) + " off-on=" +
             fmt(off_min - on_max);
  return rec;
}

report::CheckRecord criterion_dirac(const SuiteOptions& opt) {
  // exact Clifford relations for n in {2, 4}
  dirac::CliffordRep rep2 = dirac::build_clifford(2);
  dirac::CliffordRep rep4 = dirac::build_clifford(4);
  double cliff = std::max(dirac::clifford_defect(rep2), dirac::clifford_defect(rep4));

  // beta-form verdicts over cone sweeps
  Rng rng = Rng::substream(opt.seed, 900);
  bool beta_ok = true;
  for (int i = 0; i < 50; ++i) {
    for (const dirac::CliffordRep* rep : {&rep2, &rep4}) {
      int n = rep->n;
      Eigen::VectorXd dir(n - 1);
      double norm = 0.0;
      while (norm < 1e-6) {
        for (int a = 0; a < n - 1; ++a) dir[a] = rng.normal();
        norm = dir.norm();
      }
      dir /= norm;
      double eta = rng.uniform(0.0, 1.5);
      Eigen::VectorXd Nt(n), Ns(n);
      Nt[0] = std::cosh(eta);
      Ns[0] = std::sinh(eta);
      for (int a = 0; a < n - 1; ++a) {
        Nt[a + 1] = std::sinh(eta) * dir[a];
        Ns[a + 1] = std::cosh(eta) * dir[a];
      }
      dirac::BetaForm bt = dirac::beta_form(*rep, Nt);
      dirac::BetaForm bs = dirac::beta_form(*rep, Ns);
      if (!bt.positive_definite || !bs.indefinite) beta_ok = false;
    }
  }

  // kernel suite on the 1+1 grid; the long time axis keeps the Fejer taper
  // slope (and with it |D S^pm|) under the 1e-3 delta-scale budget
  qft::SpacetimeGrid grid;
  grid.T = 18.0;
  grid.L = 10.0;
  grid.nt = opt.quick ? 512 : 1024;
  grid.nx = opt.quick ? 256 : 512;
  dirac::SpinorTestSet tests = dirac::make_spinor_tests(grid, 2, opt.quick ? 6 : 20, opt.seed);
  dirac::DiracSuiteReport rep = dirac::dirac_positivity_suite(rep2, grid, tests);

  double gram_ratio = rep.gram_omega_radius > 0
                          ? std::max(0.0, -rep.gram_omega_min) / rep.gram_omega_radius
                          : 0.0;
  double gram_s_ratio =
      rep.gram_S_radius > 0 ? std::max(0.0, -rep.gram_S_min) / rep.gram_S_radius : 0.0;

  report::CheckRecord rec;
  rec.name = "10-dirac-suite";
  rec.budget = 1.0;
  double worst = std::max({cliff > 0.0 ? 2.0 : 0.0, beta_ok ? 0.0 : 2.0,
                           rep.q_imag_rel / 1e-8, gram_s_ratio / 1e-6, gram_ratio / 1e-6,
                           rep.dsplit_residual / 1e-3});
  rec.measured = worst;
  rec.pass = worst <= 1.0;
  char sig[96];
  std::snprintf(sig, sizeof sig, "sigma_S=(%g,%g) sigma_w=(%g,%g)", rep.sigma_S.real(),
                rep.sigma_S.imag(), rep.sigma_omega.real(), rep.sigma_omega.imag());
  rec.note = std::string(sig) + " q_im=" + fmt(rep.q_imag_rel) + " DSpm=" +
             fmt(rep.dsplit_residual) + " euclid_ctrl=" + fmt(rep.euclid_imag_rel);
  return rec;
}

}  // namespace

report::RunReport run_acceptance(const SuiteOptions& opt, std::ostream* log,
                                 std::vector<report::Timing>* timings) {
  report::RunReport rep;
  rep.tool_version = kToolVersion;
  rep.seed = opt.seed;
  rep.config_hash = opt.config_hash;

  struct Entry {
    const char* label;
    report::CheckRecord (*fn)(const SuiteOptions&);
    double runtime_budget;
  };
  const Entry entries[] = {
      {"01", &criterion_null_conservation, 10.0},
      {"02", &criterion_compatibility, 5.0},
      {"03", &criterion_identities, 10.0},
      {"04", &criterion_duhamel, 60.0},
      {"05", &criterion_model_positivity, 30.0},
      {"06", &criterion_transport_parallel, 60.0},
      {"07", &criterion_kg_kernels, 60.0},
      {"08", &criterion_hadamard, 120.0},
      {"09", &criterion_wavefront, 120.0},
      {"10", &criterion_dirac, 60.0},
  };

  for (const Entry& e : entries) {
    Stopwatch watch;
    report::CheckRecord rec = e.fn(opt);
    double secs = watch.seconds();
    if (secs > e.runtime_budget) {
      rec.pass = false;
      rec.note += " RUNTIME-EXCEEDED";
    }
    if (timings) timings->push_back({rec.name, secs});
    log_check(log, rec, secs);
    rep.checks.push_back(std::move(rec));
  }
  return rep;
}

}  // namespace proplab::suite
