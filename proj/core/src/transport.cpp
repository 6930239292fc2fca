#include "proplab/transport.hpp"

#include <cmath>

namespace proplab::transport {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

CurveSamples CurveSamples::from_bicharacteristic(const geom::MetricChart& chart,
                                                 const geom::Bicharacteristic& curve) {
  CurveSamples out;
  out.s = curve.s;
  out.x = curve.x;
  out.xdot.reserve(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    geom::MetricData md = geom::metric_data(chart, curve.x[i]);
    out.xdot.push_back(-2.0 * (md.g_inv * curve.xi[i]));
  }
  return out;
}

CurveSamples CurveSamples::from_points(std::vector<double> s, std::vector<Vec> x) {
  if (s.size() != x.size() || s.size() < 3)
    throw GridMismatch("curve needs matching s and x samples (>= 3)");
  CurveSamples out;
  out.s = std::move(s);
  out.x = std::move(x);
  out.xdot.resize(out.s.size());
  const std::size_t n = out.s.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      double h = out.s[1] - out.s[0];
      out.xdot[i] = (out.x[1] - out.x[0]) / h;
    } else if (i == n - 1) {
      double h = out.s[n - 1] - out.s[n - 2];
      out.xdot[i] = (out.x[n - 1] - out.x[n - 2]) / h;
    } else {
      double h = out.s[i + 1] - out.s[i - 1];
      out.xdot[i] = (out.x[i + 1] - out.x[i - 1]) / h;
    }
  }
  return out;
}

void CurveSamples::require_odd() const {
  if (size() < 3 || size() % 2 == 0)
    throw GridMismatch("curve sample count must be odd (>= 3) for RK4 midpoints");
  if (x.size() != size() || xdot.size() != size())
    throw GridMismatch("curve sample arrays disagree in length");
}

namespace {

// generic RK4 over sample pairs for Y' = rhs(i) * Y with rhs given at nodes
std::vector<Mat> rk4_linear(const std::vector<Mat>& coeff, const std::vector<double>& s,
                            const Mat& y0) {
  std::vector<Mat> out;
  out.reserve(s.size() / 2 + 1);
  Mat y = y0;
  out.push_back(y);
  for (std::size_t i = 0; i + 2 < s.size(); i += 2) {
    double h = s[i + 2] - s[i];
    const Mat& m0 = coeff[i];
    const Mat& m1 = coeff[i + 1];
    const Mat& m2 = coeff[i + 2];
    Mat k1 = m0 * y;
    Mat k2 = m1 * (y + 0.5 * h * k1);
    Mat k3 = m1 * (y + 0.5 * h * k2);
    Mat k4 = m2 * (y + h * k3);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(y);
  }
  return out;
}

std::vector<Mat> connection_coefficients(const sym::BundleConnection& conn,
                                         const CurveSamples& curve) {
  std::vector<Mat> coeff;
  coeff.reserve(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    Mat m = Mat::Zero(conn.rank, conn.rank);
    for (int mu = 0; mu < conn.dim; ++mu) m += curve.xdot[i][mu] * conn.eval(mu, curve.x[i]);
    coeff.push_back(-kI * m);
  }
  return coeff;
}

}  // namespace

std::vector<Mat> transport_frame(const sym::BundleConnection& conn, const CurveSamples& curve,
                                 const Mat& frame0) {
  curve.require_odd();
  return rk4_linear(connection_coefficients(conn, curve), curve.s, frame0);
}

std::vector<CVec> parallel_transport(const sym::BundleConnection& conn,
                                     const CurveSamples& curve, const CVec& v0) {
  std::vector<Mat> frames = transport_frame(conn, curve, Mat(v0));
  std::vector<CVec> out;
  out.reserve(frames.size());
  for (auto& f : frames) out.push_back(CVec(f.col(0)));
  return out;
}

double lie_halfdensity(const std::function<Vec(const Vec&)>& X,
                       const std::function<double(const Vec&)>& f, double alpha, const Vec& x) {
  const int n = static_cast<int>(x.size());
  Vec xv = X(x);
  double value = 0.0;
  double div = 0.0;
  for (int mu = 0; mu < n; ++mu) {
    double h = 1e-5 * (1.0 + std::abs(x[mu]));
    Vec xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    value += xv[mu] * (f(xp) - f(xm)) / (2 * h);
    div += (X(xp)[mu] - X(xm)[mu]) / (2 * h);
  }
  return value + alpha * div * f(x);
}

std::vector<Mat> transport_symbol(const TransportProblem& problem) {
  problem.curve.require_odd();
  const std::size_t n = problem.curve.size();
  if (problem.sigma_sub.size() != n)
    throw GridMismatch("sigma_sub samples do not match the curve grid");
  if (!problem.source.empty() && problem.source.size() != n)
    throw GridMismatch("source samples do not match the curve grid");

  const auto& s = problem.curve.s;
  auto rhs = [&](std::size_t i, const Mat& a) {
    Mat v = -kI * (problem.sigma_sub[i] * a);
    if (!problem.source.empty()) v += kI * problem.source[i];
    return v;
  };

  std::vector<Mat> out;
  out.reserve(n / 2 + 1);
  Mat a = problem.a0;
  out.push_back(a);
  for (std::size_t i = 0; i + 2 < n; i += 2) {
    double h = s[i + 2] - s[i];
    Mat k1 = rhs(i, a);
    Mat k2 = rhs(i + 1, a + 0.5 * h * k1);
    Mat k3 = rhs(i + 1, a + 0.5 * h * k2);
    Mat k4 = rhs(i + 2, a + h * k3);
    a = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model transport: D_1 = -i d/dy^1

std::vector<Mat> model_duhamel_b0(const std::function<Mat(double)>& q,
                                  const std::vector<double>& grid) {
  if (grid.size() < 2) throw GridMismatch("duhamel grid needs >= 2 nodes");
  std::vector<Mat> b;
  b.reserve(grid.size());
  Mat y = Mat::Identity(q(grid[0]).rows(), q(grid[0]).cols());
  b.push_back(y);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double h = grid[i + 1] - grid[i];
    double tm = 0.5 * (grid[i] + grid[i + 1]);
    auto rhs = [&](double t, const Mat& v) { return Mat(-kI * (q(t) * v)); };
    Mat k1 = rhs(grid[i], y);
    Mat k2 = rhs(tm, y + 0.5 * h * k1);
    Mat k3 = rhs(tm, y + 0.5 * h * k2);
    Mat k4 = rhs(grid[i + 1], y + h * k3);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    b.push_back(y);
  }
  return b;
}

std::vector<Mat> model_duhamel(const std::function<Mat(double)>& q,
                               const std::function<Mat(double)>& r_k,
                               const std::vector<double>& grid) {
  std::vector<Mat> b0 = model_duhamel_b0(q, grid);
  const int N = static_cast<int>(b0[0].rows());

  std::vector<Mat> integrand;
  integrand.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double scale = b0[i].cwiseAbs().maxCoeff();
    if (std::abs(b0[i].determinant()) < 1e-10 * std::pow(std::max(scale, 1e-30), N))
      throw SingularB0("b0 is singular along the grid");
    integrand.push_back(b0[i].inverse() * r_k(grid[i]));
  }

  std::vector<Mat> out;
  out.reserve(grid.size());
  Mat acc = Mat::Zero(N, N);
  out.push_back(Mat(-kI * (b0[0] * acc)));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double h = grid[i] - grid[i - 1];
    acc += 0.5 * h * (integrand[i - 1] + integrand[i]);
    out.push_back(Mat(-kI * (b0[i] * acc)));
  }
  return out;
}

double duhamel_ode_residual(const std::function<Mat(double)>& q,
                            const std::function<Mat(double)>& r,
                            const std::vector<double>& grid, const std::vector<Mat>& b) {
  if (b.size() != grid.size()) throw GridMismatch("solution length must match the grid");
  if (grid.size() < 5) throw GridMismatch("residual needs >= 5 nodes");
  double h = grid[1] - grid[0];
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
    // 5-point 4th-order first derivative
    Mat db = (-b[i + 2] + 8.0 * b[i + 1] - 8.0 * b[i - 1] + b[i - 2]) / (12.0 * h);
    Mat res = -kI * db + q(grid[i]) * b[i] + r(grid[i]);
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------

CausalSymbol causal_symbol(const geom::MetricChart& chart, const sym::BundleConnection& conn,
                           const geom::PhasePoint& A, const geom::PhasePoint& B, double tol,
                           int samples) {
  geom::RelationResult rel = geom::relation_test(chart, A, B, tol);
  CausalSymbol out;
  out.relation = rel.relation;
  if (rel.relation == geom::Relation::Diagonal) {
    out.u = Mat::Identity(conn.rank, conn.rank);
    return out;
  }
  if (rel.relation != geom::Relation::CPlus && rel.relation != geom::Relation::CMinus)
    throw NotRelated("points are not on a common bicharacteristic");

  out.s_match = rel.s_match;
  int n = samples | 1;  // odd
  std::vector<double> params(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    params[static_cast<std::size_t>(i)] = rel.s_match * i / (n - 1);
  geom::Bicharacteristic curve = geom::flow_bicharacteristic(chart, B, params);
  if (curve.size() != params.size())
    throw NotRelated("connecting bicharacteristic left the chart");
  CurveSamples cs = CurveSamples::from_bicharacteristic(chart, curve);
  std::vector<Mat> frames = transport_frame(conn, cs, Mat::Identity(conn.rank, conn.rank));
  out.u = frames.back();
  return out;
}

}  // namespace proplab::transport
