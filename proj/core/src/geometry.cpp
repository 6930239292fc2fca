#include "proplab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace proplab::geom {

MetricChart::MetricChart(int dim, std::vector<std::vector<expr::Expr>> g,
                         std::vector<Interval> box,
                         std::array<double, expr::kMaxDim> time_orientation)
    : dim_(dim), box_(std::move(box)), time_cov_(time_orientation) {
  if (dim < 2 || dim > expr::kMaxDim) throw std::invalid_argument("chart dim must be 2..4");
  if (g.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("metric must be dim x dim");
  if (box_.empty()) box_.assign(static_cast<std::size_t>(dim), Interval{-10.0, 10.0});
  if (box_.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("chart box must have dim intervals");

  g_.resize(static_cast<std::size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i) {
    if (g[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("metric must be dim x dim");
    for (int j = 0; j < dim; ++j) {
      const expr::Expr& gij = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!gij.valid()) throw std::invalid_argument("metric component missing");
      g_[idx(i, j)] = gij;
    }
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (!expr::equal(g_[idx(i, j)], g_[idx(j, i)]))
        throw std::invalid_argument("metric components not symmetric");

  dg_.resize(static_cast<std::size_t>(dim) * g_.size());
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        dg_[static_cast<std::size_t>(a) * g_.size() + idx(i, j)] =
            expr::differentiate(g_[idx(i, j)], a);

  g_fast_.reserve(g_.size());
  for (const auto& e : g_) g_fast_.emplace_back(e);
  dg_fast_.reserve(dg_.size());
  for (const auto& e : dg_) dg_fast_.emplace_back(e);
}

MetricChart MetricChart::minkowski(int dim, double half_width) {
  std::vector<std::vector<expr::Expr>> g(static_cast<std::size_t>(dim),
                                         std::vector<expr::Expr>(static_cast<std::size_t>(dim)));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          expr::Expr::number(i == j ? (i == 0 ? -1.0 : 1.0) : 0.0);
  std::vector<Interval> box(static_cast<std::size_t>(dim), Interval{-half_width, half_width});
  return MetricChart(dim, std::move(g), std::move(box));
}

MetricChart MetricChart::frw(const expr::Expr& scale_factor, double half_width) {
  std::vector<std::vector<expr::Expr>> g(2, std::vector<expr::Expr>(2));
  g[0][0] = expr::Expr::number(-1.0);
  g[0][1] = expr::Expr::number(0.0);
  g[1][0] = expr::Expr::number(0.0);
  g[1][1] = expr::pow(scale_factor, 2);
  std::vector<Interval> box(2, Interval{-half_width, half_width});
  return MetricChart(2, std::move(g), std::move(box));
}

bool MetricChart::inside(const Vec& x) const {
  for (int i = 0; i < dim_; ++i) {
    const Interval& iv = box_[static_cast<std::size_t>(i)];
    if (x[i] < iv.lo || x[i] > iv.hi) return false;
  }
  return true;
}

void MetricChart::require_inside(const Vec& x) const {
  if (!inside(x)) throw OutOfChart("coordinate outside the chart box");
}

void MetricChart::metric(const Vec& x, Mat& g) const {
  g.resize(dim_, dim_);
  std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) g(i, j) = g_fast_[idx(i, j)].eval(xs);
}

void MetricChart::metric_derivative(const Vec& x, int alpha, Mat& dg) const {
  dg.resize(dim_, dim_);
  std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  const std::size_t base = static_cast<std::size_t>(alpha) * g_.size();
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) dg(i, j) = dg_fast_[base + idx(i, j)].eval(xs);
}

void MetricChart::validate(Rng& rng, int samples) const {
  Mat g;
  Vec x(dim_);
  for (int k = 0; k < samples; ++k) {
    for (int i = 0; i < dim_; ++i) {
      const Interval& iv = box_[static_cast<std::size_t>(i)];
      x[i] = rng.uniform(iv.lo, iv.hi);
    }
    metric(x, g);
    double det = g.determinant();
    if (std::abs(det) < 1e-12) throw SingularMetric("|det g| < 1e-12 inside the chart box");
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    int negatives = 0;
    for (int i = 0; i < dim_; ++i)
      if (es.eigenvalues()[i] < 0) ++negatives;
    if (negatives != 1)
      throw SingularMetric("metric signature is not (-,+,...,+) inside the chart box");
  }
}

PhasePoint::PhasePoint(Vec x_, Vec xi_) : x(std::move(x_)), xi(std::move(xi_)) {
  if (xi.norm() < 1e-300)
    throw std::invalid_argument("covector vanishes: not a point of the punctured bundle");
}

MetricData metric_data(const MetricChart& chart, const Vec& x) {
  chart.require_inside(x);
  const int n = chart.dim();
  MetricData out;
  chart.metric(x, out.g);
  double det = out.g.determinant();
  if (std::abs(det) < 1e-12) throw SingularMetric("|det g| < 1e-12");
  out.g_inv = out.g.partialPivLu().solve(Mat::Identity(n, n));

  out.dg.resize(static_cast<std::size_t>(n));
  out.dg_inv.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    chart.metric_derivative(x, a, out.dg[static_cast<std::size_t>(a)]);
    out.dg_inv[static_cast<std::size_t>(a)] =
        -out.g_inv * out.dg[static_cast<std::size_t>(a)] * out.g_inv;
  }

  out.christoffel.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (int rho = 0; rho < n; ++rho)
    for (int mu = 0; mu < n; ++mu)
      for (int nu = 0; nu < n; ++nu) {
        double sum = 0.0;
        for (int sig = 0; sig < n; ++sig)
          sum += out.g_inv(rho, sig) *
                 (out.dg[static_cast<std::size_t>(mu)](sig, nu) +
                  out.dg[static_cast<std::size_t>(nu)](sig, mu) -
                  out.dg[static_cast<std::size_t>(sig)](mu, nu));
        out.christoffel[static_cast<std::size_t>(rho)](mu, nu) = 0.5 * sum;
      }
  return out;
}

double principal_value(const MetricChart& chart, const PhasePoint& pt) {
  MetricData md = metric_data(chart, pt.x);
  return pt.xi.dot(md.g_inv * pt.xi);
}

void hamiltonian_field(const MetricChart& chart, const PhasePoint& pt, Vec& xdot, Vec& xidot) {
  const int n = chart.dim();
  MetricData md = metric_data(chart, pt.x);
  xdot = -2.0 * (md.g_inv * pt.xi);
  xidot.resize(n);
  for (int a = 0; a < n; ++a)
    xidot[a] = pt.xi.dot(md.dg_inv[static_cast<std::size_t>(a)] * pt.xi);
}

const char* to_string(Causal c) {
  switch (c) {
    case Causal::TimelikeFuture: return "timelike-future";
    case Causal::TimelikePast: return "timelike-past";
    case Causal::NullFuture: return "null-future";
    case Causal::NullPast: return "null-past";
    case Causal::Spacelike: return "spacelike";
  }
  return "?";
}

Causal classify_covector(const MetricChart& chart, const PhasePoint& pt, double null_tol) {
  MetricData md = metric_data(chart, pt.x);
  double p = pt.xi.dot(md.g_inv * pt.xi);
  double scale = pt.xi.squaredNorm();
  // orientation: xi is future iff tau(xi^sharp) > 0 for the chart's
  // time-orientation covector tau
  Vec tau(chart.dim());
  for (int i = 0; i < chart.dim(); ++i) tau[i] = chart.time_orientation()[static_cast<std::size_t>(i)];
  double orient = tau.dot(md.g_inv * pt.xi);
  if (std::abs(p) <= null_tol * scale) return orient > 0 ? Causal::NullFuture : Causal::NullPast;
  if (p < 0) return orient > 0 ? Causal::TimelikeFuture : Causal::TimelikePast;
  return Causal::Spacelike;
}

// ---------------------------------------------------------------------------
// Adaptive Cash-Karp RK45 with forced stops at the requested sample
// parameters (no interpolation: every emitted sample is an accepted step).

namespace {

struct RhsEval {
  const MetricChart& chart;
  int n;
  long evals = 0;

  explicit RhsEval(const MetricChart& c) : chart(c), n(c.dim()) {}

  // state y = (x, xi)
  void operator()(const Vec& y, Vec& dy) {
    ++evals;
    PhasePoint pt;
    pt.x = y.head(n);
    pt.xi = y.tail(n);
    chart.require_inside(pt.x);
    Vec xd, xid;
    hamiltonian_field(chart, pt, xd, xid);
    dy.resize(2 * n);
    dy.head(n) = xd;
    dy.tail(n) = xid;
  }
};

constexpr double kCkA[6] = {0.0, 1.0 / 5, 3.0 / 10, 3.0 / 5, 1.0, 7.0 / 8};
constexpr double kCkB[6][5] = {
    {0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0},
    {3.0 / 10, -9.0 / 10, 6.0 / 5, 0, 0},
    {-11.0 / 54, 5.0 / 2, -70.0 / 27, 35.0 / 27, 0},
    {1631.0 / 55296, 175.0 / 512, 575.0 / 13824, 44275.0 / 110592, 253.0 / 4096}};
constexpr double kCk5[6] = {37.0 / 378, 0, 250.0 / 621, 125.0 / 594, 0, 512.0 / 1771};
constexpr double kCk4[6] = {2825.0 / 27648, 0,           18575.0 / 48384,
                            13525.0 / 55296, 277.0 / 14336, 1.0 / 4};

}  // namespace

std::vector<double> uniform_params(double s_max, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = s_max * i / (n - 1);
  return out;
}

Bicharacteristic flow_bicharacteristic(const MetricChart& chart, const PhasePoint& pt,
                                       const std::vector<double>& sample_params,
                                       const FlowOptions& opt) {
  if (sample_params.empty()) throw std::invalid_argument("no sample parameters requested");
  const int n = chart.dim();
  const bool forward = sample_params.back() >= sample_params.front();
  for (std::size_t i = 1; i < sample_params.size(); ++i) {
    if (forward && sample_params[i] < sample_params[i - 1])
      throw std::invalid_argument("sample parameters must be monotone");
    if (!forward && sample_params[i] > sample_params[i - 1])
      throw std::invalid_argument("sample parameters must be monotone");
  }

  RhsEval rhs(chart);
  Bicharacteristic out;
  out.s.reserve(sample_params.size());

  Vec y(2 * n);
  y.head(n) = pt.x;
  y.tail(n) = pt.xi;
  double s = 0.0;

  MetricData md0 = metric_data(chart, pt.x);
  const double p0 = pt.xi.dot(md0.g_inv * pt.xi);

  auto record_drift = [&](const Vec& state) {
    PhasePoint q;
    q.x = state.head(n);
    q.xi = state.tail(n);
    MetricData md = metric_data(chart, q.x);
    double p = q.xi.dot(md.g_inv * q.xi);
    out.max_p_drift = std::max(out.max_p_drift, std::abs(p - p0));
  };

  auto emit = [&](double sv, const Vec& state) {
    out.s.push_back(sv);
    out.x.push_back(state.head(n));
    out.xi.push_back(state.tail(n));
    record_drift(state);
  };

  // optional Newton correction of xi_0 back onto p = 0 (used only when the
  // seed itself is null)
  auto project = [&](Vec& state) {
    if (!opt.project_null || std::abs(p0) > 1e-8 * pt.xi.squaredNorm()) return;
    PhasePoint q;
    q.x = state.head(n);
    q.xi = state.tail(n);
    MetricData md = metric_data(chart, q.x);
    for (int it = 0; it < 3; ++it) {
      double p = q.xi.dot(md.g_inv * q.xi);
      double dp = 2.0 * (md.g_inv.row(0) * q.xi)(0);
      if (std::abs(dp) < 1e-14) break;
      q.xi[0] -= p / dp;
    }
    state.tail(n) = q.xi;
  };

  std::array<Vec, 6> k;
  Vec ytmp, y5(2 * n), y4(2 * n), dy0;

  double dir = forward ? 1.0 : -1.0;
  double h = dir * 1e-3;
  std::size_t target = 0;

  // seed sample at s = 0 if requested
  if (sample_params[0] == 0.0) {
    emit(0.0, y);
    ++target;
  } else if ((forward && sample_params[0] < 0) || (!forward && sample_params[0] > 0)) {
    throw std::invalid_argument("sample parameters must start at or beyond 0 in flow direction");
  }

  while (target < sample_params.size()) {
    double s_goal = sample_params[target];
    if (dir * (s_goal - s) <= 1e-15) {
      emit(s, y);  // duplicate parameter
      ++target;
      continue;
    }
    if (dir * (s + h - s_goal) > 0) h = s_goal - s;

    bool inside_ok = true;
    try {
      rhs(y, dy0);
    } catch (const OutOfChart&) {
      inside_ok = false;
    }
    if (!inside_ok) {
      out.exited_chart = true;
      out.s_exit = s;
      return out;
    }

    // one Cash-Karp attempt
    bool accepted = false;
    while (!accepted) {
      if (out.steps + out.rejected > opt.max_steps)
        throw StepFailure("flow exceeded the step budget");
      bool exited = false;
      k[0] = dy0;
      try {
        for (int stage = 1; stage < 6; ++stage) {
          ytmp = y;
          for (int j = 0; j < stage; ++j)
            if (kCkB[stage][j] != 0.0) ytmp += h * kCkB[stage][j] * k[static_cast<std::size_t>(j)];
          rhs(ytmp, k[static_cast<std::size_t>(stage)]);
        }
      } catch (const OutOfChart&) {
        exited = true;
      }
      (void)kCkA;

      if (!exited) {
        y5 = y;
        y4 = y;
        for (int stage = 0; stage < 6; ++stage) {
          y5 += h * kCk5[stage] * k[static_cast<std::size_t>(stage)];
          y4 += h * kCk4[stage] * k[static_cast<std::size_t>(stage)];
        }
        double err = 0.0;
        for (int i = 0; i < 2 * n; ++i) {
          double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
          err = std::max(err, std::abs(y5[i] - y4[i]) / sc);
        }
        if (err <= 1.0) {
          if (!chart.inside(y5.head(n))) {
            exited = true;
          } else {
            s += h;
            y = y5;
            project(y);
            ++out.steps;
            accepted = true;
            record_drift(y);
            double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
            if (std::abs(h) < 1e-14) throw StepFailure("step size underflow");
            break;
          }
        } else {
          ++out.rejected;
          h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5);
          if (std::abs(h) < 1e-14) throw StepFailure("step size underflow");
          continue;
        }
      }

      if (exited) {
        // shrink toward the boundary; below threshold report the exit
        h *= 0.5;
        ++out.rejected;
        if (std::abs(h) < 1e-12) {
          out.exited_chart = true;
          out.s_exit = s;
          return out;
        }
      }
    }

    if (std::abs(s - s_goal) <= 1e-15 * std::max(1.0, std::abs(s_goal))) {
      emit(s, y);
      ++target;
      h = dir * std::max(std::abs(h), 1e-6);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Diagonal: return "diagonal";
    case Relation::CPlus: return "C+";
    case Relation::CMinus: return "C-";
    case Relation::Unrelated: return "unrelated";
    case Relation::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// conic distance: base points directly, covectors as unit rays
double cone_distance(const Vec& xa, const Vec& xia, const Vec& xb, const Vec& xib) {
  Vec ra = xia / xia.norm();
  Vec rb = xib / xib.norm();
  return (xa - xb).norm() + (ra - rb).norm();
}

}  // namespace

RelationResult relation_test(const MetricChart& chart, const PhasePoint& A,
                             const PhasePoint& B, double tol, double s_max) {
  const double pa = principal_value(chart, A);
  const double pb = principal_value(chart, B);
  if (std::abs(pa) > tol * A.xi.squaredNorm() || std::abs(pb) > tol * B.xi.squaredNorm())
    throw std::invalid_argument("relation_test requires null covectors");

  RelationResult res;
  res.distance = cone_distance(A.x, A.xi, B.x, B.xi);
  if (res.distance < tol) {
    res.relation = Relation::Diagonal;
    return res;
  }

  const int coarse = 600;
  bool exited_before_match = false;

  for (int sign = +1; sign >= -1; sign -= 2) {
    // coarse sweep: parameters run from 0 toward sign*s_max, monotone in the
    // flow direction
    std::vector<double> params(static_cast<std::size_t>(coarse) + 1);
    for (int i = 0; i <= coarse; ++i)
      params[static_cast<std::size_t>(i)] = sign * s_max * i / coarse;
    Bicharacteristic curve = flow_bicharacteristic(chart, B, params);
    if (curve.exited_chart) exited_before_match = true;
    if (curve.size() < 2) continue;

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 1;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      double d = cone_distance(A.x, A.xi, curve.x[i], curve.xi[i]);
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    double s_best = curve.s[best_i];

    // local refinement: contract a parameter window around the minimum;
    // window edges stay strictly on this sweep's side of s = 0
    double lo = curve.s[best_i - 1];
    double hi = curve.s[std::min(best_i + 1, curve.size() - 1)];
    for (int round = 0; round < 12 && std::abs(hi - lo) > 1e-13; ++round) {
      const int fine = 12;
      std::vector<double> fp(static_cast<std::size_t>(fine) + 1);
      for (int i = 0; i <= fine; ++i)
        fp[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / fine;
      Bicharacteristic seg = flow_bicharacteristic(chart, B, fp);
      if (seg.size() != fp.size()) break;  // left chart inside the window
      double wbest = std::numeric_limits<double>::infinity();
      std::size_t wbi = 0;
      for (std::size_t i = 0; i < seg.size(); ++i) {
        double d = cone_distance(A.x, A.xi, seg.x[i], seg.xi[i]);
        if (d < wbest) {
          wbest = d;
          wbi = i;
        }
      }
      best = wbest;
      s_best = seg.s[wbi];
      lo = seg.s[wbi > 0 ? wbi - 1 : 0];
      hi = seg.s[std::min(wbi + 1, seg.size() - 1)];
      if (best < tol * 1e-2) break;
    }

    if (best < tol && sign * s_best > 0) {
      res.relation = sign > 0 ? Relation::CPlus : Relation::CMinus;
      res.s_match = s_best;
      res.distance = best;
      return res;
    }
    res.distance = std::min(res.distance, best);
  }

  res.relation = exited_before_match ? Relation::Inconclusive : Relation::Unrelated;
  return res;
}

}  // namespace proplab::geom
