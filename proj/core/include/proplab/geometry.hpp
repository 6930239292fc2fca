// Lorentzian chart geometry: metric data, causal classification, the
// Hamiltonian field of p(x,xi) = g^{-1}(xi,xi), bicharacteristic flow and the
// geodesic relations C, C+/-.
//
// Flow convention: the field is taken verbatim as
//   X = (dg^{mu nu}/dx^alpha) xi_mu xi_nu d/dxi_alpha - 2 g^{mu nu} xi_mu d/dx^nu,
// which is the negative of the textbook Hamilton field of g^{-1}(xi,xi); every
// transport equation in this project uses the same orientation.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "proplab/expr.hpp"
#include "proplab/rng.hpp"

namespace proplab::geom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SingularMetric : std::runtime_error {
  explicit SingularMetric(const std::string& w) : std::runtime_error(w) {}
};
struct OutOfChart : std::runtime_error {
  explicit OutOfChart(const std::string& w) : std::runtime_error(w) {}
};
struct StepFailure : std::runtime_error {
  explicit StepFailure(const std::string& w) : std::runtime_error(w) {}
};

struct Interval {
  double lo, hi;
};

// Coordinate chart with symbolic metric components, their exact derivatives,
// and a time orientation covector (default dx^0 future-directed).
class MetricChart {
 public:
  MetricChart(int dim, std::vector<std::vector<expr::Expr>> g,
              std::vector<Interval> box = {},
              std::array<double, expr::kMaxDim> time_orientation = {1, 0, 0, 0});

  static MetricChart minkowski(int dim, double half_width = 100.0);
  // 1+1 FRW-type chart g = diag(-1, a(t)^2) for a given scale factor a(x0).
  static MetricChart frw(const expr::Expr& scale_factor, double half_width = 25.0);

  int dim() const { return dim_; }
  const std::vector<Interval>& box() const { return box_; }
  const std::array<double, expr::kMaxDim>& time_orientation() const { return time_cov_; }

  bool inside(const Vec& x) const;
  void require_inside(const Vec& x) const;

  const expr::Expr& component(int i, int j) const { return g_[idx(i, j)]; }
  const expr::Expr& component_derivative(int i, int j, int alpha) const {
    return dg_[static_cast<std::size_t>(alpha) * g_.size() + idx(i, j)];
  }

  void metric(const Vec& x, Mat& g) const;
  void metric_derivative(const Vec& x, int alpha, Mat& dg) const;

  // Samples the chart box and checks symmetry of construction, signature
  // (-,+,...,+) by eigenvalue count, and |det g| > 1e-12.
  void validate(Rng& rng, int samples = 64) const;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * dim_ + j; }

  int dim_;
  std::vector<expr::Expr> g_;                 // row-major components
  std::vector<expr::Expr> dg_;                // [alpha][i][j]
  std::vector<expr::CompiledExpr> g_fast_;
  std::vector<expr::CompiledExpr> dg_fast_;
  std::vector<Interval> box_;
  std::array<double, expr::kMaxDim> time_cov_;
};

struct PhasePoint {
  Vec x;
  Vec xi;
  PhasePoint() = default;
  PhasePoint(Vec x_, Vec xi_);
};

struct MetricData {
  Mat g, g_inv;
  std::vector<Mat> dg;        // dg/dx^alpha
  std::vector<Mat> dg_inv;    // -g^{-1} (dg/dx^alpha) g^{-1}
  std::vector<Mat> christoffel;  // christoffel[rho](mu, nu) = Gamma^rho_{mu nu}
};

MetricData metric_data(const MetricChart& chart, const Vec& x);

// p(x, xi) = g^{-1}(xi, xi).
double principal_value(const MetricChart& chart, const PhasePoint& pt);

void hamiltonian_field(const MetricChart& chart, const PhasePoint& pt, Vec& xdot, Vec& xidot);

enum class Causal { TimelikeFuture, TimelikePast, NullFuture, NullPast, Spacelike };
const char* to_string(Causal c);

Causal classify_covector(const MetricChart& chart, const PhasePoint& pt,
                         double null_tol = 1e-9);

struct FlowOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  long max_steps = 4000000;
  bool project_null = false;  // optional per-step correction of xi_0 onto p = 0
};

struct Bicharacteristic {
  std::vector<double> s;
  std::vector<Vec> x;
  std::vector<Vec> xi;
  long steps = 0;
  long rejected = 0;
  double max_p_drift = 0.0;  // max |p - p(0)| over accepted samples
  bool exited_chart = false;
  double s_exit = 0.0;       // parameter of the last sample inside the chart

  std::size_t size() const { return s.size(); }
};

// Integrates the flow from pt, producing samples at the requested parameters
// (ascending or descending from 0). Leaves early with exited_chart set when
// the trajectory crosses the box; throws StepFailure if the controller
// underflows.
Bicharacteristic flow_bicharacteristic(const MetricChart& chart, const PhasePoint& pt,
                                       const std::vector<double>& sample_params,
                                       const FlowOptions& opt = {});

// Convenience: uniform samples on [0, s_max] (n >= 2).
std::vector<double> uniform_params(double s_max, int n);

enum class Relation { Diagonal, CPlus, CMinus, Unrelated, Inconclusive };
const char* to_string(Relation r);

struct RelationResult {
  Relation relation = Relation::Unrelated;
  double s_match = 0.0;   // flow parameter from B reaching A (when related)
  double distance = 0.0;  // conic phase-space distance achieved
};

// Tests whether (A, B) lies on the diagonal, in C+ (A = Phi_s(B), s > 0),
// in C- (s < 0), or neither. Conic matching: base points compared directly,
// covectors compared as rays xi/|xi|.
RelationResult relation_test(const MetricChart& chart, const PhasePoint& A,
                             const PhasePoint& B, double tol = 1e-6,
                             double s_max = 20.0);

}  // namespace proplab::geom
