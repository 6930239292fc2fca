// Transport along bicharacteristics: parallel transport, Lie derivatives of
// alpha-densities, the principal-symbol transport ODE a' = i f - i sigma_sub a,
// the model Duhamel recursion for D_1, and the causal propagator's
// endomorphism symbol (parallel transport of the identity).
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "proplab/geometry.hpp"
#include "proplab/symbols.hpp"

namespace proplab::transport {

using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Vec = Eigen::VectorXd;

struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& w) : std::runtime_error(w) {}
};
struct SingularB0 : std::runtime_error {
  explicit SingularB0(const std::string& w) : std::runtime_error(w) {}
};
struct NotRelated : std::runtime_error {
  explicit NotRelated(const std::string& w) : std::runtime_error(w) {}
};

// Uniformly spaced samples with an odd count: RK4 steps span consecutive
// index pairs, the odd indices providing the midpoints. Velocities are exact
// when built from a bicharacteristic, otherwise central differences.
struct CurveSamples {
  std::vector<double> s;
  std::vector<Vec> x;
  std::vector<Vec> xdot;

  static CurveSamples from_bicharacteristic(const geom::MetricChart& chart,
                                            const geom::Bicharacteristic& curve);
  static CurveSamples from_points(std::vector<double> s, std::vector<Vec> x);

  std::size_t size() const { return s.size(); }
  void require_odd() const;
};

// Solves U' = -i Gamma_mu(x(s)) xdot^mu(s) U with U(0) = frame0 by classical
// RK4 over sample pairs; returns U at the even-index samples.
std::vector<Mat> transport_frame(const sym::BundleConnection& conn, const CurveSamples& curve,
                                 const Mat& frame0);

std::vector<CVec> parallel_transport(const sym::BundleConnection& conn,
                                     const CurveSamples& curve, const CVec& v0);

// L_X (f |dx|^alpha) = (X^mu d_mu f + alpha div(X) f) |dx|^alpha; derivatives
// by central differences unless the caller supplies exact fields.
double lie_halfdensity(const std::function<Vec(const Vec&)>& X,
                       const std::function<double(const Vec&)>& f, double alpha, const Vec& x);

struct TransportProblem {
  CurveSamples curve;
  std::vector<Mat> sigma_sub;  // per curve sample
  std::vector<Mat> source;     // f per curve sample; empty means zero
  Mat a0;
};

// a' = i f - i sigma_sub a along the curve; values at even-index samples.
std::vector<Mat> transport_symbol(const TransportProblem& problem);

// Model transport for D_1: b0' = -i q b0 with b0(0) = Id (RK4), and for k >= 1
// the Duhamel integral b_k = -i b0 int_0^{y1} b0^{-1} r_k dt (trapezoid).
std::vector<Mat> model_duhamel_b0(const std::function<Mat(double)>& q,
                                  const std::vector<double>& grid);
std::vector<Mat> model_duhamel(const std::function<Mat(double)>& q,
                               const std::function<Mat(double)>& r_k,
                               const std::vector<double>& grid);

// || -i b' + q b + r || on the grid interior, b' by 5-point differences.
double duhamel_ode_residual(const std::function<Mat(double)>& q,
                            const std::function<Mat(double)>& r,
                            const std::vector<double>& grid, const std::vector<Mat>& b);

struct CausalSymbol {
  Mat u;                      // parallel transport of the identity from B to A
  double s_match = 0.0;       // connecting flow parameter
  geom::Relation relation = geom::Relation::Diagonal;
  // The scalar prefactor of sigma_G is reported symbolically; the density
  // factor |d_C| is not computed.
  static constexpr const char* prefactor = "(i/2)*sqrt(2*pi*|d_C|)";
};

// Endomorphism symbol of the causal propagator between two points of a common
// null bicharacteristic; throws NotRelated otherwise.
CausalSymbol causal_symbol(const geom::MetricChart& chart, const sym::BundleConnection& conn,
                           const geom::PhasePoint& A, const geom::PhasePoint& B,
                           double tol = 1e-6, int samples = 1024);

}  // namespace proplab::transport
