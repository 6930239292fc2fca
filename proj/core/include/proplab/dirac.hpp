// Dirac-type operators at desk scale: exact Clifford representations, the
// beta-form positivity, Green kernels S = D G on the 1+1 grid, Pauli-Jordan
// nonnegativity, and the frequency-split Feynman construction.
//
// Normalization: the adjoint-structure matrix B is fixed per representation
// by requiring the timelike beta-form to be positive definite. With this B
// the massless operator D = -i gamma^mu d_mu satisfies <Du|v> = -<u|Dv>
// (i.e. iD is formally selfadjoint); the resulting global phase in the
// pairings is calibrated once on a positive-frequency reference spinor and
// recorded in every report.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "proplab/qft.hpp"
#include "proplab/rng.hpp"

namespace proplab::dirac {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

struct UnsupportedDimension : std::runtime_error {
  explicit UnsupportedDimension(const std::string& w) : std::runtime_error(w) {}
};
struct BandLimitViolation : std::runtime_error {
  explicit BandLimitViolation(const std::string& w) : std::runtime_error(w) {}
};

struct CliffordRep {
  int n = 2;                // spacetime dimension, 2 or 4
  int N = 2;                // spinor rank 2^{n/2}
  std::vector<Mat> gamma;   // gamma^mu with {gamma^mu, gamma^nu} = 2 eta^{mu nu}
  Mat B;                    // <u|v> = (B u)^dagger v

  Mat sigma_d(const Eigen::VectorXd& xi) const;  // gamma^mu xi_mu
};

CliffordRep build_clifford(int n);

// Worst deviation from {gamma^mu, gamma^nu} = 2 eta^{mu nu} (exact reps give 0).
double clifford_defect(const CliffordRep& rep);

struct BetaForm {
  Mat beta;  // hermitized B * (-i gamma^mu g_{mu nu} N^nu)
  Eigen::VectorXd eigenvalues;
  bool positive_definite = false;
  bool negative_definite = false;
  bool indefinite = false;
};

// Beta-form for a tangent vector N on Minkowski signature (-,+,...,+).
BetaForm beta_form(const CliffordRep& rep, const Eigen::VectorXd& N);

// Matrix-valued translation-invariant kernel on the 1+1 grid.
struct SpinorKernel {
  qft::SpacetimeGrid grid;
  int N = 2;
  std::vector<std::vector<Cplx>> comp;  // N*N scalar fields, index i*N+j

  const std::vector<Cplx>& at(int i, int j) const {
    return comp[static_cast<std::size_t>(i * N + j)];
  }
  std::vector<Cplx>& at(int i, int j) { return comp[static_cast<std::size_t>(i * N + j)]; }
  double max_abs() const;
};

enum class DiracKind { Ret, Adv, Causal, Feynman };

// S^kind = D G^kind for the massless operator (D^2 = box exactly); the scalar
// kernels come from the leapfrog construction, the Feynman kind from the
// eps-regularized massless momentum prescription. The discrete D uses
// centered differences contracted with gamma.
SpinorKernel dirac_green(DiracKind kind, const CliffordRep& rep, const qft::SpacetimeGrid& grid,
                         double eps = 0.02);

// Applies the centered-difference D to a kernel in its first slot.
SpinorKernel apply_dirac(const CliffordRep& rep, const SpinorKernel& k);


// Sharp time-frequency projection of the kernel (sign = +1 keeps positive
// frequency bins; zero/Nyquist bins split evenly).
SpinorKernel frequency_split(const SpinorKernel& k, int sign);

// Spinor test functions: per-component bump superpositions carrying a time
// carrier well away from frequency zero (band-limited margin >= 3 bins).
struct SpinorTestSet {
  qft::SpacetimeGrid grid;
  std::uint64_t seed = 0;
  int N = 2;
  std::vector<std::vector<std::vector<Cplx>>> u;  // [test][component][node]
};

SpinorTestSet make_spinor_tests(const qft::SpacetimeGrid& grid, int N, int count,
                                std::uint64_t seed);

// Positive/negative-frequency reference spinor with carrier e^{+i w0 t} /
// e^{-i w0 t}.
std::vector<std::vector<Cplx>> reference_spinor(const qft::SpacetimeGrid& grid, int N,
                                                double w0, int frequency_sign);

// Throws BandLimitViolation when a test carries relative spectral mass above
// `tol` within 3 bins of the time-frequency cutoffs.
void require_band_limited(const qft::SpacetimeGrid& grid,
                          const std::vector<std::vector<Cplx>>& u, double tol = 1e-6);

// <u | K v> with the bundle pairing <a|b> = (B a)^dagger b, summed over the grid.
Cplx pair_with(const CliffordRep& rep, const SpinorKernel& kernel,
               const std::vector<std::vector<Cplx>>& u, const std::vector<std::vector<Cplx>>& v);

struct DiracSuiteReport {
  Cplx sigma_S{1.0, 0.0};       // recorded calibration phase for the S-form
  Cplx sigma_omega{1.0, 0.0};   // recorded phase for the omega_D-form
  double clifford_defect = 0.0;
  double q_imag_rel = 0.0;      // max |Im(sigma q)| / scale over the tests
  double q_min_rel = 0.0;       // min Re(sigma q) / scale
  double gram_S_min = 0.0, gram_S_radius = 0.0;
  double gram_plus_min = 0.0, gram_minus_min = 0.0;
  double split_completeness = 0.0;  // max |(S+ + S-) - S| / max |S|
  double dsplit_residual = 0.0;     // max interior |D S^pm| / peak |D S|
  double gram_omega_min = 0.0, gram_omega_radius = 0.0;
  double euclid_imag_rel = 0.0;     // negative control with the raw pairing
};

DiracSuiteReport dirac_positivity_suite(const CliffordRep& rep, const qft::SpacetimeGrid& grid,
                                        const SpinorTestSet& tests);

}  // namespace proplab::dirac
