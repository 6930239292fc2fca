// Continuum validation on 1+1 Minkowski: Klein-Gordon retarded/advanced
// kernels (leapfrog from a discrete delta), the Feynman kernel from the
// momentum-space prescription 1/(k^2 - w^2 + m^2 - i eps), the Wightman mode
// sum, the Hadamard relation omega = -i (G^F - G^adv), Gram positivity and
// bisolution residuals.
//
// Operator convention, fixed project-wide: box = d_t^2 - d_x^2 on signature
// (-,+), and (box + m^2) G = delta.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "proplab/rng.hpp"

namespace proplab::qft {

using Cplx = std::complex<double>;

struct CFLViolation : std::runtime_error {
  explicit CFLViolation(const std::string& w) : std::runtime_error(w) {}
};
struct MassTooSmall : std::runtime_error {
  explicit MassTooSmall(const std::string& w) : std::runtime_error(w) {}
};
struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& w) : std::runtime_error(w) {}
};

// Uniform periodic-layout grid over [-T, T) x [-L, L): node (it, ix) sits at
// t = -T + it dt, x = -L + ix dx with dt = 2T/nt, dx = 2L/nx. nt, nx are
// powers of two; the origin is the node (nt/2, nx/2).
struct SpacetimeGrid {
  double T = 9.0;
  double L = 10.0;
  int nt = 512;
  int nx = 512;

  double dt() const { return 2.0 * T / nt; }
  double dx() const { return 2.0 * L / nx; }
  double t_of(int it) const { return -T + dt() * it; }
  double x_of(int ix) const { return -L + dx() * ix; }
  int it_origin() const { return nt / 2; }
  int ix_origin() const { return nx / 2; }
  std::size_t nodes() const { return static_cast<std::size_t>(nt) * nx; }
  void require_cfl() const {
    if (dt() > 0.9 * dx() + 1e-12) throw CFLViolation("dt/dx exceeds 0.9");
  }
  bool same(const SpacetimeGrid& o) const {
    return T == o.T && L == o.L && nt == o.nt && nx == o.nx;
  }
};

enum class KernelKind { Ret, Adv, Feynman, Wightman, Causal };

// Translation-invariant kernel sampled as K(t, x), interpreted as K(x - y).
struct KernelField {
  SpacetimeGrid grid;
  KernelKind kind = KernelKind::Ret;
  double mass = 1.0;
  double eps = 0.0;
  std::vector<Cplx> v;  // nt * nx, t slow

  Cplx at(int it, int ix) const { return v[static_cast<std::size_t>(it) * grid.nx + ix]; }
  Cplx& at(int it, int ix) { return v[static_cast<std::size_t>(it) * grid.nx + ix]; }
  double max_abs() const;
};

// Leapfrog construction of the retarded/advanced kernel from a discrete delta
// (1/(dt dx) at the origin node); source_width_cells > 0 swaps in a
// normalized narrow-Gaussian spatial profile (used by the propagation
// experiment and the mode-matched comparisons).
KernelField kg_green(KernelKind kind, double m, const SpacetimeGrid& grid,
                     double source_width_cells = 0.0);

// Momentum-space Feynman kernel: exact contour integral in the frequency,
// discrete Fourier transform across the spatial frequencies:
//   G^F(t, x) = (1/(nx dx)) sum_k W(k) e^{i k x} i e^{-i Omega_k |t|} / (2 Omega_k),
//   Omega_k = sqrt(k^2 + m^2 - i eps), Im Omega < 0.
// The optional window W regularizes by a common source profile so the kernel
// can be compared mode-for-mode with source-built leapfrog kernels; empty
// means the bare prescription.
KernelField kg_feynman(double m, double eps, const SpacetimeGrid& grid,
                       const std::vector<double>& window = {});

// Richardson extrapolant in eps: 2 G_{eps/2} - G_eps.
KernelField kg_feynman_extrapolated(double m, double eps, const SpacetimeGrid& grid,
                                    const std::vector<double>& window = {});

// Wightman mode sum omega(t,x) = sum_k W(k) e^{i(kx - w_k t)}/(2 w_k nx dx)
// with w_k = sqrt(k^2 + m^2). The window W is indexed like the DFT
// frequencies; empty means W = 1 (full band).
KernelField kg_wightman(double m, const SpacetimeGrid& grid,
                        const std::vector<double>& window = {});

// Window from a normalized discrete Gaussian source of the given width (in
// cells): the DFT of the profile used by kg_green's Gaussian source.
std::vector<double> window_from_source(const SpacetimeGrid& grid, double width_cells);
// Sharp cutoff window |k| <= kmax.
std::vector<double> window_sharp(const SpacetimeGrid& grid, double kmax);

// max interior |G^F - G^adv - i omega| / max interior |omega|; the interior
// stays margin_cells from the boundary, cone_cells from the light cone, and
// |t| >= t_min.
double feynman_consistency(const KernelField& gf, const KernelField& gadv,
                           const KernelField& omega, int margin_cells = 12,
                           int cone_cells = 8, double t_min = 0.5);

// Smooth compactly supported complex test functions on the grid, supported in
// the central region so that periodic convolutions see no wrap-around.
struct TestFunctionSet {
  SpacetimeGrid grid;
  std::uint64_t seed = 0;
  int margin_cells = 8;
  std::vector<std::vector<Cplx>> u;
};

TestFunctionSet make_test_functions(const SpacetimeGrid& grid, int count, std::uint64_t seed);

struct GramResult {
  double min_eigenvalue = 0.0;
  double spectral_radius = 0.0;
  bool hermitian_defect_ok = true;
};

// Gram matrix M_ab = sum_{x,y} conj(u_a)(x) K(x-y) u_b(y) (dt dx)^2 via FFT
// convolution; returns extremal eigenvalues of the hermitized Gram.
GramResult gram_positivity(const KernelField& kernel, const TestFunctionSet& tests);

// Single sesquilinear evaluation K(u* (x) u) (the a = b Gram entry).
Cplx pair_with(const KernelField& kernel, const std::vector<Cplx>& u);

// Relative defect of the 5-point discrete (box + m^2) applied to the kernel
// on the interior: max |residual| / max(|d_t^2 K| + |d_x^2 K| + m^2 |K|).
double bisolution_residual(const KernelField& omega, double m, int margin_cells = 8);

// Convolution K * u on the grid (periodic, FFT), scaled by dt dx.
std::vector<Cplx> convolve(const KernelField& kernel, const std::vector<Cplx>& u);

// Kernel value read through a 3x3 binomial average: suppresses the standing
// near-Nyquist ringing of delta-source kernels at interior probe points.
Cplx probe_smoothed(const KernelField& k, int it, int ix);
// x-only variant for rows where the kernel has a |t|-kink (the t = 0 row of
// the momentum-built Feynman kernel).
Cplx probe_smoothed_x(const KernelField& k, int it, int ix);

}  // namespace proplab::qft
