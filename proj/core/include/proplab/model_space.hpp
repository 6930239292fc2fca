// Exact fundamental solutions of the model operator D_1 = -i d/dy^1 on a
// uniform grid: retarded, advanced, causal and frequency-split Feynman
// kernels, plus the positivity form -i F(u* (x) u).
#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "proplab/rng.hpp"

namespace proplab::model {

using Cplx = std::complex<double>;

struct UnsupportedDim : std::runtime_error {
  explicit UnsupportedDim(const std::string& w) : std::runtime_error(w) {}
};

// Complex N-vector values on a uniform grid over a box in R^n; axis 0 is the
// distinguished y^1 direction. Values are stored component-major, axis 0
// slowest within a component.
struct GridSection {
  int n = 2;
  int rank = 1;
  std::vector<int> shape;
  std::vector<double> spacing;
  std::vector<double> origin;
  int margin = 3;
  std::vector<Cplx> v;

  static GridSection zeros(std::vector<int> shape, std::vector<double> spacing, int rank = 1,
                           int margin = 3);

  std::size_t nodes() const;
  std::size_t axis0() const { return static_cast<std::size_t>(shape[0]); }
  std::size_t transverse() const { return nodes() / axis0(); }

  Cplx& at(int comp, std::size_t i0, std::size_t it) {
    return v[static_cast<std::size_t>(comp) * nodes() + i0 * transverse() + it];
  }
  Cplx at(int comp, std::size_t i0, std::size_t it) const {
    return v[static_cast<std::size_t>(comp) * nodes() + i0 * transverse() + it];
  }

  // max |u| on the support margin relative to max |u| overall
  double margin_violation() const;
};

enum class GreenKind { Ret, Adv, Causal, Feynman, AntiFeynman };
const char* to_string(GreenKind k);

// Applies the chosen fundamental solution of D_1. Ret/adv/causal use
// cumulative trapezoid integration along y^1 (exactly satisfying
// causal = ret - adv); the Feynman kinds combine them with sharp discrete
// Fourier half-space projections in the y^2 frequency (n = 2 only; the zero
// and Nyquist bins are split evenly so the two projections sum to the
// identity exactly).
GridSection apply_model_green(GreenKind kind, const GridSection& u);

// -i F(u* (x) u) evaluated as int |int u dt|^2 dy'.
double positivity_form(const GridSection& u);

// Bilinear route -i <u, F u> with matching trapezoid weights (agrees with
// positivity_form to rounding).
Cplx positivity_bilinear(const GridSection& u);

// -i <u, (E^F - F^adv) u> = <v, Pi_+ v> >= 0 up to rounding (n = 2).
double model_feynman_positivity(const GridSection& u);

// Smooth random section: bump superpositions with the required support
// margin; modes in the y^2 direction keep away from frequency zero when
// band_limited is set.
GridSection random_section(Rng& rng, std::vector<int> shape, std::vector<double> spacing,
                           int rank = 1, int margin = 4, bool band_limited = false);

}  // namespace proplab::model
