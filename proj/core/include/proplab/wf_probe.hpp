// Numerical wavefront detection: windowed-Fourier decay exponents along a
// direction grid, binarized singular-direction sets, and the frequency
// asymmetry probe separating Feynman from advanced kernels.
#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "proplab/qft.hpp"

namespace proplab::wf {

using Cplx = std::complex<double>;

struct NyquistViolation : std::runtime_error {
  explicit NyquistViolation(const std::string& w) : std::runtime_error(w) {}
};

struct DecayProfile {
  double t0 = 0.0, x0 = 0.0;
  double sigma = 0.0;                // window width, physical units
  std::vector<double> theta;         // direction angles
  std::vector<double> scales;        // dyadic lambda_k
  std::vector<double> alpha;         // fitted decay exponents per direction
  std::vector<double> r2;            // log-log fit quality per direction
  std::vector<double> amplitude;     // |FT| at the smallest scale (diagnostic)
};

struct ProbeOptions {
  double sigma_cells = 8.0;   // Gaussian window width in grid cells
  int directions = 32;        // angular bins
  int scale_count = 6;        // dyadic lambda ladder
  double lambda_max_frac = 0.75;  // top scale as a fraction of pi/h
};

// |FT(w_sigma u)(lambda theta)| by windowed discrete Fourier sums with a
// Gaussian window centred at (t0, x0); fits |FT| ~ lambda^{-alpha} per
// direction. Throws NyquistViolation when the top scale exceeds pi/h and
// std::invalid_argument when the point sits closer than 4 sigma to the
// boundary.
DecayProfile decay_exponents(const qft::KernelField& field, double t0, double x0,
                             const ProbeOptions& opt = {});

struct SingularSet {
  std::vector<int> directions;        // indices into profile.theta
  std::vector<bool> low_confidence;   // R^2 < 0.9 for the flagged direction
};

// {theta_j : alpha_j < alpha_star}; default threshold 2 for second-order
// kernels.
SingularSet singular_directions(const DecayProfile& profile, double alpha_star = 2.0);

struct FrequencyMass {
  double positive = 0.0;  // windowed-FT mass on the omega > 0 half-plane
  double negative = 0.0;
  double ratio() const {
    double lo = std::min(positive, negative), hi = std::max(positive, negative);
    return lo > 0 ? hi / lo : 1e300;
  }
};

// Windowed 2-D Fourier mass of the field split by time-frequency sign,
// evaluated on a padded patch around (t0, x0).
FrequencyMass frequency_asymmetry(const qft::KernelField& field, double t0, double x0,
                                  double sigma_cells = 8.0);

}  // namespace proplab::wf
