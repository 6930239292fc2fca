#include "proplab/wf_probe.hpp"

#include <cmath>
#include <numbers>

#include "proplab/fft.hpp"

namespace proplab::wf {

DecayProfile decay_exponents(const qft::KernelField& field, double t0, double x0,
                             const ProbeOptions& opt) {
  const qft::SpacetimeGrid& g = field.grid;
  const double h = std::max(g.dt(), g.dx());
  const double sigma = opt.sigma_cells * h;

  if (t0 - 4 * sigma < -g.T || t0 + 4 * sigma > g.T - g.dt() || x0 - 4 * sigma < -g.L ||
      x0 + 4 * sigma > g.L - g.dx())
    throw std::invalid_argument("probe point closer than 4 sigma to the grid boundary");

  DecayProfile out;
  out.t0 = t0;
  out.x0 = x0;
  out.sigma = sigma;

  const double lambda_max = opt.lambda_max_frac * std::numbers::pi / h;
  if (lambda_max > std::numbers::pi / h + 1e-12)
    throw NyquistViolation("top probe scale exceeds pi/h");
  std::vector<double> scales(static_cast<std::size_t>(opt.scale_count));
  for (int k = 0; k < opt.scale_count; ++k)
    scales[static_cast<std::size_t>(k)] =
        lambda_max / std::pow(2.0, opt.scale_count - 1 - k);
  out.scales = scales;

  for (int d = 0; d < opt.directions; ++d)
    out.theta.push_back(2.0 * std::numbers::pi * d / opt.directions);

  // window support: 5 sigma around the base point
  const int rt = static_cast<int>(std::ceil(5.0 * sigma / g.dt()));
  const int rx = static_cast<int>(std::ceil(5.0 * sigma / g.dx()));
  const int it0 = static_cast<int>(std::lround((t0 + g.T) / g.dt()));
  const int ix0 = static_cast<int>(std::lround((x0 + g.L) / g.dx()));

  for (double th : out.theta) {
    double ct = std::cos(th), cx = std::sin(th);
    std::vector<double> logl, logf;
    double amp0 = 0.0;
    for (double lambda : scales) {
      Cplx acc{0.0, 0.0};
      for (int it = std::max(0, it0 - rt); it <= std::min(g.nt - 1, it0 + rt); ++it) {
        double t = g.t_of(it);
        double wt = (t - t0) / sigma;
        for (int ix = std::max(0, ix0 - rx); ix <= std::min(g.nx - 1, ix0 + rx); ++ix) {
          double x = g.x_of(ix);
          double wx = (x - x0) / sigma;
          double w = std::exp(-0.5 * (wt * wt + wx * wx));
          double phase = -lambda * (ct * (t - t0) + cx * (x - x0));
          acc += w * field.at(it, ix) * Cplx{std::cos(phase), std::sin(phase)};
        }
      }
      acc *= g.dt() * g.dx();
      double mag = std::abs(acc);
      if (mag < 1e-280) mag = 1e-280;
      logl.push_back(std::log(lambda));
      logf.push_back(std::log(mag));
      if (lambda == scales.front()) amp0 = mag;
    }

    // least squares slope of log|F| against log lambda
    double n = static_cast<double>(logl.size());
    double sl = 0, sf = 0, sll = 0, slf = 0;
    for (std::size_t i = 0; i < logl.size(); ++i) {
      sl += logl[i];
      sf += logf[i];
      sll += logl[i] * logl[i];
      slf += logl[i] * logf[i];
    }
    double denom = n * sll - sl * sl;
    double slope = (n * slf - sl * sf) / denom;
    double icept = (sf - slope * sl) / n;
    double ss_res = 0, ss_tot = 0;
    double mean_f = sf / n;
    for (std::size_t i = 0; i < logl.size(); ++i) {
      double fit = icept + slope * logl[i];
      ss_res += (logf[i] - fit) * (logf[i] - fit);
      ss_tot += (logf[i] - mean_f) * (logf[i] - mean_f);
    }
    out.alpha.push_back(-slope);
    out.r2.push_back(ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0);
    out.amplitude.push_back(amp0);
  }
  return out;
}

SingularSet singular_directions(const DecayProfile& profile, double alpha_star) {
  SingularSet out;
  for (std::size_t j = 0; j < profile.alpha.size(); ++j) {
    if (profile.alpha[j] < alpha_star) {
      out.directions.push_back(static_cast<int>(j));
      out.low_confidence.push_back(profile.r2[j] < 0.9);
    }
  }
  return out;
}

FrequencyMass frequency_asymmetry(const qft::KernelField& field, double t0, double x0,
                                  double sigma_cells) {
  const qft::SpacetimeGrid& g = field.grid;
  const double sigma_t = sigma_cells * g.dt();
  const double sigma_x = sigma_cells * g.dx();

  // padded power-of-two patch, 16 sigma wide
  std::size_t pt = 1;
  while (pt < static_cast<std::size_t>(16 * sigma_cells)) pt <<= 1;
  std::size_t px = pt;

  const int it0 = static_cast<int>(std::lround((t0 + g.T) / g.dt()));
  const int ix0 = static_cast<int>(std::lround((x0 + g.L) / g.dx()));

  std::vector<Cplx> patch(pt * px, Cplx{0.0, 0.0});
  for (std::size_t a = 0; a < pt; ++a)
    for (std::size_t b = 0; b < px; ++b) {
      int it = it0 + static_cast<int>(a) - static_cast<int>(pt / 2);
      int ix = ix0 + static_cast<int>(b) - static_cast<int>(px / 2);
      if (it < 0 || it >= g.nt || ix < 0 || ix >= g.nx) continue;
      double wt = (g.t_of(it) - t0) / sigma_t;
      double wx = (g.x_of(ix) - x0) / sigma_x;
      double w = std::exp(-0.5 * (wt * wt + wx * wx));
      patch[a * px + b] = w * field.at(it, ix);
    }

  fft::forward_rows(patch, pt, px);
  fft::forward_cols(patch, pt, px);

  FrequencyMass out;
  for (std::size_t a = 0; a < pt; ++a) {
    if (a == 0 || a == pt / 2) continue;  // skip the ambiguous bins
    bool positive = a < pt / 2;
    for (std::size_t b = 0; b < px; ++b) {
      double m = std::norm(patch[a * px + b]);
      if (positive)
        out.positive += m;
      else
        out.negative += m;
    }
  }
  return out;
}

}  // namespace proplab::wf
