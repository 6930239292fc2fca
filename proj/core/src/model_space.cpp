#include "proplab/model_space.hpp"

#include <tuple>

#include <cmath>
#include <numbers>

#include "proplab/fft.hpp"

namespace proplab::model {

const char* to_string(GreenKind k) {
  switch (k) {
    case GreenKind::Ret: return "ret";
    case GreenKind::Adv: return "adv";
    case GreenKind::Causal: return "causal";
    case GreenKind::Feynman: return "feynman";
    case GreenKind::AntiFeynman: return "antifeynman";
  }
  return "?";
}

GridSection GridSection::zeros(std::vector<int> shape, std::vector<double> spacing, int rank,
                               int margin) {
  GridSection g;
  g.n = static_cast<int>(shape.size());
  if (g.n < 2 || g.n > 3) throw UnsupportedDim("model grid supports n in {2, 3}");
  g.rank = rank;
  g.shape = std::move(shape);
  g.spacing = std::move(spacing);
  g.origin.assign(static_cast<std::size_t>(g.n), 0.0);
  for (int a = 0; a < g.n; ++a)
    g.origin[static_cast<std::size_t>(a)] =
        -0.5 * g.spacing[static_cast<std::size_t>(a)] * (g.shape[static_cast<std::size_t>(a)] - 1);
  g.margin = margin;
  g.v.assign(static_cast<std::size_t>(rank) * g.nodes(), Cplx{0.0, 0.0});
  return g;
}

std::size_t GridSection::nodes() const {
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(s);
  return total;
}

double GridSection::margin_violation() const {
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return 0.0;
  double worst = 0.0;
  // margin scan over all axes
  std::size_t n0 = axis0();
  std::size_t t1 = static_cast<std::size_t>(shape[1]);
  std::size_t t2 = n == 3 ? static_cast<std::size_t>(shape[2]) : 1;
  for (int comp = 0; comp < rank; ++comp)
    for (std::size_t i0 = 0; i0 < n0; ++i0)
      for (std::size_t i1 = 0; i1 < t1; ++i1)
        for (std::size_t i2 = 0; i2 < t2; ++i2) {
          bool on_margin = i0 < static_cast<std::size_t>(margin) ||
                           i0 >= n0 - static_cast<std::size_t>(margin) ||
                           i1 < static_cast<std::size_t>(margin) ||
                           i1 >= t1 - static_cast<std::size_t>(margin);
          if (n == 3)
            on_margin = on_margin || i2 < static_cast<std::size_t>(margin) ||
                        i2 >= t2 - static_cast<std::size_t>(margin);
          if (!on_margin) continue;
          std::size_t it = i1 * t2 + i2;
          worst = std::max(worst, std::abs(at(comp, i0, it)));
        }
  return worst / peak;
}

namespace {

// cumulative trapezoid along axis 0 (per component and transverse node)
void cumtrapz_axis0(const GridSection& u, std::vector<Cplx>& cum, std::vector<Cplx>& total) {
  const std::size_t n0 = u.axis0();
  const std::size_t tr = u.transverse();
  const double h = u.spacing[0];
  cum.assign(u.v.size(), Cplx{0.0, 0.0});
  total.assign(static_cast<std::size_t>(u.rank) * tr, Cplx{0.0, 0.0});
  for (int comp = 0; comp < u.rank; ++comp) {
    const std::size_t base = static_cast<std::size_t>(comp) * u.nodes();
    for (std::size_t it = 0; it < tr; ++it) {
      Cplx acc{0.0, 0.0};
      cum[base + it] = acc;
      for (std::size_t i0 = 1; i0 < n0; ++i0) {
        acc += 0.5 * h * (u.v[base + (i0 - 1) * tr + it] + u.v[base + i0 * tr + it]);
        cum[base + i0 * tr + it] = acc;
      }
      total[static_cast<std::size_t>(comp) * tr + it] = acc;
    }
  }
}

// sharp half-space projection in the y^2 frequency; sign = +1 keeps positive
// frequencies, the k = 0 and Nyquist bins carry weight 1/2 in both halves
GridSection project_half(const GridSection& u, int sign) {
  if (u.n != 2) throw UnsupportedDim("frequency projection needs n = 2");
  const std::size_t n0 = u.axis0();
  const std::size_t n1 = u.transverse();
  if (!fft::is_pow2(n1)) throw std::invalid_argument("y^2 axis must be a power of two");
  GridSection out = u;
  std::vector<Cplx> row(n1);
  for (int comp = 0; comp < u.rank; ++comp) {
    const std::size_t base = static_cast<std::size_t>(comp) * u.nodes();
    for (std::size_t i0 = 0; i0 < n0; ++i0) {
      for (std::size_t k = 0; k < n1; ++k) row[k] = u.v[base + i0 * n1 + k];
      fft::forward(row);
      for (std::size_t k = 0; k < n1; ++k) {
        double w;
        if (k == 0 || k == n1 / 2) {
          w = 0.5;
        } else if (k < n1 / 2) {
          w = sign > 0 ? 1.0 : 0.0;
        } else {
          w = sign > 0 ? 0.0 : 1.0;
        }
        row[k] *= w;
      }
      fft::inverse(row);
      for (std::size_t k = 0; k < n1; ++k) out.v[base + i0 * n1 + k] = row[k];
    }
  }
  return out;
}

GridSection apply_causal_family(GreenKind kind, const GridSection& u) {
  GridSection out = u;
  std::vector<Cplx> cum, total;
  cumtrapz_axis0(u, cum, total);
  const std::size_t n0 = u.axis0();
  const std::size_t tr = u.transverse();
  const Cplx i{0.0, 1.0};
  for (int comp = 0; comp < u.rank; ++comp) {
    const std::size_t base = static_cast<std::size_t>(comp) * u.nodes();
    for (std::size_t it = 0; it < tr; ++it) {
      Cplx tot = total[static_cast<std::size_t>(comp) * tr + it];
      for (std::size_t i0 = 0; i0 < n0; ++i0) {
        Cplx c = cum[base + i0 * tr + it];
        Cplx ret = i * c;
        Cplx adv = -i * (tot - c);
        Cplx val;
        switch (kind) {
          case GreenKind::Ret: val = ret; break;
          case GreenKind::Adv: val = adv; break;
          // evaluated as ret - adv so the identity holds exactly on the grid
          case GreenKind::Causal: val = ret - adv; break;
          default: val = Cplx{0, 0};
        }
        out.v[base + i0 * tr + it] = val;
      }
    }
  }
  return out;
}

GridSection add(const GridSection& a, const GridSection& b) {
  GridSection out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

}  // namespace

GridSection apply_model_green(GreenKind kind, const GridSection& u) {
  switch (kind) {
    case GreenKind::Ret:
    case GreenKind::Adv:
    case GreenKind::Causal:
      return apply_causal_family(kind, u);
    case GreenKind::Feynman: {
      if (u.n != 2) throw UnsupportedDim("feynman kind requires n = 2");
      GridSection up = project_half(u, +1);
      GridSection um = project_half(u, -1);
      return add(apply_causal_family(GreenKind::Ret, up),
                 apply_causal_family(GreenKind::Adv, um));
    }
    case GreenKind::AntiFeynman: {
      if (u.n != 2) throw UnsupportedDim("antifeynman kind requires n = 2");
      GridSection up = project_half(u, +1);
      GridSection um = project_half(u, -1);
      return add(apply_causal_family(GreenKind::Ret, um),
                 apply_causal_family(GreenKind::Adv, up));
    }
  }
  throw std::logic_error("apply_model_green: unreachable");
}

namespace {

// transverse volume element
double transverse_weight(const GridSection& u) {
  double w = 1.0;
  for (int a = 1; a < u.n; ++a) w *= u.spacing[static_cast<std::size_t>(a)];
  return w;
}

}  // namespace

double positivity_form(const GridSection& u) {
  std::vector<Cplx> cum, total;
  cumtrapz_axis0(u, cum, total);
  const std::size_t tr = u.transverse();
  double acc = 0.0;
  for (int comp = 0; comp < u.rank; ++comp)
    for (std::size_t it = 0; it < tr; ++it)
      acc += std::norm(total[static_cast<std::size_t>(comp) * tr + it]);
  return acc * transverse_weight(u);
}

Cplx positivity_bilinear(const GridSection& u) {
  GridSection fu = apply_model_green(GreenKind::Causal, u);
  const std::size_t n0 = u.axis0();
  const std::size_t tr = u.transverse();
  const double h0 = u.spacing[0];
  Cplx acc{0.0, 0.0};
  for (int comp = 0; comp < u.rank; ++comp) {
    const std::size_t base = static_cast<std::size_t>(comp) * u.nodes();
    for (std::size_t i0 = 0; i0 < n0; ++i0) {
      double w0 = (i0 == 0 || i0 == n0 - 1) ? 0.5 * h0 : h0;
      for (std::size_t it = 0; it < tr; ++it)
        acc += w0 * std::conj(u.v[base + i0 * tr + it]) * fu.v[base + i0 * tr + it];
    }
  }
  return Cplx{0.0, -1.0} * acc * transverse_weight(u);
}

double model_feynman_positivity(const GridSection& u) {
  GridSection ef = apply_model_green(GreenKind::Feynman, u);
  GridSection av = apply_model_green(GreenKind::Adv, u);
  const std::size_t n0 = u.axis0();
  const std::size_t tr = u.transverse();
  const double h0 = u.spacing[0];
  Cplx acc{0.0, 0.0};
  for (int comp = 0; comp < u.rank; ++comp) {
    const std::size_t base = static_cast<std::size_t>(comp) * u.nodes();
    for (std::size_t i0 = 0; i0 < n0; ++i0) {
      double w0 = (i0 == 0 || i0 == n0 - 1) ? 0.5 * h0 : h0;
      for (std::size_t it = 0; it < tr; ++it)
        acc += w0 * std::conj(u.v[base + i0 * tr + it]) *
               (ef.v[base + i0 * tr + it] - av.v[base + i0 * tr + it]);
    }
  }
  Cplx val = Cplx{0.0, -1.0} * acc * transverse_weight(u);
  return val.real();
}

GridSection random_section(Rng& rng, std::vector<int> shape, std::vector<double> spacing,
                           int rank, int margin, bool band_limited) {
  GridSection g = GridSection::zeros(shape, spacing, rank, margin);
  const std::size_t n0 = g.axis0();
  const std::size_t t1 = static_cast<std::size_t>(g.shape[1]);
  const std::size_t t2 = g.n == 3 ? static_cast<std::size_t>(g.shape[2]) : 1;

  const int bumps = 3 + static_cast<int>(rng.integer(3));
  auto center_range = [&](std::size_t size, double reach) {
    double lo = margin + reach;
    double hi = static_cast<double>(size) - 1 - margin - reach;
    return std::pair<double, double>(lo, hi);
  };

  for (int comp = 0; comp < g.rank; ++comp) {
    for (int b = 0; b < bumps; ++b) {
      double w = rng.uniform(1.2, 2.5);  // bump width in cells
      double reach = 8.5 * w;            // support radius; exp(-reach^2/2w^2) < 1e-15
      auto [lo0, hi0] = center_range(n0, reach);
      auto [lo1, hi1] = center_range(t1, reach);
      if (lo0 >= hi0 || lo1 >= hi1) {
        w = 1.2;
        reach = 8.5 * w;
        std::tie(lo0, hi0) = center_range(n0, reach);
        std::tie(lo1, hi1) = center_range(t1, reach);
        if (lo0 >= hi0 || lo1 >= hi1)
          throw std::invalid_argument("grid too small for the requested support margin");
      }
      double c0 = rng.uniform(lo0, hi0);
      double c1 = rng.uniform(lo1, hi1);
      double c2 = 0.0;
      if (t2 > 1) {
        auto [lo2, hi2] = center_range(t2, reach);
        c2 = rng.uniform(lo2, hi2);
      }
      Cplx amp{rng.normal(), rng.normal()};
      double kmin = 2.0 * std::numbers::pi / (static_cast<double>(t1) * g.spacing[1]);
      double k2 = 0.0;
      if (band_limited) {
        double sign = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        k2 = sign * rng.uniform(6.0 * kmin, 0.25 * std::numbers::pi / g.spacing[1]);
      }
      const double cutoff2 = reach * reach / (w * w);
      for (std::size_t i0 = 0; i0 < n0; ++i0)
        for (std::size_t i1 = 0; i1 < t1; ++i1)
          for (std::size_t i2 = 0; i2 < t2; ++i2) {
            double d0 = (static_cast<double>(i0) - c0) / w;
            double d1 = (static_cast<double>(i1) - c1) / w;
            double d2 = t2 > 1 ? (static_cast<double>(i2) - c2) / w : 0.0;
            double r2 = d0 * d0 + d1 * d1 + d2 * d2;
            if (r2 > cutoff2) continue;
            double y1 = g.origin[1] + g.spacing[1] * static_cast<double>(i1);
            Cplx phase = band_limited ? std::exp(Cplx{0.0, k2 * y1}) : Cplx{1.0, 0.0};
            g.at(comp, i0, i1 * t2 + i2) += amp * std::exp(-0.5 * r2) * phase;
          }
    }
  }
  return g;
}

}  // namespace proplab::model
