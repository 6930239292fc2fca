#include "proplab/qft.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "proplab/fft.hpp"

namespace proplab::qft {

namespace {
constexpr Cplx kI{0.0, 1.0};
}

double KernelField::max_abs() const {
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  return peak;
}

// ---------------------------------------------------------------------------
// Leapfrog retarded/advanced kernels

KernelField kg_green(KernelKind kind, double m, const SpacetimeGrid& grid,
                     double source_width_cells) {
  if (kind != KernelKind::Ret && kind != KernelKind::Adv && kind != KernelKind::Causal)
    throw std::invalid_argument("kg_green builds ret, adv or causal kernels");
  grid.require_cfl();
  const int nt = grid.nt, nx = grid.nx;
  const double dt = grid.dt(), dx = grid.dx();
  const int it0 = grid.it_origin(), ix0 = grid.ix_origin();

  // spatial source profile, sum s_j dx = 1
  std::vector<double> source(static_cast<std::size_t>(nx), 0.0);
  if (source_width_cells <= 0.0) {
    source[static_cast<std::size_t>(ix0)] = 1.0 / dx;
  } else {
    double norm = 0.0;
    for (int j = 0; j < nx; ++j) {
      double d = (j - ix0) / source_width_cells;
      if (std::abs(d) > 9.0) continue;
      source[static_cast<std::size_t>(j)] = std::exp(-0.5 * d * d);
      norm += source[static_cast<std::size_t>(j)] * dx;
    }
    for (auto& s : source) s /= norm;
  }

  KernelField ret;
  ret.grid = grid;
  ret.kind = KernelKind::Ret;
  ret.mass = m;
  ret.v.assign(grid.nodes(), Cplx{0.0, 0.0});

  // leapfrog on real data: u^{n+1} = 2u^n - u^{n-1} + dt^2 (Dxx u^n - m^2 u^n + f^n)
  std::vector<double> um(static_cast<std::size_t>(nx), 0.0);
  std::vector<double> uc(static_cast<std::size_t>(nx), 0.0);
  std::vector<double> un(static_cast<std::size_t>(nx), 0.0);
  const double r2 = dt * dt / (dx * dx);

  for (int n = it0; n + 1 < nt; ++n) {
    for (int j = 1; j + 1 < nx; ++j) {
      double lap = uc[static_cast<std::size_t>(j + 1)] - 2.0 * uc[static_cast<std::size_t>(j)] +
                   uc[static_cast<std::size_t>(j - 1)];
      double f = (n == it0) ? source[static_cast<std::size_t>(j)] / dt : 0.0;
      un[static_cast<std::size_t>(j)] =
          2.0 * uc[static_cast<std::size_t>(j)] - um[static_cast<std::size_t>(j)] + r2 * lap -
          dt * dt * m * m * uc[static_cast<std::size_t>(j)] + dt * dt * f;
    }
    un[0] = 0.0;
    un[static_cast<std::size_t>(nx - 1)] = 0.0;
    std::swap(um, uc);
    std::swap(uc, un);
    for (int j = 0; j < nx; ++j)
      ret.at(n + 1, j) = Cplx{uc[static_cast<std::size_t>(j)], 0.0};
  }

  if (kind == KernelKind::Ret) return ret;

  KernelField adv;
  adv.grid = grid;
  adv.kind = KernelKind::Adv;
  adv.mass = m;
  adv.v.assign(grid.nodes(), Cplx{0.0, 0.0});
  for (int it = 0; it < nt; ++it) {
    int mirror = 2 * it0 - it;
    if (mirror < 0 || mirror >= nt) continue;
    for (int ix = 0; ix < nx; ++ix) adv.at(it, ix) = ret.at(mirror, ix);
  }
  if (kind == KernelKind::Adv) return adv;

  KernelField causal;
  causal.grid = grid;
  causal.kind = KernelKind::Causal;
  causal.mass = m;
  causal.v.assign(grid.nodes(), Cplx{0.0, 0.0});
  for (std::size_t i = 0; i < causal.v.size(); ++i) causal.v[i] = ret.v[i] - adv.v[i];
  return causal;
}

// ---------------------------------------------------------------------------
// Feynman kernel: exact frequency integral, DFT across spatial frequencies

KernelField kg_feynman(double m, double eps, const SpacetimeGrid& grid,
                       const std::vector<double>& window) {
  if (m < 0.1) throw MassTooSmall("kg_feynman needs m >= 0.1 for infrared control in 1+1");
  if (eps < 1e-3 || eps > 1e-1)
    throw std::invalid_argument("eps outside the supported range [1e-3, 1e-1]");
  const int nt = grid.nt, nx = grid.nx;
  const double dx = grid.dx();
  if (!window.empty() && window.size() != static_cast<std::size_t>(nx))
    throw GridMismatch("window length must match the spatial axis");

  KernelField out;
  out.grid = grid;
  out.kind = KernelKind::Feynman;
  out.mass = m;
  out.eps = eps;
  out.v.assign(grid.nodes(), Cplx{0.0, 0.0});

  std::vector<Cplx> row(static_cast<std::size_t>(nx));
  for (int it = 0; it < nt; ++it) {
    double t = std::abs(grid.t_of(it));
    for (int ik = 0; ik < nx; ++ik) {
      double k = fft::frequency(static_cast<std::size_t>(ik), static_cast<std::size_t>(nx), dx);
      Cplx omega2{k * k + m * m, -eps};
      Cplx Omega = std::sqrt(omega2);  // principal branch: Re > 0, Im < 0
      Cplx ghat = kI * std::exp(-kI * Omega * t) / (2.0 * Omega);
      if (!window.empty()) ghat *= window[static_cast<std::size_t>(ik)];
      // shift by e^{-i k L} so the inverse DFT lands on x_j = -L + j dx
      double kL = k * grid.L;
      row[static_cast<std::size_t>(ik)] = ghat * Cplx{std::cos(kL), -std::sin(kL)};
    }
    fft::inverse(row);
    for (int ix = 0; ix < nx; ++ix)
      out.at(it, ix) = row[static_cast<std::size_t>(ix)] / dx;
  }
  return out;
}

KernelField kg_feynman_extrapolated(double m, double eps, const SpacetimeGrid& grid,
                                    const std::vector<double>& window) {
  KernelField g1 = kg_feynman(m, eps, grid, window);
  KernelField g2 = kg_feynman(m, eps / 2.0, grid, window);
  KernelField out = g2;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = 2.0 * g2.v[i] - g1.v[i];
  out.eps = eps;  // reported as the extrapolation base
  return out;
}

// ---------------------------------------------------------------------------
// Wightman mode sum

KernelField kg_wightman(double m, const SpacetimeGrid& grid, const std::vector<double>& window) {
  if (m < 0.1) throw MassTooSmall("kg_wightman needs m >= 0.1");
  const int nt = grid.nt, nx = grid.nx;
  const double dx = grid.dx();
  if (!window.empty() && window.size() != static_cast<std::size_t>(nx))
    throw GridMismatch("window length must match the spatial axis");

  KernelField out;
  out.grid = grid;
  out.kind = KernelKind::Wightman;
  out.mass = m;
  out.v.assign(grid.nodes(), Cplx{0.0, 0.0});

  std::vector<Cplx> row(static_cast<std::size_t>(nx));
  for (int it = 0; it < nt; ++it) {
    double t = grid.t_of(it);
    for (int ik = 0; ik < nx; ++ik) {
      double k = fft::frequency(static_cast<std::size_t>(ik), static_cast<std::size_t>(nx), dx);
      double wk = std::sqrt(k * k + m * m);
      double W = window.empty() ? 1.0 : window[static_cast<std::size_t>(ik)];
      Cplx mode = W * std::exp(-kI * wk * t) / (2.0 * wk);
      double kL = k * grid.L;
      row[static_cast<std::size_t>(ik)] = mode * Cplx{std::cos(kL), -std::sin(kL)};
    }
    fft::inverse(row);
    for (int ix = 0; ix < nx; ++ix)
      out.at(it, ix) = row[static_cast<std::size_t>(ix)] / dx;
  }
  return out;
}

std::vector<double> window_from_source(const SpacetimeGrid& grid, double width_cells) {
  const int nx = grid.nx;
  const double dx = grid.dx();
  const int ix0 = grid.ix_origin();
  std::vector<double> s(static_cast<std::size_t>(nx), 0.0);
  double norm = 0.0;
  for (int j = 0; j < nx; ++j) {
    double d = (j - ix0) / width_cells;
    if (std::abs(d) > 9.0) continue;
    s[static_cast<std::size_t>(j)] = std::exp(-0.5 * d * d);
    norm += s[static_cast<std::size_t>(j)] * dx;
  }
  for (auto& x : s) x /= norm;

  std::vector<double> W(static_cast<std::size_t>(nx), 0.0);
  for (int ik = 0; ik < nx; ++ik) {
    double k = fft::frequency(static_cast<std::size_t>(ik), static_cast<std::size_t>(nx), dx);
    double acc = 0.0;
    for (int j = 0; j < nx; ++j) {
      if (s[static_cast<std::size_t>(j)] == 0.0) continue;
      acc += s[static_cast<std::size_t>(j)] * std::cos(k * (grid.x_of(j)));
    }
    W[static_cast<std::size_t>(ik)] = acc * dx;
  }
  return W;
}

std::vector<double> window_sharp(const SpacetimeGrid& grid, double kmax) {
  const int nx = grid.nx;
  std::vector<double> W(static_cast<std::size_t>(nx), 0.0);
  for (int ik = 0; ik < nx; ++ik) {
    double k = fft::frequency(static_cast<std::size_t>(ik), static_cast<std::size_t>(nx), grid.dx());
    W[static_cast<std::size_t>(ik)] = std::abs(k) <= kmax ? 1.0 : 0.0;
  }
  return W;
}

// ---------------------------------------------------------------------------

double feynman_consistency(const KernelField& gf, const KernelField& gadv,
                           const KernelField& omega, int margin_cells, int cone_cells,
                           double t_min) {
  if (!gf.grid.same(gadv.grid) || !gf.grid.same(omega.grid))
    throw GridMismatch("kernels live on different grids");
  const SpacetimeGrid& g = gf.grid;
  double worst = 0.0;
  double scale = 0.0;
  for (int it = margin_cells; it < g.nt - margin_cells; ++it) {
    double t = g.t_of(it);
    if (std::abs(t) < t_min) continue;
    for (int ix = margin_cells; ix < g.nx - margin_cells; ++ix) {
      double x = g.x_of(ix);
      if (std::abs(std::abs(t) - std::abs(x)) < cone_cells * g.dx()) continue;
      Cplx resid = gf.at(it, ix) - gadv.at(it, ix) - kI * omega.at(it, ix);
      worst = std::max(worst, std::abs(resid));
      scale = std::max(scale, std::abs(omega.at(it, ix)));
    }
  }
  return scale > 0 ? worst / scale : worst;
}

// ---------------------------------------------------------------------------

TestFunctionSet make_test_functions(const SpacetimeGrid& grid, int count, std::uint64_t seed) {
  TestFunctionSet set;
  set.grid = grid;
  set.seed = seed;
  set.u.reserve(static_cast<std::size_t>(count));

  for (int a = 0; a < count; ++a) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(a) + 101);
    std::vector<Cplx> u(grid.nodes(), Cplx{0.0, 0.0});
    int bumps = 2 + static_cast<int>(rng.integer(3));
    for (int b = 0; b < bumps; ++b) {
      // supports confined to the central quarter so periodic convolutions
      // never see wrap-around offsets
      double ct = rng.uniform(-grid.T / 4.0, grid.T / 4.0);
      double cx = rng.uniform(-grid.L / 4.0, grid.L / 4.0);
      double w = rng.uniform(4.0, 9.0) * grid.dx();
      Cplx amp{rng.normal(), rng.normal()};
      double pt = rng.uniform(-2.0, 2.0) / grid.dx() * 0.15;
      double px = rng.uniform(-2.0, 2.0) / grid.dx() * 0.15;
      for (int it = 0; it < grid.nt; ++it) {
        double t = grid.t_of(it);
        double dtc = (t - ct) / w;
        if (std::abs(dtc) > 8.5) continue;
        for (int ix = 0; ix < grid.nx; ++ix) {
          double x = grid.x_of(ix);
          double dxc = (x - cx) / w;
          double r2 = dtc * dtc + dxc * dxc;
          if (r2 > 72.25) continue;
          Cplx phase = std::exp(Cplx{0.0, pt * t + px * x});
          u[static_cast<std::size_t>(it) * grid.nx + ix] += amp * std::exp(-0.5 * r2) * phase;
        }
      }
    }
    set.u.push_back(std::move(u));
  }
  return set;
}

std::vector<Cplx> convolve(const KernelField& kernel, const std::vector<Cplx>& u) {
  const SpacetimeGrid& g = kernel.grid;
  if (u.size() != g.nodes()) throw GridMismatch("test function does not match the grid");
  const std::size_t nt = static_cast<std::size_t>(g.nt);
  const std::size_t nx = static_cast<std::size_t>(g.nx);

  // kernel reindexed so the zero offset sits at index 0
  std::vector<Cplx> khat(g.nodes());
  for (std::size_t it = 0; it < nt; ++it)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      std::size_t st = (it + static_cast<std::size_t>(g.it_origin())) % nt;
      std::size_t sx = (ix + static_cast<std::size_t>(g.ix_origin())) % nx;
      khat[it * nx + ix] = kernel.v[st * nx + sx];
    }
  std::vector<Cplx> uhat = u;
  fft::forward_rows(khat, nt, nx);
  fft::forward_cols(khat, nt, nx);
  fft::forward_rows(uhat, nt, nx);
  fft::forward_cols(uhat, nt, nx);
  for (std::size_t i = 0; i < khat.size(); ++i) khat[i] *= uhat[i];
  fft::inverse_rows(khat, nt, nx);
  fft::inverse_cols(khat, nt, nx);
  const double cell = g.dt() * g.dx();
  for (auto& z : khat) z *= cell;
  return khat;
}

GramResult gram_positivity(const KernelField& kernel, const TestFunctionSet& tests) {
  if (!kernel.grid.same(tests.grid)) throw GridMismatch("tests live on a different grid");
  const int count = static_cast<int>(tests.u.size());
  const double cell = kernel.grid.dt() * kernel.grid.dx();

  std::vector<std::vector<Cplx>> conv;
  conv.reserve(static_cast<std::size_t>(count));
  for (const auto& u : tests.u) conv.push_back(convolve(kernel, u));

  Eigen::MatrixXcd M(count, count);
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b) {
      Cplx acc{0.0, 0.0};
      const auto& ua = tests.u[static_cast<std::size_t>(a)];
      const auto& cb = conv[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < ua.size(); ++i) acc += std::conj(ua[i]) * cb[i];
      M(a, b) = acc * cell;
    }

  Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  double defect = (M - H).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  GramResult out;
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  out.hermitian_defect_ok = defect <= 1e-8 * std::max(1.0, out.spectral_radius);
  return out;
}

Cplx probe_smoothed(const KernelField& k, int it, int ix) {
  Cplx acc{0.0, 0.0};
  const double w[3] = {0.25, 0.5, 0.25};
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) acc += w[a + 1] * w[b + 1] * k.at(it + a, ix + b);
  return acc;
}

Cplx probe_smoothed_x(const KernelField& k, int it, int ix) {
  // x-only binomial average: used on rows where the kernel has a kink in t
  return 0.25 * k.at(it, ix - 1) + 0.5 * k.at(it, ix) + 0.25 * k.at(it, ix + 1);
}

Cplx pair_with(const KernelField& kernel, const std::vector<Cplx>& u) {
  std::vector<Cplx> cu = convolve(kernel, u);
  Cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < u.size(); ++i) acc += std::conj(u[i]) * cu[i];
  return acc * kernel.grid.dt() * kernel.grid.dx();
}

double bisolution_residual(const KernelField& omega, double m, int margin_cells) {
  const SpacetimeGrid& g = omega.grid;
  const double dt2 = g.dt() * g.dt();
  const double dx2 = g.dx() * g.dx();
  double worst = 0.0;
  double scale = 0.0;
  for (int it = margin_cells; it < g.nt - margin_cells; ++it)
    for (int ix = margin_cells; ix < g.nx - margin_cells; ++ix) {
      Cplx dtt = (omega.at(it + 1, ix) - 2.0 * omega.at(it, ix) + omega.at(it - 1, ix)) / dt2;
      Cplx dxx = (omega.at(it, ix + 1) - 2.0 * omega.at(it, ix) + omega.at(it, ix - 1)) / dx2;
      Cplx resid = dtt - dxx + m * m * omega.at(it, ix);
      worst = std::max(worst, std::abs(resid));
      scale = std::max(scale, std::abs(dtt) + std::abs(dxx) + m * m * std::abs(omega.at(it, ix)));
    }
  return scale > 0 ? worst / scale : worst;
}

}  // namespace proplab::qft
