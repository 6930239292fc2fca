#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <proplab/fft.hpp>
#include <proplab/qft.hpp>

#include "oracles.hpp"

using namespace proplab;
using qft::Cplx;
using qft::KernelField;
using qft::KernelKind;
using qft::SpacetimeGrid;

namespace {

SpacetimeGrid small_grid() {
  SpacetimeGrid g;
  g.T = 9.0;
  g.L = 10.0;
  g.nt = 256;
  g.nx = 256;
  return g;
}

int it_of(const SpacetimeGrid& g, double t) { return static_cast<int>(std::lround((t + g.T) / g.dt())); }
int ix_of(const SpacetimeGrid& g, double x) { return static_cast<int>(std::lround((x + g.L) / g.dx())); }

}  // namespace

TEST_CASE("fft agrees with the naive DFT") {
  Rng rng(5);
  std::vector<Cplx> x(64);
  for (auto& z : x) z = Cplx{rng.normal(), rng.normal()};
  std::vector<Cplx> ref = oracle::naive_dft(x);
  std::vector<Cplx> fast = x;
  fft::forward(fast);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fast[i] - ref[i]) <= 1e-10);
  fft::inverse(fast);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fast[i] - x[i]) <= 1e-12);
}

TEST_CASE("massless retarded kernel shows the d'Alembert plateau") {
  SpacetimeGrid g = small_grid();
  KernelField ret = qft::kg_green(KernelKind::Ret, 0.0, g);
  for (auto [t, x] : {std::pair{4.0, 0.5}, std::pair{5.0, -1.0}, std::pair{6.0, 0.0}}) {
    double v = qft::probe_smoothed(ret, it_of(g, t), ix_of(g, x)).real();
    CHECK(std::abs(v - 0.5) <= 0.02 * 0.5);
  }
  // outside the cone it vanishes
  CHECK(std::abs(ret.at(it_of(g, 2.0), ix_of(g, 5.0))) <= 1e-12);
}

TEST_CASE("antisymmetry of the causal kernel is exact") {
  SpacetimeGrid g = small_grid();
  KernelField cau = qft::kg_green(KernelKind::Causal, 1.0, g);
  for (int it = 1; it < g.nt; ++it) {
    int mirror = 2 * g.it_origin() - it;
    if (mirror < 0 || mirror >= g.nt) continue;
    for (int ix = 0; ix < g.nx; ix += 17)
      CHECK(cau.at(it, ix) == -cau.at(mirror, ix));
  }
}

TEST_CASE("discrete (box + m^2) reproduces the delta for the leapfrog kernel") {
  SpacetimeGrid g = small_grid();
  const double m = 1.0;
  KernelField ret = qft::kg_green(KernelKind::Ret, m, g);
  double dt2 = g.dt() * g.dt(), dx2 = g.dx() * g.dx();
  auto stencil = [&](int it, int ix) {
    Cplx dtt = (ret.at(it + 1, ix) - 2.0 * ret.at(it, ix) + ret.at(it - 1, ix)) / dt2;
    Cplx dxx = (ret.at(it, ix + 1) - 2.0 * ret.at(it, ix) + ret.at(it, ix - 1)) / dx2;
    return dtt - dxx + m * m * ret.at(it, ix);
  };
  double peak = 1.0 / (g.dt() * g.dx());
  CHECK(std::abs(stencil(g.it_origin(), g.ix_origin()) - Cplx{peak, 0.0}) <= 0.05 * peak);
  double worst = 0.0;
  for (int it = g.it_origin() + 1; it + 1 < g.nt; ++it)
    for (int ix = 1; ix + 1 < g.nx; ++ix) {
      if (it == g.it_origin() && ix == g.ix_origin()) continue;
      worst = std::max(worst, std::abs(stencil(it, ix)));
    }
  CHECK(worst <= 1e-3 * peak);
}

TEST_CASE("feynman kernel: K0 oracle, evenness, and infrared guards") {
  SpacetimeGrid g = small_grid();
  KernelField gf = qft::kg_feynman_extrapolated(1.0, 0.05, g);

  // the spacelike row needs the Nyquist tail of the 1/Omega symbol resolved:
  // evaluate it on a thin, spatially refined grid
  SpacetimeGrid thin = g;
  thin.nt = 16;
  thin.nx = 2048;
  KernelField gf_thin = qft::kg_feynman_extrapolated(1.0, 0.05, thin);
  for (double r : {0.5, 1.0, 2.0, 3.0}) {
    int ix = static_cast<int>(std::lround((r + thin.L) / thin.dx()));
    double got = std::abs(2.0 * M_PI * gf_thin.at(thin.it_origin(), ix));
    double want = oracle::bessel_k0(r);
    // the standard-library value cross-checks the quadrature oracle
    CHECK(want == doctest::Approx(std::cyl_bessel_k(0.0, r)).epsilon(1e-5));
    CHECK(std::abs(got - want) / want <= 0.02);
  }

  // even kernel
  double worst = 0.0;
  for (int it = 1; it < g.nt; it += 13) {
    int mt = 2 * g.it_origin() - it;
    if (mt < 0 || mt >= g.nt) continue;
    for (int ix = 1; ix < g.nx; ix += 13) {
      int mx = 2 * g.ix_origin() - ix;
      if (mx < 0 || mx >= g.nx) continue;
      worst = std::max(worst, std::abs(gf.at(it, ix) - gf.at(mt, mx)));
    }
  }
  CHECK(worst <= 1e-10 * gf.max_abs());

  CHECK_THROWS_AS(qft::kg_feynman(0.05, 0.05, g), qft::MassTooSmall);
  CHECK_THROWS_AS(qft::kg_feynman(1.0, 1.0, g), std::invalid_argument);
}

TEST_CASE("wightman: hermiticity, log growth, imaginary part") {
  SpacetimeGrid g = small_grid();
  const double m = 1.0;

  KernelField w = qft::kg_wightman(m, g, qft::window_from_source(g, 8.0));
  double worst = 0.0;
  for (int it = 1; it < g.nt; it += 11) {
    int mt = 2 * g.it_origin() - it;
    if (mt < 0 || mt >= g.nt) continue;
    for (int ix = 1; ix < g.nx; ix += 11) {
      int mx = 2 * g.ix_origin() - ix;
      if (mx < 0 || mx >= g.nx) continue;
      worst = std::max(worst, std::abs(w.at(mt, mx) - std::conj(w.at(it, ix))));
    }
  }
  CHECK(worst <= 1e-12 * w.max_abs());

  // omega(0,0) grows like (1/2pi) log(cutoff)
  double v1 = qft::kg_wightman(m, g, qft::window_sharp(g, 10.0))
                  .at(g.it_origin(), g.ix_origin())
                  .real();
  double v2 = qft::kg_wightman(m, g, qft::window_sharp(g, 20.0))
                  .at(g.it_origin(), g.ix_origin())
                  .real();
  double slope = (v2 - v1) / std::log(2.0);
  CHECK(std::abs(slope - 1.0 / (2.0 * M_PI)) <= 0.05 / (2.0 * M_PI));

  // -2 Im omega matches G^ret - G^adv from the matched-source leapfrog
  KernelField w16 = qft::kg_wightman(m, g, qft::window_from_source(g, 16.0));
  KernelField ret = qft::kg_green(KernelKind::Ret, m, g, 16.0);
  KernelField adv = qft::kg_green(KernelKind::Adv, m, g, 16.0);
  for (auto [t, x] : {std::pair{2.0, 0.5}, std::pair{3.0, -1.0}, std::pair{4.5, 2.0}}) {
    double lhs = -2.0 * w16.at(it_of(g, t), ix_of(g, x)).imag();
    double rhs = (ret.at(it_of(g, t), ix_of(g, x)) - adv.at(it_of(g, t), ix_of(g, x))).real();
    CHECK(std::abs(lhs - rhs) <= 0.03 * std::max(std::abs(rhs), 0.1));
  }
}

TEST_CASE("feynman consistency: cross construction and controls") {
  // the three kernels carry a common narrow-source window so that the
  // comparison is mode-for-mode (the bare delta kernels keep standing
  // near-Nyquist ringing that never leaves the interior)
  SpacetimeGrid g = small_grid();
  const double m = 1.0;
  const double src = 16.0;
  std::vector<double> W = qft::window_from_source(g, src);
  KernelField gf = qft::kg_feynman_extrapolated(m, 0.05, g, W);
  KernelField adv = qft::kg_green(KernelKind::Adv, m, g, src);
  KernelField omega = qft::kg_wightman(m, g, W);

  double resid = qft::feynman_consistency(gf, adv, omega);
  CHECK(resid <= 0.03);

  // monotone improvement under eps halving
  double r1 = qft::feynman_consistency(qft::kg_feynman(m, 0.05, g, W), adv, omega);
  double r2 = qft::feynman_consistency(qft::kg_feynman(m, 0.025, g, W), adv, omega);
  double r3 = qft::feynman_consistency(qft::kg_feynman(m, 0.0125, g, W), adv, omega);
  CHECK(r2 < r1);
  CHECK(r3 < r2);

  // negative control: substituting ret for adv blows the residual up
  KernelField ret = qft::kg_green(KernelKind::Ret, m, g, src);
  double wrong = qft::feynman_consistency(gf, ret, omega);
  CHECK(wrong >= 10.0 * resid);
}

TEST_CASE("gram positivity") {
  SpacetimeGrid g = small_grid();
  const double m = 1.0;
  KernelField omega = qft::kg_wightman(m, g, qft::window_from_source(g, 16.0));
  qft::TestFunctionSet tests = qft::make_test_functions(g, 12, 2024);

  qft::GramResult gram = qft::gram_positivity(omega, tests);
  CHECK(gram.min_eigenvalue >= -1e-6 * gram.spectral_radius);
  CHECK(gram.hermitian_defect_ok);

  // single test: the pairing is real (hermitized form)
  Cplx q = qft::pair_with(omega, tests.u[0]);
  CHECK(std::abs(q.imag()) <= 1e-10 * std::abs(q));

  // negative control: flipping the sign of omega flips the verdict
  KernelField neg = omega;
  for (auto& z : neg.v) z = -z;
  qft::GramResult gneg = qft::gram_positivity(neg, tests);
  CHECK(gneg.min_eigenvalue < -1e-6 * gneg.spectral_radius);
}

TEST_CASE("bisolution residual and its negative controls") {
  SpacetimeGrid g = small_grid();
  const double m = 1.0;
  KernelField omega = qft::kg_wightman(m, g, qft::window_from_source(g, 16.0));

  double base = qft::bisolution_residual(omega, m);
  CHECK(base <= 1e-3);

  // smooth non-solution perturbation raises the residual by 10x
  KernelField pert = omega;
  double amp = omega.max_abs() * 0.1;
  for (int it = 0; it < g.nt; ++it)
    for (int ix = 0; ix < g.nx; ++ix) {
      double t = g.t_of(it), x = g.x_of(ix);
      pert.at(it, ix) += amp * std::exp(-0.1 * (t * t + x * x));
    }
  CHECK(qft::bisolution_residual(pert, m) >= 10.0 * base);

  // wrong operator (mass mismatch)
  CHECK(qft::bisolution_residual(omega, 2.0 * m) >= 10.0 * base);
}

TEST_CASE("grid contracts") {
  SpacetimeGrid bad;
  bad.T = 10.0;
  bad.L = 10.0;  // dt == dx violates the CFL margin
  CHECK_THROWS_AS(qft::kg_green(KernelKind::Ret, 1.0, bad), qft::CFLViolation);

  SpacetimeGrid g = small_grid();
  SpacetimeGrid other = g;
  other.nx = 128;
  KernelField a = qft::kg_wightman(1.0, g, {});
  KernelField b = qft::kg_green(KernelKind::Adv, 1.0, other);
  KernelField c = qft::kg_feynman(1.0, 0.05, g);
  CHECK_THROWS_AS(qft::feynman_consistency(c, b, a), qft::GridMismatch);
}
