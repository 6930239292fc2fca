#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <proplab/qft.hpp>
#include <proplab/wf_probe.hpp>

using namespace proplab;
using qft::Cplx;
using qft::KernelField;
using qft::SpacetimeGrid;

namespace {

SpacetimeGrid grid256() {
  SpacetimeGrid g;
  g.T = 9.0;
  g.L = 10.0;
  g.nt = 256;
  g.nx = 256;
  return g;
}

KernelField field_from(const SpacetimeGrid& g, const std::function<Cplx(double, double)>& f) {
  KernelField k;
  k.grid = g;
  k.v.resize(g.nodes());
  for (int it = 0; it < g.nt; ++it)
    for (int ix = 0; ix < g.nx; ++ix) k.at(it, ix) = f(g.t_of(it), g.x_of(ix));
  return k;
}

}  // namespace

TEST_CASE("smooth fields decay fast in every direction") {
  SpacetimeGrid g = grid256();
  KernelField smooth = field_from(g, [](double t, double x) {
    return Cplx{std::exp(-0.5 * (t * t + x * x)), 0.0};
  });
  wf::DecayProfile prof = wf::decay_exponents(smooth, 0.0, 0.0);
  for (double a : prof.alpha) CHECK(a >= 6.0);
  CHECK(wf::singular_directions(prof).directions.empty());
}

TEST_CASE("a grid delta is flagged flat in every direction") {
  SpacetimeGrid g = grid256();
  KernelField delta = field_from(g, [](double, double) { return Cplx{0.0, 0.0}; });
  delta.at(g.it_origin(), g.ix_origin()) = Cplx{1.0, 0.0};
  wf::DecayProfile prof = wf::decay_exponents(delta, 0.0, 0.0);
  for (double a : prof.alpha) CHECK(a <= 0.5);
  CHECK(wf::singular_directions(prof).directions.size() == prof.theta.size());
}

TEST_CASE("heaviside jump decays like 1/lambda across the jump") {
  SpacetimeGrid g = grid256();
  KernelField step = field_from(g, [](double t, double) {
    return Cplx{t >= 0 ? 1.0 : 0.0, 0.0};
  });
  wf::DecayProfile prof = wf::decay_exponents(step, 0.0, 0.0);
  // direction index 0 is theta = 0: perpendicular to the jump line t = 0
  CHECK(prof.alpha[0] == doctest::Approx(1.0).epsilon(0.35));
  CHECK(prof.r2[0] >= 0.9);
  auto flagged = wf::singular_directions(prof);
  CHECK(!flagged.directions.empty());
}

TEST_CASE("causal kernel: singular directions confined to null codirections") {
  SpacetimeGrid g = grid256();
  KernelField cau = qft::kg_green(qft::KernelKind::Causal, 1.0, g);

  // at a forward-cone point the conormal of the branch t = x is near -45 deg
  wf::DecayProfile prof = wf::decay_exponents(cau, 3.0, 3.0);
  wf::SingularSet sing = wf::singular_directions(prof);
  CHECK(!sing.directions.empty());
  for (int d : sing.directions) {
    int da = std::min((d - 28 + 32) % 32, (28 - d + 32) % 32);
    int db = std::min((d - 12 + 32) % 32, (12 - d + 32) % 32);
    CHECK(std::min(da, db) <= 1);
  }

  // off-cone probes stay clean
  for (auto [t, x] : {std::pair{4.0, 0.0}, std::pair{6.0, -1.0}, std::pair{5.5, 0.5}}) {
    wf::DecayProfile p2 = wf::decay_exponents(cau, t, x);
    CHECK(wf::singular_directions(p2).directions.empty());
  }
}

TEST_CASE("flags are stable under grid refinement and adjacent bins") {
  SpacetimeGrid g = grid256();
  SpacetimeGrid g2 = g;
  g2.nt = 512;
  g2.nx = 512;
  KernelField c1 = qft::kg_green(qft::KernelKind::Causal, 1.0, g);
  KernelField c2 = qft::kg_green(qft::KernelKind::Causal, 1.0, g2);

  wf::DecayProfile p1 = wf::decay_exponents(c1, 3.0, 3.0);
  wf::DecayProfile p2 = wf::decay_exponents(c2, 3.0, 3.0);
  auto s1 = wf::singular_directions(p1);
  auto s2 = wf::singular_directions(p2);
  // refinement does not remove flagged directions
  for (int d : s1.directions) {
    bool kept = false;
    for (int e : s2.directions) kept = kept || std::abs(d - e) <= 1;
    CHECK(kept);
  }
  // angular stability within one bin: neighbors of a flagged bin carry
  // comparable exponents
  for (int d : s1.directions) {
    int n1 = (d + 1) % 32, n0 = (d + 31) % 32;
    CHECK(std::min(p1.alpha[n0], p1.alpha[n1]) <= p1.alpha[d] + 1.5);
  }
}

TEST_CASE("frequency asymmetry separates feynman from advanced") {
  SpacetimeGrid g = grid256();
  KernelField gf = qft::kg_feynman(1.0, 0.05, g);
  KernelField adv = qft::kg_green(qft::KernelKind::Adv, 1.0, g);

  double ratio_f = wf::frequency_asymmetry(gf, 3.0, 3.0).ratio();
  double ratio_a = wf::frequency_asymmetry(adv, -3.0, 3.0).ratio();
  CHECK(ratio_f >= 5.0);
  CHECK(ratio_a <= 2.0);
}

TEST_CASE("probe preconditions") {
  SpacetimeGrid g = grid256();
  KernelField cau = qft::kg_green(qft::KernelKind::Causal, 1.0, g);
  CHECK_THROWS_AS(wf::decay_exponents(cau, 8.9, 0.0), std::invalid_argument);
  wf::ProbeOptions opt;
  opt.lambda_max_frac = 1.5;
  CHECK_THROWS_AS(wf::decay_exponents(cau, 0.0, 0.0, opt), wf::NyquistViolation);
}
