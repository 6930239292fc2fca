// One-shot acceptance suite: every acceptance criterion as a pinned check
// with its tolerance, plus the shared random corpora used by the CLI.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "proplab/geometry.hpp"
#include "proplab/report.hpp"
#include "proplab/rng.hpp"
#include "proplab/symbols.hpp"

namespace proplab::suite {

struct SuiteOptions {
  std::uint64_t seed = 42;
  bool quick = false;  // reduced corpora (wiring tests only; never the gate)
  std::uint64_t config_hash = 0;
};

report::RunReport run_acceptance(const SuiteOptions& opt, std::ostream* log,
                                 std::vector<report::Timing>* timings = nullptr);

// --- shared corpus builders ---

expr::Expr random_coeff_expr(Rng& rng, double scale = 0.5);

std::vector<geom::PhasePoint> sample_cloud(Rng& rng, int dim, int count);

// Elliptic scalar-principal symbol of degree 2 with a random matrix-valued
// subleading component.
sym::MatrixSymbol random_scalar_symbol(Rng& rng, int dim, int rank);

// Matrix-principal symbol of the given degree with two components.
sym::MatrixSymbol random_matrix_symbol(Rng& rng, int dim, int rank, int degree);

sym::BundleConnection random_connection(Rng& rng, int dim, int rank, bool hermitian = false);

struct IdentityRow {
  sym::IdentityKind kind;
  int corpus = 0;
  double max_residual = 0.0;
  bool pass = false;
};

std::vector<IdentityRow> run_identity_corpus(std::uint64_t seed, int dim, int rank, int per_kind,
                                             double budget = 1e-6);

}  // namespace proplab::suite
