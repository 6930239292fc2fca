// Experiment configuration: JSON with symbolic metric / connection / potential
// entries. Key names are normative and documented in the README:
//   dim   (int, 2..4)               rank       (int, >= 1)
//   metric (dim x dim expr strings) connection (optional, dim arrays of NxN)
//   potential (optional, N x N)     chart_box  (optional, dim [lo, hi] pairs)
//   time_orientation (optional covector), experiments (optional, passthrough)
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "proplab/expr.hpp"
#include "proplab/geometry.hpp"

namespace proplab::cfg {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& w) : std::runtime_error(w) {}
};

struct Config {
  int dim = 2;
  int rank = 1;
  std::vector<std::vector<expr::Expr>> metric;
  std::vector<geom::Interval> box;
  std::array<double, expr::kMaxDim> time_orientation{1, 0, 0, 0};
  // connection[mu] is a rank x rank matrix of expressions; empty when absent
  std::vector<std::vector<std::vector<expr::Expr>>> connection;
  std::vector<std::vector<expr::Expr>> potential;  // empty when absent
  std::string experiments_json;                    // raw passthrough
  std::string canonical_text;                      // for report hashing
};

Config parse_config_text(const std::string& text);
Config load_config_file(const std::string& path);

geom::MetricChart make_chart(const Config& c);

// Built-in charts for the CLI: "minkowski" (with the given dimension) and
// "frw:a=<expr>" (1+1, g = diag(-1, a(t)^2)).
geom::MetricChart make_named_chart(const std::string& name, int dim);

// FNV-1a over the canonical config text (or any string).
std::uint64_t fnv1a(const std::string& text);

}  // namespace proplab::cfg
