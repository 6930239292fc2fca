// Run reports: one record per acceptance check, deterministic JSON emission
// (sorted keys, %.12e floats). Wall-clock timings are written to a separate
// non-normative file so the canonical report is byte-identical across runs
// with the same seed and config.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proplab::report {

struct CheckRecord {
  std::string name;
  double budget = 0.0;    // acceptance threshold
  double measured = 0.0;  // measured value (same orientation as the budget)
  bool pass = false;
  std::string note;       // recorded calibrations, region choices, etc.
};

struct RunReport {
  std::string tool_version;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<CheckRecord> checks;

  bool overall_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

void emit_report(const RunReport& r, const std::string& path);
RunReport read_report(const std::string& path);

struct Timing {
  std::string name;
  double seconds = 0.0;
};
void emit_timings(const std::vector<Timing>& timings, const std::string& path);

std::string format_double(double v);  // fixed %.12e formatting

}  // namespace proplab::report
