#include "proplab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace proplab::report {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_report(const RunReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  // keys in sorted order, floats through format_double, no locale dependence
  out << "{\n";
  out << "  \"checks\": [\n";
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    const CheckRecord& c = r.checks[i];
    out << "    {\"budget\": " << format_double(c.budget)
        << ", \"measured\": " << format_double(c.measured) << ", \"name\": \""
        << escape(c.name) << "\", \"note\": \"" << escape(c.note) << "\", \"pass\": "
        << (c.pass ? "true" : "false") << "}";
    out << (i + 1 < r.checks.size() ? ",\n" : "\n");
  }
  out << "  ],\n";
  char hashbuf[20];
  std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                static_cast<unsigned long long>(r.config_hash));
  out << "  \"config_hash\": \"" << hashbuf << "\",\n";
  out << "  \"overall_pass\": " << (r.overall_pass() ? "true" : "false") << ",\n";
  out << "  \"seed\": " << r.seed << ",\n";
  out << "  \"tool_version\": \"" << escape(r.tool_version) << "\"\n";
  out << "}\n";
}

RunReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read report: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  RunReport r;
  r.tool_version = j.at("tool_version").get<std::string>();
  r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& jc : j.at("checks")) {
    CheckRecord c;
    c.name = jc.at("name").get<std::string>();
    c.budget = jc.at("budget").get<double>();
    c.measured = jc.at("measured").get<double>();
    c.pass = jc.at("pass").get<bool>();
    c.note = jc.at("note").get<std::string>();
    r.checks.push_back(std::move(c));
  }
  return r;
}

void emit_timings(const std::vector<Timing>& timings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write timings: " + path);
  out << "{\n  \"timings\": [\n";
  for (std::size_t i = 0; i < timings.size(); ++i) {
    out << "    {\"name\": \"" << escape(timings[i].name)
        << "\", \"seconds\": " << format_double(timings[i].seconds) << "}"
        << (i + 1 < timings.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
}

}  // namespace proplab::report
