#include "proplab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace proplab::cfg {

using nlohmann::json;

namespace {

expr::Expr parse_entry(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected an expression string");
  try {
    return expr::parse_expression(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::vector<std::vector<expr::Expr>> parse_matrix(const json& j, int rows, int cols,
                                                  const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows))
    throw ConfigError(where + ": expected " + std::to_string(rows) + " rows");
  std::vector<std::vector<expr::Expr>> m(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(cols))
      throw ConfigError(where + ": row " + std::to_string(i) + " must have " +
                        std::to_string(cols) + " entries");
    m[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(cols));
    for (int k = 0; k < cols; ++k)
      m[static_cast<std::size_t>(i)].push_back(
          parse_entry(row[static_cast<std::size_t>(k)],
                      where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
  }
  return m;
}

}  // namespace

Config parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Config c;

  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw ConfigError("missing integer field 'dim'");
  c.dim = j["dim"].get<int>();
  if (c.dim < 2 || c.dim > expr::kMaxDim) throw ConfigError("'dim' must be 2..4");

  c.rank = 1;
  if (j.contains("rank")) {
    if (!j["rank"].is_number_integer()) throw ConfigError("'rank' must be an integer");
    c.rank = j["rank"].get<int>();
    if (c.rank < 1 || c.rank > 16) throw ConfigError("'rank' must be 1..16");
  }

  if (!j.contains("metric")) throw ConfigError("missing field 'metric'");
  c.metric = parse_matrix(j["metric"], c.dim, c.dim, "metric");
  for (int i = 0; i < c.dim; ++i)
    for (int k = i + 1; k < c.dim; ++k)
      if (!expr::equal(c.metric[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                       c.metric[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]))
        throw ConfigError("metric is not symmetric at (" + std::to_string(i) + "," +
                          std::to_string(k) + ")");

  if (j.contains("chart_box")) {
    const json& b = j["chart_box"];
    if (!b.is_array() || b.size() != static_cast<std::size_t>(c.dim))
      throw ConfigError("'chart_box' must have dim [lo, hi] pairs");
    for (const auto& iv : b) {
      if (!iv.is_array() || iv.size() != 2) throw ConfigError("'chart_box' entries are [lo, hi]");
      c.box.push_back({iv[0].get<double>(), iv[1].get<double>()});
    }
  }

  if (j.contains("time_orientation")) {
    const json& t = j["time_orientation"];
    if (!t.is_array() || t.size() != static_cast<std::size_t>(c.dim))
      throw ConfigError("'time_orientation' must have dim components");
    for (int i = 0; i < c.dim; ++i)
      c.time_orientation[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i)].get<double>();
  }

  if (j.contains("connection")) {
    const json& conn = j["connection"];
    if (!conn.is_array() || conn.size() != static_cast<std::size_t>(c.dim))
      throw ConfigError("'connection' must have one N x N matrix per coordinate");
    for (int mu = 0; mu < c.dim; ++mu)
      c.connection.push_back(parse_matrix(conn[static_cast<std::size_t>(mu)], c.rank, c.rank,
                                          "connection[" + std::to_string(mu) + "]"));
  }

  if (j.contains("potential"))
    c.potential = parse_matrix(j["potential"], c.rank, c.rank, "potential");

  if (j.contains("experiments")) c.experiments_json = j["experiments"].dump();

  c.canonical_text = j.dump();  // nlohmann emits objects with sorted keys
  return c;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

geom::MetricChart make_chart(const Config& c) {
  return geom::MetricChart(c.dim, c.metric, c.box, c.time_orientation);
}

geom::MetricChart make_named_chart(const std::string& name, int dim) {
  if (name == "minkowski") return geom::MetricChart::minkowski(dim < 2 ? 2 : dim);
  const std::string frw_prefix = "frw:a=";
  if (name.rfind(frw_prefix, 0) == 0) {
    std::string a_text = name.substr(frw_prefix.size());
    return geom::MetricChart::frw(expr::parse_expression(a_text));
  }
  throw ConfigError("unknown chart '" + name + "' (use minkowski or frw:a=<expr>)");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace proplab::cfg
