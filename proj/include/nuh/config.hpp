#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nuh/error.hpp"
#include "nuh/exponent_lab.hpp"
#include "nuh/integer_linear.hpp"

namespace nuh {

struct RunConfig {
  IntMatrix matrix{5, 0, 0, 5};
  bool matrixSet = false;
  std::string mode = "auto";  // auto | homothety | general

  std::string profile = "default";  // "default" or serialized coefficients
  std::optional<double> profileA, profileB;

  std::optional<double> halfSize;  // homothety critical half-size
  std::optional<double> criticalLength;  // general critical length
  std::optional<std::pair<double, double>> centers;
  bool permissive = false;

  std::optional<double> alpha;  // empty = auto
  std::optional<double> t, r;   // empty = default for the case
  std::vector<double> tGrid, rGrid;

  std::string tilde = "default";  // "default" or serialized coefficients

  int depth = 0;  // 0 = auto
  GridSpec grid;
  std::uint64_t seed = 1;
  int samples = 1000;
  std::uint64_t lyapunovSteps = 100000;
  int lyapunovSeeds = 32;
  std::uint64_t burnIn = 1000;
  std::uint64_t nodeBudget = kDefaultNodeBudget;

  std::string reportPath;
  std::string csvPath;
  bool fixedClock = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace config_detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

inline double to_real(const std::string& field, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidInput, field + ": '" + s + "' is not a number");
  }
}

inline std::int64_t to_int(const std::string& field, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidInput, field + ": '" + s + "' is not an integer");
  }
}

inline std::vector<double> to_reals(const std::string& field, const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(to_real(field, item));
  return out;
}

inline bool to_bool(const std::string& field, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorKind::InvalidInput, field + ": '" + s + "' is not a boolean");
}

}  // namespace config_detail

inline GridSpec parse_grid(const std::string& text) {
  const auto parts = config_detail::split(text, 'x');
  if (parts.size() != 3) throw Error(ErrorKind::InvalidInput, "grid: expected WxHxD, got '" + text + "'");
  GridSpec g{static_cast<int>(config_detail::to_int("grid", parts[0])),
             static_cast<int>(config_detail::to_int("grid", parts[1])),
             static_cast<int>(config_detail::to_int("grid", parts[2]))};
  if (g.width < 1 || g.height < 1 || g.directions < 6)
    throw Error(ErrorKind::InvalidInput, "grid: need W, H >= 1 and D >= 6");
  return g;
}

inline std::string grid_string(const GridSpec& g) {
  return std::to_string(g.width) + "x" + std::to_string(g.height) + "x" + std::to_string(g.directions);
}

/// INI text with sections [map] [profile] [partition] [cone] [shear] [tilde] [lab] [output].
inline std::string serialize(const RunConfig& c) {
  using config_detail::fmt;
  std::ostringstream os;
  const auto& m = c.matrix;
  os << "[map]\n";
  if (c.matrixSet) os << "matrix = " << m.e11 << "," << m.e12 << "," << m.e21 << "," << m.e22 << "\n";
  os << "mode = " << c.mode << "\n\n[profile]\ncoefficients = " << c.profile << "\n";
  if (c.profileA) os << "a = " << fmt(*c.profileA) << "\n";
  if (c.profileB) os << "b = " << fmt(*c.profileB) << "\n";
  os << "\n[partition]\n";
  if (c.halfSize) os << "half_size = " << fmt(*c.halfSize) << "\n";
  if (c.criticalLength) os << "L = " << fmt(*c.criticalLength) << "\n";
  if (c.centers) os << "centers = " << fmt(c.centers->first) << "," << fmt(c.centers->second) << "\n";
  os << "permissive = " << (c.permissive ? "true" : "false") << "\n\n[cone]\nalpha = "
     << (c.alpha ? fmt(*c.alpha) : "auto") << "\n\n[shear]\n";
  if (c.t) os << "t = " << fmt(*c.t) << "\n";
  if (c.r) os << "r = " << fmt(*c.r) << "\n";
  if (!c.tGrid.empty()) os << "t_grid = " << config_detail::join(c.tGrid) << "\n";
  if (!c.rGrid.empty()) os << "r_grid = " << config_detail::join(c.rGrid) << "\n";
  os << "\n[tilde]\ncoefficients = " << c.tilde << "\n\n[lab]\ndepth = " << c.depth
     << "\ngrid = " << grid_string(c.grid) << "\nseed = " << c.seed << "\nsamples = " << c.samples
     << "\nlyapunov_steps = " << c.lyapunovSteps << "\nlyapunov_seeds = " << c.lyapunovSeeds
     << "\nburn_in = " << c.burnIn << "\nnode_budget = " << c.nodeBudget << "\n\n[output]\n";
  if (!c.reportPath.empty()) os << "report = " << c.reportPath << "\n";
  if (!c.csvPath.empty()) os << "csv = " << c.csvPath << "\n";
  os << "fixed_clock = " << (c.fixedClock ? "true" : "false") << "\n";
  return os.str();
}

inline RunConfig parse_config(const std::string& text) {
  using namespace config_detail;
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidInput, std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  static const std::vector<std::pair<std::string, std::vector<std::string>>> known = {
      {"map", {"matrix", "mode"}},
      {"profile", {"coefficients", "a", "b"}},
      {"partition", {"half_size", "L", "centers", "permissive"}},
      {"cone", {"alpha"}},
      {"shear", {"t", "r", "t_grid", "r_grid"}},
      {"tilde", {"coefficients"}},
      {"lab", {"depth", "grid", "seed", "samples", "lyapunov_steps", "lyapunov_seeds", "burn_in", "node_budget"}},
      {"output", {"report", "csv", "fixed_clock"}}};
  for (const auto& [section, body] : tree) {
    auto it = std::find_if(known.begin(), known.end(), [&](const auto& k) { return k.first == section; });
    if (it == known.end()) throw Error(ErrorKind::InvalidInput, section + ": unknown section");
    for (const auto& [key, _] : body)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw Error(ErrorKind::InvalidInput, section + "." + key + ": unknown key");
  }
  const auto get = [&](const std::string& path) { return tree.get_optional<std::string>(path); };

  RunConfig c;
  if (auto v = get("map.matrix")) {
    const auto parts = split(*v, ',');
    if (parts.size() != 4) throw Error(ErrorKind::InvalidInput, "map.matrix: expected four integers e11,e12,e21,e22");
    c.matrix = {to_int("map.matrix", parts[0]), to_int("map.matrix", parts[1]), to_int("map.matrix", parts[2]),
                to_int("map.matrix", parts[3])};
    c.matrixSet = true;
  }
  if (auto v = get("map.mode")) {
    if (*v != "auto" && *v != "homothety" && *v != "general")
      throw Error(ErrorKind::InvalidInput, "map.mode: expected auto, homothety or general");
    c.mode = *v;
  }
  if (auto v = get("profile.coefficients")) c.profile = *v;
  if (auto v = get("profile.a")) c.profileA = to_real("profile.a", *v);
  if (auto v = get("profile.b")) c.profileB = to_real("profile.b", *v);
  if (auto v = get("partition.half_size")) c.halfSize = to_real("partition.half_size", *v);
  if (auto v = get("partition.L")) c.criticalLength = to_real("partition.L", *v);
  if (auto v = get("partition.centers")) {
    const auto xs = to_reals("partition.centers", *v);
    if (xs.size() != 2) throw Error(ErrorKind::InvalidInput, "partition.centers: expected two values");
    c.centers = {xs[0], xs[1]};
  }
  if (auto v = get("partition.permissive")) c.permissive = to_bool("partition.permissive", *v);
  if (auto v = get("cone.alpha"); v && *v != "auto") c.alpha = to_real("cone.alpha", *v);
  if (auto v = get("shear.t")) c.t = to_real("shear.t", *v);
  if (auto v = get("shear.r")) c.r = to_real("shear.r", *v);
  if (auto v = get("shear.t_grid")) c.tGrid = to_reals("shear.t_grid", *v);
  if (auto v = get("shear.r_grid")) c.rGrid = to_reals("shear.r_grid", *v);
  if (auto v = get("tilde.coefficients")) c.tilde = *v;
  if (auto v = get("lab.depth")) c.depth = static_cast<int>(to_int("lab.depth", *v));
  if (auto v = get("lab.grid")) c.grid = parse_grid(*v);
  if (auto v = get("lab.seed")) c.seed = static_cast<std::uint64_t>(to_int("lab.seed", *v));
  if (auto v = get("lab.samples")) c.samples = static_cast<int>(to_int("lab.samples", *v));
  if (auto v = get("lab.lyapunov_steps")) c.lyapunovSteps = static_cast<std::uint64_t>(to_int("lab.lyapunov_steps", *v));
  if (auto v = get("lab.lyapunov_seeds")) c.lyapunovSeeds = static_cast<int>(to_int("lab.lyapunov_seeds", *v));
  if (auto v = get("lab.burn_in")) c.burnIn = static_cast<std::uint64_t>(to_int("lab.burn_in", *v));
  if (auto v = get("lab.node_budget")) c.nodeBudget = static_cast<std::uint64_t>(to_int("lab.node_budget", *v));
  if (auto v = get("output.report")) c.reportPath = *v;
  if (auto v = get("output.csv")) c.csvPath = *v;
  if (auto v = get("output.fixed_clock")) c.fixedClock = to_bool("output.fixed_clock", *v);

  if (c.depth < 0) throw Error(ErrorKind::InvalidInput, "lab.depth: must be >= 0");
  if (c.samples < 1) throw Error(ErrorKind::InvalidInput, "lab.samples: must be >= 1");
  if (c.lyapunovSeeds < 1) throw Error(ErrorKind::InvalidInput, "lab.lyapunov_seeds: must be >= 1");
  if (c.t && *c.t < 0) throw Error(ErrorKind::InvalidInput, "shear.t: must be >= 0");
  if (c.r && *c.r < 0) throw Error(ErrorKind::InvalidInput, "shear.r: must be >= 0");
  if (c.alpha && !(*c.alpha > 1.0)) throw Error(ErrorKind::InvalidInput, "cone.alpha: must exceed 1");
  return c;
}

}  // namespace nuh
