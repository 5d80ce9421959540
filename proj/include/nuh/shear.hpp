#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nuh/error.hpp"
#include "nuh/linalg.hpp"
#include "nuh/torus.hpp"
#include "nuh/trig_poly.hpp"

namespace nuh {

/// Slack allowed when a sampled bound meets a constraint exactly (closure endpoints).
inline constexpr double kValidationTolerance = 1e-9;
inline constexpr int kDefaultValidationSamples = 100000;

struct ShearParams {
  double t = 0.0;
  double r = 0.0;
};

/// Profile s for the shears together with the constants a < |s'| < b it certifies on a partition.
struct ShearProfile {
  TrigPoly s;
  double a = 0.0;
  double b = 0.0;
  RegionPartition partition;
  // sup |s'''|, used to bound s' between samples; left empty the profile cannot be validated.
  std::optional<double> curvature_bound;
};

struct TildeProfile {
  TrigPoly s;
  double L = 0.0;
  int tau1 = 1;
  int tau2 = 1;
  double alpha = 2.0;
};

// ---- shears -------------------------------------------------------------------

inline TorusPoint apply_h(double t, const TrigPoly& s, const TorusPoint& p) {
  return TorusPoint::wrapped(p.x1, p.x2 + t * s.value(p.x1));
}
inline TorusPoint apply_h_inv(double t, const TrigPoly& s, const TorusPoint& p) {
  return TorusPoint::wrapped(p.x1, p.x2 - t * s.value(p.x1));
}
inline TorusPoint apply_v(double r, const TrigPoly& s, const TorusPoint& p) {
  return TorusPoint::wrapped(p.x1 + r * s.value(p.x2), p.x2);
}
inline TorusPoint apply_v_inv(double r, const TrigPoly& s, const TorusPoint& p) {
  return TorusPoint::wrapped(p.x1 - r * s.value(p.x2), p.x2);
}

inline Mat2 jacobian_h(double t, const TrigPoly& s, const TorusPoint& p) { return {1.0, 0.0, t * s.d1(p.x1), 1.0}; }
inline Mat2 jacobian_v(double r, const TrigPoly& s, const TorusPoint& p) { return {1.0, r * s.d1(p.x2), 0.0, 1.0}; }

// Unit lower-triangular / upper-triangular inverses, exact.
inline Mat2 jacobian_h_inv(double t, const TrigPoly& s, const TorusPoint& p) {
  return {1.0, 0.0, -t * s.d1(p.x1), 1.0};
}
inline Mat2 jacobian_v_inv(double r, const TrigPoly& s, const TorusPoint& p) {
  return {1.0, -r * s.d1(p.x2), 0.0, 1.0};
}

// ---- sampled validation -------------------------------------------------------

struct ConditionResult {
  std::string name;
  bool passed = true;
  double margin = std::numeric_limits<double>::infinity();
  // Segment [lo, lo + len] (circle coordinates) where the worst bound occurred.
  double worst_lo = 0.0;
  double worst_len = 0.0;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;

  bool ok() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : conditions) {
      os << c.name << ": " << (c.passed ? "pass" : "FAIL") << " (margin " << c.margin << ")";
      if (!c.passed) os << " on [" << c.worst_lo << ", " << wrap(c.worst_lo + c.worst_len) << "]";
      os << '\n';
    }
    return os.str();
  }
};

/// Sampled extrema of g on the arc [lo, lo+len] with a second-order correction:
/// between samples g stays within its chord +- M h^2 / 8, where M bounds |g''|.
struct ArcBounds {
  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  double abs_upper = 0.0;
  double lower_at = 0.0, upper_at = 0.0, abs_upper_at = 0.0;
  double h = 0.0;
  double slack = 0.0;
};

inline ArcBounds arc_bounds(const std::function<double(double)>& g, double lo, double len, int samples, double M) {
  ArcBounds out;
  const int n = std::max(samples, 2);
  out.h = len / n;
  const double slack = M * out.h * out.h / 8.0;
  out.slack = slack;
  double prev = g(wrap(lo));
  for (int i = 1; i <= n; ++i) {
    const double z = lo + len * i / n;
    const double cur = g(wrap(z));
    const double seg_lo = std::min(prev, cur) - slack;
    const double seg_hi = std::max(prev, cur) + slack;
    const double seg_abs = std::max(std::abs(prev), std::abs(cur)) + slack;
    const double start = wrap(z - out.h);
    if (seg_lo < out.lower) out.lower = seg_lo, out.lower_at = start;
    if (seg_hi > out.upper) out.upper = seg_hi, out.upper_at = start;
    if (seg_abs > out.abs_upper) out.abs_upper = seg_abs, out.abs_upper_at = start;
    prev = cur;
  }
  return out;
}

/// Equality is allowed at the closure of an open interval, so a margin down to minus the
/// sampling slack plus the global tolerance still passes.
inline ConditionResult make_condition(std::string name, double margin, double at, double h, double slack = 0.0) {
  return {std::move(name), margin > -(kValidationTolerance + slack), margin, at, h};
}

inline ValidationReport validate_profile(const ShearProfile& p, int samples = kDefaultValidationSamples) {
  if (!p.curvature_bound)
    throw Error(ErrorKind::CannotCertify, "profile has no declared bound on |s'''|");
  const double M = *p.curvature_bound;
  const auto& part = p.partition;
  const auto ds = [&](double u) { return p.s.d1(u); };
  const auto neg = [&](double u) { return -p.s.d1(u); };
  ValidationReport rep;

  // I4 = (z4, z1): a < s' < b
  const auto plus = arc_bounds(ds, part.z4(), part.plus_length(), samples, M);
  rep.conditions.push_back(make_condition("I4: s' > a", plus.lower - p.a, plus.lower_at, plus.h, plus.slack));
  rep.conditions.push_back(make_condition("I4: s' < b", p.b - plus.upper, plus.upper_at, plus.h, plus.slack));

  // I2 = (z2, z3): -b < s' < -a
  const auto minus = arc_bounds(neg, part.z2(), part.minus_length(), samples, M);
  rep.conditions.push_back(make_condition("I2: s' < -a", minus.lower - p.a, minus.lower_at, minus.h, minus.slack));
  rep.conditions.push_back(make_condition("I2: s' > -b", p.b - minus.upper, minus.upper_at, minus.h, minus.slack));

  // I1, I3: |s'| < b
  const auto c1 = arc_bounds(ds, part.z1(), part.critical_length(), samples, M);
  const auto c3 = arc_bounds(ds, part.z3(), part.critical_length(), samples, M);
  rep.conditions.push_back(make_condition("I1: |s'| < b", p.b - c1.abs_upper, c1.abs_upper_at, c1.h, c1.slack));
  rep.conditions.push_back(make_condition("I3: |s'| < b", p.b - c3.abs_upper, c3.abs_upper_at, c3.h, c3.slack));

  if (!(p.a > 0.0) || !(p.b > p.a))
    rep.conditions.push_back({"0 < a < b", false, std::min(p.a, p.b - p.a), 0.0, 0.0});
  return rep;
}

/// sin(2 pi u) + (g/2) sin(4 pi u) with g chosen so s' vanishes at the two
/// critical centres c and 1 - c; g = 0 when c = 1/4.
inline TrigPoly skewed_sine(double center) {
  const double c = std::cos(2.0 * std::numbers::pi * center);
  if (std::abs(1.0 - 2.0 * c * c) < 0.1)
    throw Error(ErrorKind::Construction, "no skewed sine has its critical points at centre " + std::to_string(center));
  const double g = std::abs(c) < 1e-15 ? 0.0 : c / (1.0 - 2.0 * c * c);
  if (g == 0.0) return TrigPoly::sine();
  return {0.0, {{1, 0.0, 1.0}, {2, 0.0, g / 2.0}}};
}

/// Profile with a = min |s'| over the closure of the good intervals and b = sup |s'|.
inline ShearProfile profile_for_partition(const TrigPoly& s, const RegionPartition& part,
                                          int samples = kDefaultValidationSamples) {
  const double M = s.sup_bound(3);
  const auto ds = [&](double u) { return std::abs(s.d1(u)); };
  double a = std::min({ds(part.z1()), ds(part.z2()), ds(part.z3()), ds(part.z4())});
  for (int i = 1; i < samples; ++i) {
    a = std::min(a, ds(part.z4() + part.plus_length() * i / samples));
    a = std::min(a, ds(part.z2() + part.minus_length() * i / samples));
  }
  const auto whole = arc_bounds([&](double u) { return s.d1(u); }, 0.0, 1.0, samples, M);
  const double b = std::min(s.sup_bound(1), whole.abs_upper);
  return {s, a, b, part, M};
}

/// The default profile for a partition whose critical centres are symmetric about 0 and 1/2.
inline ShearProfile default_profile(const RegionPartition& part, int samples = kDefaultValidationSamples) {
  if (std::abs(wrap(part.center1() + part.center3()) ) > 1e-12 &&
      std::abs(wrap(part.center1() + part.center3()) - 1.0) > 1e-12)
    throw Error(ErrorKind::Construction, "partition centres are not symmetric about 0 and 1/2");
  auto prof = profile_for_partition(skewed_sine(part.center1()), part, samples);
  const auto rep = validate_profile(prof, samples);
  if (!rep.ok())
    throw Error(ErrorKind::Construction, "default profile incompatible with partition:\n" + rep.summary());
  return prof;
}

// ---- the vertical-shift profile of the non-homothety construction -------------

inline ValidationReport validate_tilde_profile(const TildeProfile& st, int samples = kDefaultValidationSamples) {
  ValidationReport rep;
  const auto& s = st.s;
  const auto val = [&](double u) { return s.value(u); };
  const auto der = [&](double u) { return s.d1(u); };

  const auto whole = arc_bounds(val, 0.0, 1.0, samples, s.sup_bound(2));
  rep.conditions.push_back(make_condition("condition 1: |s~| < 1/tau2 - L",
                                          (1.0 / st.tau2 - st.L) - whole.abs_upper, whole.abs_upper_at, whole.h));
  // Strict: condition margins of zero fail here.
  rep.conditions.back().passed = rep.conditions.back().margin > 0.0;

  // Condition 2: on each cell of a grid over [0, 1/tau1), at most one translate may dip to |s~| <= L.
  ConditionResult c2{"condition 2: at most one small translate", true, std::numeric_limits<double>::infinity()};
  if (st.tau1 >= 2) {
    const double M1 = s.sup_bound(1);
    const double span = 1.0 / st.tau1;
    const int n = std::max(samples / st.tau1, 2);
    const double h = span / n;
    std::vector<double> prev(st.tau1);
    for (int j = 0; j < st.tau1; ++j) prev[j] = std::abs(s.value(static_cast<double>(j) / st.tau1));
    for (int i = 1; i <= n; ++i) {
      const double u = span * i / n;
      std::vector<double> lows(st.tau1);
      for (int j = 0; j < st.tau1; ++j) {
        const double cur = std::abs(s.value(u + static_cast<double>(j) / st.tau1));
        lows[j] = (prev[j] + cur - M1 * h) / 2.0;
        prev[j] = cur;
      }
      std::sort(lows.begin(), lows.end());
      // The second smallest translate must stay above L on the whole cell.
      const double margin = lows[1] - st.L;
      if (margin < c2.margin) c2.margin = margin, c2.worst_lo = u - h, c2.worst_len = h;
    }
    c2.passed = c2.margin > 0.0;
  }
  rep.conditions.push_back(c2);

  const auto slope = arc_bounds(der, 0.0, 1.0, samples, s.sup_bound(3));
  rep.conditions.push_back(make_condition("condition 3: |s~'| < 1/(2 alpha)", 1.0 / (2.0 * st.alpha) - slope.abs_upper,
                                          slope.abs_upper_at, slope.h));
  rep.conditions.back().passed = rep.conditions.back().margin > 0.0;
  return rep;
}

/// Mean over u of the smallest gap between translates s~(u + j/tau1): how far apart v pushes
/// the points of one horizontal row.
inline double row_spread(const TrigPoly& s, int tau1, int samples = 2048) {
  if (tau1 < 2) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double u = static_cast<double>(i) / samples;
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < tau1; ++j)
      for (int l = j + 1; l < tau1; ++l)
        gap = std::min(gap, std::abs(s.value(u + static_cast<double>(j) / tau1) -
                                     s.value(u + static_cast<double>(l) / tau1)));
    acc += gap;
  }
  return acc / samples;
}

inline double min_margin(const ValidationReport& rep) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : rep.conditions) m = std::min(m, c.margin);
  return m;
}

/// Built-in s~ = c0 + A sin(2 pi u) + B cos(2 pi tau1 u) picked by grid search:
/// among candidates passing all three conditions, maximise row_spread, then the weakest margin.
inline TildeProfile default_tilde_profile(int tau1, int tau2, double L, double alpha,
                                          int samples = kDefaultValidationSamples) {
  if (tau1 < 1 || tau2 < 1) throw Error(ErrorKind::InvalidInput, "divisors must be positive");
  if (!(L > 0.0) || L >= 1.0 / tau2)
    throw Error(ErrorKind::InvalidInput, "L must lie in (0, 1/tau2); condition 1 is unsatisfiable");
  if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must exceed 1");
  const double two_pi = 2.0 * std::numbers::pi;
  const double amp_cap = 1.0 / (2.0 * alpha * two_pi);  // slope cap for a single first harmonic
  const double room = 1.0 / tau2 - L;

  if (tau1 == 1) {
    TildeProfile st{TrigPoly::sine(0.5 * std::min(amp_cap, room)), L, tau1, tau2, alpha};
    if (!validate_tilde_profile(st, samples).ok())
      throw Error(ErrorKind::SearchFailure, "no default profile for tau1 = 1");
    return st;
  }

  struct Candidate {
    TildeProfile st;
    double spread;
    double margin;
  };
  std::vector<Candidate> ranked;
  const int coarse = 4000;
  for (int ic = 0; ic <= 12; ++ic)
    for (int ia = 0; ia <= 10; ++ia)
      for (int ib = -4; ib <= 4; ++ib) {
        const double c0 = room * ic / 12.0;
        const double A = amp_cap * ia / 10.0;
        const double B = amp_cap / tau1 * ib / 4.0;
        TrigPoly s(c0, {{1, 0.0, A}, {tau1, B, 0.0}});
        TildeProfile st{s, L, tau1, tau2, alpha};
        const auto rep = validate_tilde_profile(st, coarse);
        if (!rep.ok()) continue;
        ranked.push_back({st, row_spread(s, tau1), min_margin(rep)});
      }
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& x, const Candidate& y) {
    if (std::abs(x.spread - y.spread) > 1e-12) return x.spread > y.spread;
    return x.margin > y.margin;
  });
  for (const auto& c : ranked)
    if (validate_tilde_profile(c.st, samples).ok()) return c.st;
  throw Error(ErrorKind::SearchFailure, "no built-in profile satisfies conditions 1-3 for (" + std::to_string(tau1) +
                                            "," + std::to_string(tau2) + "); supply one");
}

// ---- text records -------------------------------------------------------------

/// Flat "key = value" lines.
inline std::string to_record(const ShearProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "coefficients = " << p.s.serialize() << "\na = " << p.a << "\nb = " << p.b << '\n';
  return os.str();
}

inline std::string to_record(const TildeProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "coefficients = " << p.s.serialize() << "\nL = " << p.L << "\ntau1 = " << p.tau1 << "\ntau2 = " << p.tau2
     << "\nalpha = " << p.alpha << '\n';
  return os.str();
}

inline std::map<std::string, std::string> parse_record(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, "record line without '=': " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline TildeProfile tilde_from_record(const std::string& text) {
  auto kv = parse_record(text);
  try {
    return {TrigPoly::parse(kv.at("coefficients")), std::stod(kv.at("L")), std::stoi(kv.at("tau1")),
            std::stoi(kv.at("tau2")), std::stod(kv.at("alpha"))};
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::InvalidInput, "tilde profile record needs coefficients, L, tau1, tau2, alpha");
  }
}

inline ShearProfile profile_from_record(const std::string& text, const RegionPartition& part) {
  auto kv = parse_record(text);
  try {
    const auto s = TrigPoly::parse(kv.at("coefficients"));
    return {s, std::stod(kv.at("a")), std::stod(kv.at("b")), part, s.sup_bound(3)};
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::InvalidInput, "profile record needs coefficients, a, b");
  }
}

}  // namespace nuh
