#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nuh/endo.hpp"
#include "nuh/error.hpp"
#include "nuh/integer_linear.hpp"
#include "nuh/parallel.hpp"
#include "nuh/shear.hpp"

namespace nuh {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline std::string to_string(const Rational& q) { return q.str(); }

/// floor((m - 1) / 2), the number of whole good-interval slots.
inline std::int64_t half_floor(std::int64_t m) { return m >= 1 ? (m - 1) / 2 : 0; }

// ---- homothety constants ------------------------------------------------------

inline Rational L_homothety(std::int64_t k) {
  if (k < 2) throw Error(ErrorKind::InvalidInput, "L(k) needs k >= 2");
  const std::int64_t c = half_floor(k);
  return Rational(c * (k + c), 2 * k - 1 + c * (k - 1 + c));
}

struct RecursionConstants {
  Rational c;
  Rational e;
};

/// a_{n+1} >= c a_n + e for the vertical-cone proportion.
inline RecursionConstants recursion_constants(std::int64_t k) {
  if (k < 2) throw Error(ErrorKind::InvalidInput, "recursion needs k >= 2");
  const std::int64_t ck = half_floor(k);
  const Rational k2(k * k);
  return {Rational((k - 1) * (k - 1) - ck * (k - 1 + ck)) / k2, Rational(ck * (k + ck)) / k2};
}

inline Rational pow_rational(const Rational& q, unsigned n) {
  Rational out = 1;
  for (unsigned i = 0; i < n; ++i) out *= q;
  return out;
}

/// (e/(1-c))(1 - c^n).
inline Rational recursion_bound(const RecursionConstants& rc, unsigned n) {
  return rc.e / (1 - rc.c) * (1 - pow_rational(rc.c, n));
}

inline Rational recursion_lower_bound(std::int64_t k, unsigned n) { return recursion_bound(recursion_constants(k), n); }

struct HomothetyCoefficients {
  Rational logR;
  Rational logT;
};

/// Coefficients of log r and log t in L V + (1 - L) H.
inline HomothetyCoefficients homothety_coefficients(std::int64_t k) {
  const Rational L = L_homothety(k);
  const std::int64_t c = half_floor(k);
  const Rational k2(k * k);
  return {(L * ((k - 1) * (2 * k - c) + 1) - (k * k - (k - 1) * c)) / k2,
          (L * (2 * (k - 1) * (k - 1) - c * (2 * (k - 1) + c)) - (k * k - c * (2 * k - 1 + c))) / k2};
}

// ---- general-case constants ---------------------------------------------------

inline Rational L_general(std::int64_t tau1, std::int64_t tau2) {
  if (tau1 < 1 || tau2 < 1) throw Error(ErrorKind::InvalidInput, "divisors must be positive");
  const std::int64_t c = half_floor(tau2);
  return Rational(c, tau2) * Rational(tau1 * tau2, 1 + tau1 * c);
}

inline RecursionConstants recursion_constants_general(std::int64_t tau1, std::int64_t tau2) {
  const std::int64_t d = tau1 * tau2;
  const Rational e(half_floor(tau2), tau2);
  return {Rational(d - 1, d) - e, e};
}

/// The log t coefficient as printed in the closing display: ((tau1 - 2/tau2) c - 1)/(1 + tau1 c).
inline Rational general_coefficient_printed(std::int64_t tau1, std::int64_t tau2) {
  const std::int64_t c = half_floor(tau2);
  return ((Rational(tau1) - Rational(2, tau2)) * c - 1) / (1 + tau1 * c);
}

/// The log t coefficient of L V + (1 - L) H with the V, H of the one-step bounds:
/// L (d-1)/d - (1 - L)(1 - c/tau2), which simplifies to (tau1 c - 1)/(1 + tau1 c).
inline Rational general_coefficient_derived(std::int64_t tau1, std::int64_t tau2) {
  const std::int64_t d = tau1 * tau2;
  const Rational L = L_general(tau1, tau2);
  return L * Rational(d - 1, d) - (1 - L) * (1 - Rational(half_floor(tau2), tau2));
}

// ---- bucket-count minimisation -----------------------------------------------

/// Minimum of (n1 log b1 + n2 log b2 + n3 log b3)/total over integer counts with
/// n1 >= min1, n1 + n2 >= min12, n1 + n2 + n3 = total.
inline double min_over_counts(double b1, double b2, double b3, std::int64_t total, std::int64_t min1,
                              std::int64_t min12) {
  const double l1 = std::log(b1), l2 = std::log(b2), l3 = std::log(b3);
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t n1 = min1; n1 <= total; ++n1)
    for (std::int64_t n2 = std::max<std::int64_t>(0, min12 - n1); n1 + n2 <= total; ++n2) {
      const std::int64_t n3 = total - n1 - n2;
      best = std::min(best, (n1 * l1 + n2 * l2 + n3 * l3) / static_cast<double>(total));
    }
  return best;
}

// ---- reports ------------------------------------------------------------------

enum class Verdict { Certified, NotCertified, PreconditionsUnmet };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::NotCertified: return "not-certified";
    case Verdict::PreconditionsUnmet: return "preconditions-unmet";
  }
  return "?";
}

struct HomothetyCertificateInput {
  std::int64_t k = 5;
  double a = 0.0, b = 0.0, alpha = 1.1;
  double t = 0.0, r = 0.0;
};

struct GeneralCertificateInput {
  std::int64_t tau1 = 1, tau2 = 1;
  double a = 0.0, b = 0.0, beta = 2.0;
  double t = 0.0;
  double ev = 0.0, eh = 0.0;
};

struct CertificateReport {
  bool homothety = true;
  Rational L, c, e;
  Rational coeffLogR, coeffLogT;
  Rational coeffLogTPrinted;  // general case: the display's coefficient
  double t = 0.0, r = 0.0;
  double threshold = 0.0;  // shears must exceed this
  // Printed one-step bounds and their log-constant parts.
  double V_printed = NAN, H_printed = NAN, C1 = NAN, C2 = NAN, Cbound = NAN;
  double limitPrinted = NAN;
  // Bounds recomputed from branch bounds and bucket counts.
  double V_derived = NAN, H_derived = NAN;
  double limitJiLowerBound = NAN;  // official, derived mode
  bool modesDisagree = false;
  Verdict verdict = Verdict::PreconditionsUnmet;
  std::string reason;
  std::vector<std::string> notes;
};

inline HomothetyCertificateInput homothety_input(const ComposedEndo& f) {
  return {f.scale(), f.profile().a, f.profile().b, f.alpha(), f.t(), f.r()};
}

/// Printed one-step bounds: returns (V, H, C1, C2).
struct PrintedVH {
  double V, H, C1, C2;
};

inline PrintedVH V_H_bounds_homothety(const HomothetyCertificateInput& in) {
  const double thr = 2.0 * in.alpha / in.a;
  if (!(in.t > thr && in.r > thr))
    throw Error(ErrorKind::PreconditionsUnmet, "t, r must exceed 2 alpha / a = " + std::to_string(thr));
  const double k = static_cast<double>(in.k), k2 = k * k, c = static_cast<double>(half_floor(in.k));
  const double al = in.alpha, a = in.a, b = in.b, t = in.t, r = in.r;
  const double C1 = std::log(1.0 / (al * k)) + ((k - 1) * (k - 1) / k2) * std::log((a - al / t) * (a - al / r)) -
                    ((2 * k - 1 - c) / k2) * std::log(b + 1.0 / t);
  const double C2 = std::log(1.0 / k) + ((k - 1) * c / k2 - 1.0) * std::log((a - al / t) / al) +
                    (c * (k + c) / k2 - 1.0) * std::log(b + 1.0 / t);
  const double V = ((k - 1) * (k - 1) / k2) * std::log(r) + ((k2 - 4 * k + 2 + c) / k2) * std::log(t) + C1;
  const double H = -((k2 - (k - 1) * c) / k2) * std::log(r) - ((k2 - c * (2 * k - 1 + c)) / k2) * std::log(t) + C2;
  return {V, H, C1, C2};
}

/// Worst-case (V, H) from the six branch bounds and the guaranteed bucket counts.
inline std::pair<double, double> V_H_derived_homothety(const HomothetyCertificateInput& in) {
  const double k = static_cast<double>(in.k), al = in.alpha, a = in.a, b = in.b, t = in.t, r = in.r;
  const std::int64_t ck = half_floor(in.k), k2 = in.k * in.k;
  const double bA = ((a - al / t) / al) * ((a - al / r) / al) * t * r / k;
  const double bB = 1.0 / (al * k);
  const double bV = 1.0 / ((b * t + 1.0) * al * k);
  const double bC = ((a - al / t) / al) * t / k;
  const double bD = 1.0 / ((b * r + 1.0) * k);
  const double bH = 1.0 / ((b * t + 1.0) * (b * r + 1.0) * k);
  const double V = min_over_counts(bA, bB, bV, k2, (in.k - 1) * (in.k - 1), (in.k - 1) * (in.k - 1) + ck);
  const double H = min_over_counts(bC, bD, bH, k2, (in.k - 1) * ck, ck * (in.k + ck));
  return {V, H};
}

inline CertificateReport limit_Ji_bound_homothety(const HomothetyCertificateInput& in) {
  if (in.k < 2) throw Error(ErrorKind::InvalidInput, "k must be >= 2");
  if (!(in.a > 0.0) || !(in.b > in.a) || !(in.alpha > 1.0))
    throw Error(ErrorKind::InvalidInput, "need 0 < a < b and alpha > 1");
  CertificateReport rep;
  rep.homothety = true;
  rep.L = L_homothety(in.k);
  const auto rc = recursion_constants(in.k);
  rep.c = rc.c;
  rep.e = rc.e;
  const auto co = homothety_coefficients(in.k);
  rep.coeffLogR = co.logR;
  rep.coeffLogT = co.logT;
  rep.coeffLogTPrinted = co.logT;
  rep.t = in.t;
  rep.r = in.r;
  rep.threshold = 2.0 * in.alpha / in.a;
  if (!(in.t > rep.threshold && in.r > rep.threshold)) {
    rep.verdict = Verdict::PreconditionsUnmet;
    rep.reason = "t, r must exceed 2 alpha / a = " + std::to_string(rep.threshold);
    return rep;
  }
  const double L = to_double(rep.L);
  const auto pv = V_H_bounds_homothety(in);
  rep.V_printed = pv.V;
  rep.H_printed = pv.H;
  rep.C1 = pv.C1;
  rep.C2 = pv.C2;
  rep.Cbound = L * pv.C1 + (1.0 - L) * pv.C2;
  rep.limitPrinted = rep.Cbound + to_double(co.logR) * std::log(in.r) + to_double(co.logT) * std::log(in.t);
  const auto [V, H] = V_H_derived_homothety(in);
  rep.V_derived = V;
  rep.H_derived = H;
  rep.limitJiLowerBound = L * V + (1.0 - L) * H;
  rep.modesDisagree = std::abs(rep.limitPrinted - rep.limitJiLowerBound) > 1e-9 * (1.0 + std::abs(rep.limitPrinted));
  if (rep.modesDisagree)
    rep.notes.push_back("printed-formula limit " + std::to_string(rep.limitPrinted) +
                        " differs from the bucket-derived limit; the derived value decides the verdict");
  rep.verdict = rep.limitJiLowerBound > 0.0 ? Verdict::Certified : Verdict::NotCertified;
  if (rep.verdict == Verdict::NotCertified) rep.reason = "limit lower bound is not positive";
  return rep;
}

inline CertificateReport certificate_general(const GeneralCertificateInput& in) {
  if (!(in.ev > 0.0) || !(in.eh > 0.0)) throw Error(ErrorKind::InvalidInput, "e_v and e_h must be positive");
  if (!(in.a > 0.0) || !(in.b > in.a)) throw Error(ErrorKind::InvalidInput, "need 0 < a < b");
  CertificateReport rep;
  rep.homothety = false;
  rep.L = L_general(in.tau1, in.tau2);
  const auto rc = recursion_constants_general(in.tau1, in.tau2);
  rep.c = rc.c;
  rep.e = rc.e;
  rep.coeffLogR = 0;
  rep.coeffLogT = general_coefficient_derived(in.tau1, in.tau2);
  rep.coeffLogTPrinted = general_coefficient_printed(in.tau1, in.tau2);
  rep.t = in.t;
  rep.threshold = 2.0 * in.beta / in.a;
  if (!(in.t > rep.threshold)) {
    rep.verdict = Verdict::PreconditionsUnmet;
    rep.reason = "t must exceed 2 beta / a = " + std::to_string(rep.threshold);
    return rep;
  }
  const std::int64_t d = in.tau1 * in.tau2, c = half_floor(in.tau2);
  const double L = to_double(rep.L), dd = static_cast<double>(d);
  const double keep = 1.0 - static_cast<double>(c) / static_cast<double>(in.tau2);
  const double t = in.t;
  rep.C1 = std::log((in.ev / in.beta) * std::pow(in.a - in.beta / t, (dd - 1.0) / dd));
  rep.C2 = std::log(in.eh * std::pow(in.b + 1.0 / t, -keep));
  rep.V_printed = ((dd - 1.0) / dd) * std::log(t) + rep.C1;
  rep.H_printed = -keep * std::log(t) + rep.C2;
  rep.Cbound = L * rep.C1 + (1.0 - L) * rep.C2;
  rep.limitPrinted = to_double(rep.coeffLogTPrinted) * std::log(t) + rep.Cbound;

  const double bA = in.ev * (in.a - in.beta / t) * t / in.beta;
  const double bV = in.ev / in.beta;
  const double bD = in.eh;
  const double bH = in.eh / ((in.b + 1.0 / t) * t);
  rep.V_derived = min_over_counts(bA, bV, bV, d, d - 1, d - 1);
  rep.H_derived = min_over_counts(bD, bH, bH, d, in.tau1 * c, in.tau1 * c);
  rep.limitJiLowerBound = L * rep.V_derived + (1.0 - L) * rep.H_derived;
  rep.modesDisagree = std::abs(rep.limitPrinted - rep.limitJiLowerBound) > 1e-9 * (1.0 + std::abs(rep.limitPrinted));
  if (rep.coeffLogT != rep.coeffLogTPrinted)
    rep.notes.push_back("display coefficient " + to_string(rep.coeffLogTPrinted) + " differs from L V + (1-L) H = " +
                        to_string(rep.coeffLogT) + "; the latter is used");
  rep.verdict = rep.limitJiLowerBound > 0.0 ? Verdict::Certified : Verdict::NotCertified;
  if (rep.verdict == Verdict::NotCertified) rep.reason = "limit lower bound is not positive";
  return rep;
}

// ---- beta and the expansion constants -----------------------------------------

inline constexpr double kBetaMargin = 1.01;
inline constexpr double kExpansionMargin = 0.99;

/// Every pulled-back extreme ray of the closed vertical beta-cone, at every sampled height,
/// lands strictly inside one component of the horizontal beta-cone.
inline bool beta_accepts(const IntMatrix& G, const TrigPoly& st, double beta, int samples) {
  const Mat2 Einv = G.to_real().inverse();
  const Vec2 p0 = Einv * Vec2{1.0, beta}, q0 = Einv * Vec2{-1.0, beta};
  for (int i = 0; i < samples; ++i) {
    const double sl = st.d1(static_cast<double>(i) / samples);
    // (D v)^{-1} = [[1, -s~'],[0, 1]]
    const Vec2 p{p0.u1 - sl * p0.u2, p0.u2}, q{q0.u1 - sl * q0.u2, q0.u2};
    const auto inside = [&](const Vec2& v) { return std::abs(v.u2) < beta * std::abs(v.u1) * (1.0 - 1e-12); };
    if (!inside(p) || !inside(q) || (p.u1 > 0) != (q.u1 > 0)) return false;
  }
  return true;
}

inline double estimate_beta(const IntMatrix& G, const TrigPoly& st, double alpha, int samples = 20000,
                            double beta_max = 1e5) {
  if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must exceed 1");
  double lo = alpha, hi = beta_max;
  if (!beta_accepts(G, st, hi, samples))
    throw Error(ErrorKind::SearchFailure, "no invariant cone aperture below " + std::to_string(beta_max));
  while ((hi - lo) > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (beta_accepts(G, st, mid, samples) ? hi : lo) = mid;
  }
  return hi * kBetaMargin;
}

/// Re-check at ten times the sampling density used by estimate_beta.
inline bool verify_beta(const IntMatrix& G, const TrigPoly& st, double beta, int samples = 200000) {
  return beta_accepts(G, st, beta, samples);
}

/// Unit max-norm directions of one cone: the arc of the unit square inside it,
/// sampled uniformly with both boundary rays included.
inline std::vector<Vec2> cone_unit_fan(double beta, bool vertical, int per_side) {
  std::vector<Vec2> out;
  const int n = std::max(per_side, 2);
  if (vertical) {
    // u2 = +-1, |u1| < 1/beta (boundary rays included as limits)
    for (int i = 0; i <= n; ++i) {
      const double u1 = -1.0 / beta + 2.0 / beta * i / n;
      out.push_back({u1, 1.0});
      out.push_back({u1, -1.0});
    }
  } else {
    // u1 = +-1, |u2| <= 1, plus u2 = +-1 with 1/beta <= |u1| <= 1
    for (int i = 0; i <= n; ++i) {
      const double u2 = -1.0 + 2.0 * i / n;
      out.push_back({1.0, u2});
      out.push_back({-1.0, u2});
      const double u1 = 1.0 / beta + (1.0 - 1.0 / beta) * i / n;
      for (double s1 : {1.0, -1.0})
        for (double s2 : {1.0, -1.0}) out.push_back({s1 * u1, s2});
    }
  }
  return out;
}

inline ExpansionConstants estimate_ev_eh(const IntMatrix& G, const TrigPoly& st, double beta, int heights = 2000,
                                         int per_side = 400) {
  const Mat2 Einv = G.to_real().inverse();
  const auto vfan = cone_unit_fan(beta, true, per_side);
  const auto hfan = cone_unit_fan(beta, false, per_side);
  double ev = std::numeric_limits<double>::infinity(), eh = ev;
  for (int i = 0; i < heights; ++i) {
    const double sl = st.d1(static_cast<double>(i) / heights);
    const Mat2 M = Mat2{1.0, -sl, 0.0, 1.0} * Einv;
    for (const auto& u : vfan) ev = std::min(ev, max_norm(M * u));
    for (const auto& u : hfan) eh = std::min(eh, max_norm(M * u));
  }
  return {ev * kExpansionMargin, eh * kExpansionMargin};
}

// ---- scans ----------------------------------------------------------------------

struct ScanRow {
  double t = 0.0, r = 0.0;
  Verdict verdict = Verdict::PreconditionsUnmet;
  double limit = NAN;
  double limitPrinted = NAN;
};

struct ScanResult {
  std::vector<ScanRow> rows;  // t-major
  std::optional<std::pair<double, double>> minimal;
};

/// Minimal certified corner under the order (max(t, r), t).
inline std::optional<std::pair<double, double>> minimal_certified(const std::vector<ScanRow>& rows) {
  std::optional<std::pair<double, double>> best;
  for (const auto& row : rows) {
    if (row.verdict != Verdict::Certified) continue;
    const auto key = std::pair{std::max(row.t, row.r), row.t};
    if (!best || key < std::pair{std::max(best->first, best->second), best->first}) best = {row.t, row.r};
  }
  return best;
}

inline ScanResult scan_parameters(const HomothetyCertificateInput& base, const std::vector<double>& tgrid,
                                  const std::vector<double>& rgrid) {
  if (tgrid.empty() || rgrid.empty()) throw Error(ErrorKind::InvalidInput, "empty scan grid");
  ScanResult out;
  out.rows.resize(tgrid.size() * rgrid.size());
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    auto in = base;
    in.t = tgrid[idx / rgrid.size()];
    in.r = rgrid[idx % rgrid.size()];
    const auto rep = limit_Ji_bound_homothety(in);
    out.rows[idx] = {in.t, in.r, rep.verdict, rep.limitJiLowerBound, rep.limitPrinted};
  });
  out.minimal = minimal_certified(out.rows);
  return out;
}

inline ScanResult scan_parameters(const GeneralCertificateInput& base, const std::vector<double>& tgrid) {
  if (tgrid.empty()) throw Error(ErrorKind::InvalidInput, "empty scan grid");
  ScanResult out;
  out.rows.resize(tgrid.size());
  parallel_for(out.rows.size(), [&](std::size_t idx) {
    auto in = base;
    in.t = tgrid[idx];
    const auto rep = certificate_general(in);
    out.rows[idx] = {in.t, 0.0, rep.verdict, rep.limitJiLowerBound, rep.limitPrinted};
  });
  out.minimal = minimal_certified(out.rows);
  return out;
}

/// n points from lo to hi, evenly spaced in log scale.
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw Error(ErrorKind::InvalidInput, "bad geometric grid");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

/// Constant-determinant maps: C_det = log d, and the margin of C_X > -C_det / 2.
struct DetMargin {
  double Cdet;
  double u1Margin;
};

inline DetMargin C_det_and_U1(const ComposedEndo& f, double limit_lower_bound) {
  const double Cdet = std::log(static_cast<double>(f.degree()));
  return {Cdet, limit_lower_bound + 0.5 * Cdet};
}

// ---- JSON -------------------------------------------------------------------------

inline nlohmann::json rational_json(const Rational& q) { return {{"exact", q.str()}, {"value", to_double(q)}}; }

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json to_json(const CertificateReport& r) {
  nlohmann::json j;
  j["provenance"] = "closed-form certificate";
  j["case"] = r.homothety ? "homothety" : "general";
  j["L"] = rational_json(r.L);
  j["c"] = rational_json(r.c);
  j["e"] = rational_json(r.e);
  if (r.homothety) j["coeffLogR"] = rational_json(r.coeffLogR);
  j["coeffLogT"] = rational_json(r.coeffLogT);
  if (!r.homothety) j["coeffLogTPrinted"] = rational_json(r.coeffLogTPrinted);
  j["t"] = r.t;
  if (r.homothety) j["r"] = r.r;
  j["threshold"] = r.threshold;
  j["printed"] = {{"V", finite_or_null(r.V_printed)}, {"H", finite_or_null(r.H_printed)},
                  {"C1", finite_or_null(r.C1)},       {"C2", finite_or_null(r.C2)},
                  {"Cbound", finite_or_null(r.Cbound)}, {"limit", finite_or_null(r.limitPrinted)}};
  j["derived"] = {{"V", finite_or_null(r.V_derived)},
                  {"H", finite_or_null(r.H_derived)},
                  {"limit", finite_or_null(r.limitJiLowerBound)}};
  j["limitJiLowerBound"] = finite_or_null(r.limitJiLowerBound);
  j["modesDisagree"] = r.modesDisagree;
  j["verdict"] = to_string(r.verdict);
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["notes"] = r.notes;
  j["safetyFactors"] = {{"alpha", kAlphaMargin}, {"beta", kBetaMargin}, {"expansion", kExpansionMargin}};
  return j;
}

}  // namespace nuh
