#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nuh/certificates.hpp"
#include "nuh/config.hpp"
#include "nuh/endo.hpp"
#include "nuh/exponent_lab.hpp"
#include "nuh/invariants.hpp"
#include "nuh/shear.hpp"

namespace nuh {

inline constexpr const char* kReportSchema = "nuh-report/1";
inline constexpr double kDefaultHomothetyAlpha = 1.1;
inline constexpr double kDefaultHomothetyShear = 4.0;
inline constexpr double kGeneralScanLow = 1.0;
inline constexpr double kGeneralScanHigh = 1e7;
inline constexpr int kGeneralScanPoints = 200;

enum ExitCode { kExitPass = 0, kExitNegative = 1, kExitInvalid = 2, kExitBudget = 3 };

inline int exit_code_for(ErrorKind k) { return k == ErrorKind::Budget ? kExitBudget : kExitInvalid; }

struct RunResult {
  nlohmann::json report;
  int exitCode = kExitPass;
  std::string summary;
};

/// Everything the verbs share: the working matrix, partition, profiles and cone data.
struct Setup {
  IntMatrix E;
  bool homothety = true;
  ElementaryDivisors divisors;
  std::optional<CoordinateChange> change;
  double alpha = kDefaultHomothetyAlpha;
  std::optional<double> minAlpha;
  RegionPartition partition;
  ShearProfile profile;
  ValidationReport profileCheck;
  std::optional<TildeProfile> tilde;
  std::optional<ValidationReport> tildeCheck;
  double beta = NAN;
  bool betaVerified = false;
  ExpansionConstants expansion;
  double t = 0.0, r = 0.0;
  std::string shearSource = "config";

  bool valid() const { return profileCheck.ok() && (!tildeCheck || tildeCheck->ok()); }
  const IntMatrix& working() const { return change ? change->G : E; }
};

inline bool has_unit_eigenvalue(const IntMatrix& E) {
  const auto tr = E.e11 + E.e22, det = determinant(E);
  return 1 - tr + det == 0 || 1 + tr + det == 0;
}

inline std::string timestamp(bool fixed) {
  if (fixed) return "1970-01-01T00:00:00Z";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json matrix_json(const IntMatrix& m) { return {{m.e11, m.e12}, {m.e21, m.e22}}; }

inline nlohmann::json to_json(const ValidationReport& rep) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : rep.conditions)
    conds.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", finite_or_null(c.margin)}});
  return {{"ok", rep.ok()}, {"conditions", conds}};
}

inline nlohmann::json to_json(const RegionPartition& p) {
  return {{"halfSize", p.half_size()}, {"divisor", p.divisor()}, {"z", {p.z1(), p.z2(), p.z3(), p.z4()}}};
}

inline std::pair<double, double> default_homothety_centers(std::int64_t k) {
  if (k % 2 == 1) return {0.25, 0.75};
  const double shift = 1.0 / (4.0 * static_cast<double>(k));
  return {0.25 + shift, 0.75 - shift};
}

inline double default_homothety_half_size(std::int64_t k) { return 0.9 / (4.0 * static_cast<double>(k)); }

inline ShearProfile configured_profile(const RunConfig& cfg, const RegionPartition& part) {
  ShearProfile prof = cfg.profile == "default" ? default_profile(part)
                                               : profile_for_partition(TrigPoly::parse(cfg.profile), part);
  if (cfg.profileA) prof.a = *cfg.profileA;
  if (cfg.profileB) prof.b = *cfg.profileB;
  return prof;
}

inline bool resolve_homothety(const RunConfig& cfg) {
  if (!cfg.matrixSet) throw Error(ErrorKind::InvalidInput, "map.matrix: required");
  degree(cfg.matrix);
  const bool h = is_homothety(cfg.matrix);
  if (cfg.mode == "homothety" && !h)
    throw Error(ErrorKind::InvalidInput, "map.mode: homothety requested but " + cfg.matrix.str() + " is not one");
  if (cfg.mode == "general" && h)
    throw Error(ErrorKind::Unsupported, "map.mode: general construction needs a non-homothety matrix");
  return h;
}

/// Partition, profiles and cone data. Profile validation failures are recorded, not thrown.
inline Setup build_setup(const RunConfig& cfg) {
  Setup s;
  s.E = cfg.matrix;
  s.homothety = resolve_homothety(cfg);
  s.divisors = elementary_divisors(s.E);
  if (s.homothety) {
    const auto k = std::abs(s.E.e11);
    if (k < 2) throw Error(ErrorKind::InvalidInput, "map.matrix: homothety factor must satisfy |k| >= 2");
    s.alpha = cfg.alpha.value_or(kDefaultHomothetyAlpha);
    s.partition = build_partition(cfg.halfSize.value_or(default_homothety_half_size(k)), static_cast<int>(k),
                                  cfg.centers.value_or(default_homothety_centers(k)), cfg.permissive);
    s.profile = configured_profile(cfg, s.partition);
    s.profileCheck = validate_profile(s.profile);
    s.t = cfg.t.value_or(kDefaultHomothetyShear);
    s.r = cfg.r.value_or(kDefaultHomothetyShear);
    if (!cfg.t || !cfg.r) s.shearSource = "default";
    return s;
  }
  s.change = normalize_coordinates(s.E);
  const auto& G = s.change->G;
  const int tau1 = static_cast<int>(s.divisors.tau1), tau2 = static_cast<int>(s.divisors.tau2);
  s.minAlpha = min_alpha(G);
  if (cfg.alpha) {
    if (!vertical_cone_pulls_inside(G.to_real().inverse(), *cfg.alpha))
      throw Error(ErrorKind::InvalidInput, "cone.alpha: " + std::to_string(*cfg.alpha) +
                                               " is too small for the normalized matrix " + G.str());
    s.alpha = *cfg.alpha;
  } else {
    s.alpha = std::max(*s.minAlpha, 2.0 * tau2);
  }
  const double L = cfg.criticalLength.value_or(1.0 / (8.0 * tau2));
  s.partition = build_general_partition(L, tau2, s.alpha, cfg.centers.value_or(std::pair{0.25 + L, 0.75 - L}),
                                        cfg.permissive);
  s.profile = configured_profile(cfg, s.partition);
  s.profileCheck = validate_profile(s.profile);
  s.tilde = cfg.tilde == "default" ? default_tilde_profile(tau1, tau2, L, s.alpha)
                                   : TildeProfile{TrigPoly::parse(cfg.tilde), L, tau1, tau2, s.alpha};
  s.tildeCheck = validate_tilde_profile(*s.tilde);
  if (!s.valid()) return s;
  s.beta = estimate_beta(G, s.tilde->s, s.alpha);
  s.betaVerified = verify_beta(G, s.tilde->s, s.beta);
  s.expansion = estimate_ev_eh(G, s.tilde->s, s.beta);
  s.r = 1.0;
  if (cfg.t) {
    s.t = *cfg.t;
  } else {
    GeneralCertificateInput in{s.divisors.tau1, s.divisors.tau2, s.profile.a, s.profile.b, s.beta,
                               0.0, s.expansion.ev, s.expansion.eh};
    const auto scan = scan_parameters(in, geometric_grid(kGeneralScanLow, kGeneralScanHigh, kGeneralScanPoints));
    s.t = scan.minimal ? scan.minimal->first : kGeneralScanHigh;
    s.shearSource = scan.minimal ? "minimal certified scan value" : "scan ceiling (nothing certified)";
  }
  return s;
}

inline ComposedEndo make_endo(const Setup& s) {
  if (s.homothety) return ComposedEndo::homothety(s.E.e11, s.profile, {s.t, s.r}, s.alpha);
  return ComposedEndo::general(s.change->G, *s.tilde, s.profile, s.t, s.alpha, s.beta);
}

inline CertificateReport certify_setup(const Setup& s) {
  if (s.homothety)
    return limit_Ji_bound_homothety({std::abs(s.E.e11), s.profile.a, s.profile.b, s.alpha, s.t, s.r});
  return certificate_general({s.divisors.tau1, s.divisors.tau2, s.profile.a, s.profile.b, s.beta, s.t,
                              s.expansion.ev, s.expansion.eh});
}

/// Reason the log-coefficient sign rules out a certificate, if it does.
inline std::optional<std::string> coefficient_gate(const IntMatrix& E) {
  if (is_homothety(E)) {
    const auto co = homothety_coefficients(std::abs(E.e11));
    if (co.logR <= 0 || co.logT <= 0) return "k < 5: coefficient non-positive";
    return std::nullopt;
  }
  const auto dv = elementary_divisors(E);
  if (general_coefficient_derived(dv.tau1, dv.tau2) <= 0)
    return "(τ₁,τ₂)=(" + std::to_string(dv.tau1) + "," + std::to_string(dv.tau2) + ") excluded, d ≤ 4";
  return std::nullopt;
}

inline nlohmann::json setup_json(const Setup& s) {
  nlohmann::json j;
  j["case"] = s.homothety ? "homothety" : "general";
  j["matrix"] = matrix_json(s.E);
  j["divisors"] = {{"tau1", s.divisors.tau1}, {"tau2", s.divisors.tau2}, {"degree", degree(s.E)}};
  j["unitEigenvalue"] = {{"value", has_unit_eigenvalue(s.E)}, {"provenance", "informational"}};
  if (s.change)
    j["normalization"] = {{"P", matrix_json(s.change->P)},
                          {"G", matrix_json(s.change->G)},
                          {"normalizedLattice", has_normalized_lattice(s.change->G)},
                          {"verticalEigenvector", has_vertical_eigenvector(s.change->G)}};
  j["partition"] = to_json(s.partition);
  j["profile"] = {{"coefficients", s.profile.s.serialize()},
                  {"a", s.profile.a},
                  {"b", s.profile.b},
                  {"validation", to_json(s.profileCheck)}};
  j["cone"] = {{"alpha", s.alpha}};
  if (s.minAlpha) j["cone"]["minAlpha"] = *s.minAlpha;
  if (s.tilde) {
    j["tilde"] = {{"coefficients", s.tilde->s.serialize()}, {"L", s.tilde->L}, {"validation", to_json(*s.tildeCheck)}};
    if (std::isfinite(s.beta))
      j["cone"].update({{"beta", s.beta},
                        {"betaVerified", s.betaVerified},
                        {"ev", s.expansion.ev},
                        {"eh", s.expansion.eh},
                        {"provenance", "empirical evidence"}});
  }
  j["shear"] = {{"t", s.t}, {"source", s.shearSource}};
  if (s.homothety) j["shear"]["r"] = s.r;
  return j;
}

inline nlohmann::json to_json(const GridMinResult& g, int n, const GridSpec& spec) {
  return {{"provenance", "empirical evidence"},
          {"depth", n},
          {"grid", grid_string(spec)},
          {"minJ", g.minJ},
          {"minAverageI", g.minAvgI},
          {"argX", {g.argX.x1, g.argX.x2}},
          {"argU", {g.argU.u1, g.argU.u2}},
          {"samples", g.samples}};
}

struct LyapunovSummary {
  std::vector<LyapunovEstimate> runs;
  double logd = 0.0;
  bool allAbove() const {
    return std::all_of(runs.begin(), runs.end(), [&](const auto& e) { return e.lambdaPlus > logd; });
  }
};

inline LyapunovSummary lyapunov_runs(const ComposedEndo& f, const RunConfig& cfg) {
  LyapunovSummary out;
  out.logd = std::log(static_cast<double>(f.degree()));
  out.runs.resize(static_cast<std::size_t>(cfg.lyapunovSeeds));
  parallel_for(out.runs.size(), [&](std::size_t i) {
    out.runs[i] = lyapunov_forward(f, seeded_point(cfg.seed + i), cfg.lyapunovSteps, cfg.burnIn);
  });
  return out;
}

inline nlohmann::json to_json(const LyapunovSummary& l, double upper) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& e : l.runs)
    runs.push_back({{"start", {e.start.x1, e.start.x2}},
                    {"lambdaPlus", static_cast<double>(e.lambdaPlus)},
                    {"lambdaMinus", static_cast<double>(e.lambdaMinus)}});
  return {{"provenance", "empirical evidence"}, {"logDegree", l.logd}, {"upperBound", upper},
          {"allAboveLogDegree", l.allAbove()}, {"runs", runs}};
}

inline RunResult start_report(const std::string& verb, const RunConfig& cfg) {
  RunResult res;
  res.report["schema"] = kReportSchema;
  res.report["verb"] = verb;
  res.report["generatedAt"] = timestamp(cfg.fixedClock);
  res.report["seed"] = cfg.seed;
  res.report["input"] = serialize(cfg);
  return res;
}

inline void finish(RunResult& res, int code, const std::string& summary) {
  res.exitCode = code;
  res.summary = summary;
  res.report["outcome"] = {{"exitCode", code}, {"summary", summary}};
}

inline int effective_depth(const RunConfig& cfg, const ComposedEndo& f) {
  return cfg.depth > 0 ? cfg.depth : default_depth(f.degree());
}

/// Returns false (and finishes the result) if profile validation failed.
inline bool require_valid(RunResult& res, const Setup& s) {
  if (s.valid()) return true;
  std::string msg = "profile validation failed:\n" + s.profileCheck.summary();
  if (s.tildeCheck && !s.tildeCheck->ok()) msg += s.tildeCheck->summary();
  finish(res, kExitInvalid, msg);
  return false;
}

// ---- verbs ------------------------------------------------------------------------

inline RunResult cmd_normalize(const RunConfig& cfg) {
  auto res = start_report("normalize", cfg);
  if (!cfg.matrixSet) throw Error(ErrorKind::InvalidInput, "map.matrix: required");
  const auto cc = normalize_coordinates(cfg.matrix);
  const auto dv = elementary_divisors(cfg.matrix);
  res.report["divisors"] = {{"tau1", dv.tau1}, {"tau2", dv.tau2}};
  res.report["normalization"] = {{"P", matrix_json(cc.P)},
                                 {"G", matrix_json(cc.G)},
                                 {"normalizedLattice", has_normalized_lattice(cc.G)},
                                 {"verticalEigenvector", has_vertical_eigenvector(cc.G)},
                                 {"minAlpha", min_alpha(cc.G)}};
  finish(res, kExitPass, "G = " + cc.G.str() + ", P = " + cc.P.str());
  return res;
}

inline RunResult cmd_validate_profile(const RunConfig& cfg) {
  auto res = start_report("validate-profile", cfg);
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  finish(res, kExitPass, "profile passes all conditions");
  return res;
}

inline RunResult cmd_certify(const RunConfig& cfg) {
  auto res = start_report("certify", cfg);
  resolve_homothety(cfg);
  if (auto why = coefficient_gate(cfg.matrix)) {
    res.report["certificate"] = {{"provenance", "closed-form certificate"}, {"verdict", "not-certified"},
                                 {"reason", *why}};
    finish(res, kExitNegative, *why);
    return res;
  }
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  const auto rep = certify_setup(s);
  res.report["certificate"] = to_json(rep);
  if (rep.verdict == Verdict::Certified) {
    const auto f = make_endo(s);
    const auto dm = C_det_and_U1(f, rep.limitJiLowerBound);
    res.report["certificate"]["Cdet"] = dm.Cdet;
    res.report["certificate"]["U1Margin"] = dm.u1Margin;
  }
  const std::string verdict = to_string(rep.verdict);
  finish(res, rep.verdict == Verdict::Certified ? kExitPass : kExitNegative,
         verdict + (rep.reason.empty() ? "" : ": " + rep.reason));
  return res;
}

inline RunResult cmd_verify(const RunConfig& cfg) {
  auto res = start_report("verify", cfg);
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  const auto rep = certify_setup(s);
  res.report["certificate"] = to_json(rep);
  const auto f = make_endo(s);
  const int n = effective_depth(cfg, f);
  check_budget(f, n, cfg.nodeBudget);
  const bool pre = shear_preconditions_hold(f);

  InvariantSuite hard = preimage_invariants(f, cfg.samples, cfg.seed);
  InvariantSuite reported;
  const int oracleDepth = std::min(n, 3);
  hard["oracle-equivalence"] = oracle_equivalence(f, std::min(cfg.samples, 100), oracleDepth, cfg.seed + 1,
                                                  cfg.nodeBudget);
  InvariantSuite witnesses;
  auto buckets = bucket_invariants(f, cfg.samples, cfg.seed + 2, s.expansion, &witnesses);
  reported.merge(witnesses);
  auto census = census_invariants(f, std::min(cfg.samples, 200), n, cfg.seed + 3, cfg.nodeBudget);
  (pre ? hard : reported).merge(buckets);
  (pre ? hard : reported).merge(census);

  const auto grid = grid_min_J(f, n, cfg.grid, cfg.nodeBudget);
  const auto lyap = lyapunov_runs(f, cfg);

  nlohmann::json emp;
  emp["provenance"] = "empirical evidence";
  emp["shearPreconditions"] = pre;
  emp["hardInvariants"] = to_json(hard);
  emp["reportedOnly"] = to_json(reported);
  emp["gridMinJ"] = to_json(grid, n, cfg.grid);
  emp["lyapunov"] = to_json(lyap, lyapunov_upper_bound(f));
  res.report["empirical"] = emp;

  if (!hard.ok()) {
    std::string failed;
    for (const auto& t : hard.tallies)
      if (t.violations) failed += " " + t.name + " (" + std::to_string(t.violations) + ": " + t.firstFailure + ")";
    finish(res, kExitNegative, "invariant violations:" + failed);
  } else if (!(grid.minAvgI > 0.0)) {
    finish(res, kExitNegative, "positivity evidence absent: min (1/n) I = " + std::to_string(grid.minAvgI));
  } else {
    finish(res, kExitPass, "all invariants hold; min (1/n) I = " + std::to_string(grid.minAvgI));
  }
  return res;
}

inline std::string scan_csv(const ScanResult& scan) {
  std::ostringstream os;
  os.precision(17);
  os << "t,r,verdict,limitJiLowerBound,limitPrinted\n";
  for (const auto& row : scan.rows)
    os << row.t << ',' << row.r << ',' << to_string(row.verdict) << ',' << row.limit << ',' << row.limitPrinted
       << '\n';
  return os.str();
}

inline RunResult cmd_scan(const RunConfig& cfg) {
  auto res = start_report("scan", cfg);
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  ScanResult scan;
  if (s.homothety) {
    std::vector<double> tg = cfg.tGrid, rg = cfg.rGrid;
    if (tg.empty())
      for (int i = 1; i <= 10; ++i) tg.push_back(i);
    if (rg.empty()) rg = tg;
    scan = scan_parameters(HomothetyCertificateInput{std::abs(s.E.e11), s.profile.a, s.profile.b, s.alpha, 0, 0},
                           tg, rg);
  } else {
    const auto tg =
        cfg.tGrid.empty() ? geometric_grid(kGeneralScanLow, kGeneralScanHigh, kGeneralScanPoints) : cfg.tGrid;
    scan = scan_parameters(GeneralCertificateInput{s.divisors.tau1, s.divisors.tau2, s.profile.a, s.profile.b,
                                                   s.beta, 0, s.expansion.ev, s.expansion.eh},
                           tg);
  }
  const auto csv = scan_csv(scan);
  if (!cfg.csvPath.empty()) {
    std::ofstream os(cfg.csvPath);
    if (!os) throw Error(ErrorKind::InvalidInput, "output.csv: cannot open " + cfg.csvPath);
    os << csv;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : scan.rows)
    rows.push_back({row.t, row.r, to_string(row.verdict), finite_or_null(row.limit)});
  res.report["scan"] = {{"provenance", "closed-form certificate"},
                        {"columns", {"t", "r", "verdict", "limitJiLowerBound"}},
                        {"rows", rows}};
  if (scan.minimal) {
    res.report["scan"]["minimalCertified"] = {scan.minimal->first, scan.minimal->second};
    std::ostringstream msg;
    msg << "minimal certified corner t = " << scan.minimal->first;
    if (s.homothety) msg << ", r = " << scan.minimal->second;
    finish(res, kExitPass, msg.str());
  } else {
    finish(res, kExitNegative, "no certified point on the grid");
  }
  return res;
}

inline RunResult cmd_census(const RunConfig& cfg) {
  auto res = start_report("census", cfg);
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  const auto f = make_endo(s);
  const int n = effective_depth(cfg, f);
  check_budget(f, n, cfg.nodeBudget);
  const auto census = census_invariants(f, cfg.samples, n, cfg.seed, cfg.nodeBudget);
  res.report["census"] = {{"provenance", "empirical evidence"}, {"depth", n}, {"tallies", to_json(census)}};
  if (!cfg.csvPath.empty()) {
    std::mt19937_64 rng(cfg.seed);
    const TorusPoint x = seeded_point(cfg.seed);
    const Vec2 u = random_cone_direction(rng, f.cone(), true);
    const auto tree = build_tree(f, x, n, cfg.nodeBudget);
    std::ofstream os(cfg.csvPath);
    if (!os) throw Error(ErrorKind::InvalidInput, "output.csv: cannot open " + cfg.csvPath);
    write_series_csv(os, series_on_tree(tree, u), census_on_tree(f, tree, u));
  }
  if (census.ok())
    finish(res, kExitPass, "census bounds hold at every sample");
  else
    finish(res, kExitNegative, "census bound violations");
  return res;
}

inline RunResult cmd_lyapunov(const RunConfig& cfg) {
  auto res = start_report("lyapunov", cfg);
  const auto s = build_setup(cfg);
  res.report["setup"] = setup_json(s);
  if (!require_valid(res, s)) return res;
  const auto f = make_endo(s);
  const auto l = lyapunov_runs(f, cfg);
  res.report["lyapunov"] = to_json(l, lyapunov_upper_bound(f));
  if (l.allAbove())
    finish(res, kExitPass, "lambda+ > log d at every seed");
  else
    finish(res, kExitNegative, "some seed has lambda+ <= log d");
  return res;
}

/// Dispatch with the exit-code contract: errors become 2, budget errors 3.
inline RunResult run_verb(const std::string& verb, const RunConfig& cfg) {
  try {
    if (verb == "certify") return cmd_certify(cfg);
    if (verb == "verify") return cmd_verify(cfg);
    if (verb == "scan") return cmd_scan(cfg);
    if (verb == "census") return cmd_census(cfg);
    if (verb == "lyapunov") return cmd_lyapunov(cfg);
    if (verb == "validate-profile") return cmd_validate_profile(cfg);
    if (verb == "normalize") return cmd_normalize(cfg);
    throw Error(ErrorKind::InvalidInput, "unknown verb '" + verb + "'");
  } catch (const Error& e) {
    auto res = start_report(verb, cfg);
    res.report["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
    finish(res, exit_code_for(e.kind()), e.what());
    return res;
  }
}

}  // namespace nuh
