// One PASS/FAIL line per acceptance criterion; details follow each line, indented.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nuh/nuh.hpp"

using namespace nuh;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

int failures = 0;

template <class Fn>
void criterion(int id, const char* title, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    fn(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %d %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, secs);
  for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

void require_suite(Outcome& o, const std::string& label, const InvariantSuite& s) {
  for (const auto& t : s.tallies)
    o.require(t.violations == 0, label + " " + t.name + ": " + std::to_string(t.violations) + "/" +
                                     std::to_string(t.checks) + " violations" +
                                     (t.violations ? " (first: " + t.firstFailure + ")" : ""));
}

ShearProfile k5_default_profile() { return default_profile(build_partition(0.045, 5, {0.25, 0.75})); }

// Smallest certified (t, r) for the default k = 5 profile on a log-spaced grid.
std::pair<double, double> k5_certified_shears() {
  const auto prof = k5_default_profile();
  const auto grid = geometric_grid(1.0, 1e4, 100);
  const auto scan = scan_parameters(HomothetyCertificateInput{5, prof.a, prof.b, 1.1, 0, 0}, grid, grid);
  if (!scan.minimal) throw Error(ErrorKind::CannotCertify, "no certified k = 5 shears up to 1e4");
  return *scan.minimal;
}

struct General {
  IntMatrix E{2, 0, 0, 4};
  Setup setup;
  General() {
    RunConfig cfg;
    cfg.matrix = E;
    cfg.matrixSet = true;
    setup = build_setup(cfg);
  }
};

const General& general() {
  static const General g;
  return g;
}

}  // namespace

int main() {
  const double paperA = 2.0 * std::numbers::pi * std::sin(std::numbers::pi / 10);
  const double paperB = 2.0 * std::numbers::pi;

  criterion(1, "exact constants", [](Outcome& o) {
    o.require(L_homothety(5) == Rational(2, 3), "L(5) = " + L_homothety(5).str());
    const struct {
      int t1, t2;
      Rational want;
    } table[] = {{2, 4, Rational(2, 3)}, {3, 3, Rational(3, 4)}, {4, 4, Rational(4, 5)}, {1, 2, Rational(0)},
                 {1, 3, Rational(1, 2)}, {1, 4, Rational(1, 2)}, {2, 2, Rational(0)}};
    for (const auto& row : table) {
      const auto got = L_general(row.t1, row.t2);
      o.require(got == row.want, "L(" + std::to_string(row.t1) + "," + std::to_string(row.t2) + ") = " + got.str());
    }
  });

  criterion(2, "recursion identity and coefficient signs", [](Outcome& o) {
    int bad = 0, signBad = 0;
    for (std::int64_t k = 2; k <= 50; ++k) {
      const auto rc = recursion_constants(k);
      bad += rc.e / (1 - rc.c) != L_homothety(k);
      const auto co = homothety_coefficients(k);
      signBad += (co.logR > 0 && co.logT > 0) != (k >= 5);
    }
    o.require(bad == 0, "e/(1-c) = L(k) for 2 <= k <= 50 (" + std::to_string(bad) + " mismatches)");
    o.require(signBad == 0, "both log coefficients positive iff k >= 5 (" + std::to_string(signBad) + " mismatches)");
    const auto c5 = homothety_coefficients(5);
    o.note("k = 5 coefficients: log r " + c5.logR.str() + ", log t " + c5.logT.str());
    int pairBad = 0, pairs = 0;
    for (std::int64_t t2 = 1; t2 <= 40; ++t2)
      for (std::int64_t t1 = 1; t1 <= t2; ++t1) {
        if (t2 % t1 || t1 * t2 <= 4 || t1 * t2 > 400) continue;
        ++pairs;
        pairBad += !(general_coefficient_printed(t1, t2) > 0) || !(general_coefficient_derived(t1, t2) > 0);
      }
    o.require(pairBad == 0, "general log t coefficient positive for all " + std::to_string(pairs) +
                                " divisor pairs with 4 < d <= 400 (" + std::to_string(pairBad) + " failures)");
    for (auto [t1, t2] : {std::pair{1, 2}, {1, 3}, {1, 4}, {2, 2}}) {
      const auto p = general_coefficient_printed(t1, t2), d = general_coefficient_derived(t1, t2);
      o.require(p <= 0 && d <= 0, "excluded (" + std::to_string(t1) + "," + std::to_string(t2) +
                                      "): display " + p.str() + ", derived " + d.str());
    }
  });

  criterion(3, "preimage exactness and cardinality bounds", [](Outcome& o) {
    const auto f = ComposedEndo::homothety(5, k5_default_profile(), {4.0, 4.0}, 1.1);
    require_suite(o, "k=5:", preimage_invariants(f, 1000, 101));
    const auto& g = general();
    require_suite(o, "(2,4):", preimage_invariants(make_endo(g.setup), 1000, 102));
  });

  criterion(4, "recursive and direct series agree", [](Outcome& o) {
    const auto f = ComposedEndo::homothety(5, k5_default_profile(), {4.0, 4.0}, 1.1);
    const auto t = oracle_equivalence(f, 100, 3, 103);
    o.require(t.violations == 0, "n = 3, 100 samples: " + std::to_string(t.violations) +
                                     " differences >= 1e-8, largest " + num(t.worst));
  });

  criterion(5, "cone census", [](Outcome& o) {
    const auto [t, r] = k5_certified_shears();
    o.note("certified shears t = " + num(t) + ", r = " + num(r));
    const auto f = ComposedEndo::homothety(5, k5_default_profile(), {t, r}, 1.1);
    const auto suite = census_invariants(f, 1000, 3, 104);
    require_suite(o, "", suite);
    o.note("smallest a_i - bound_i margin " + num(suite.find("census-recursion")->worst));
  });

  criterion(6, "certificate and evidence at t = r = 4 with the sine-of-a-tenth data", [&](Outcome& o) {
    const HomothetyCertificateInput in{5, paperA, paperB, 1.1, 4.0, 4.0};
    const auto rep = limit_Ji_bound_homothety(in);
    o.note("a = " + num(paperA) + ", b = " + num(paperB) + ", threshold 2 alpha / a = " + num(rep.threshold));
    o.note("coefficients: log r " + rep.coeffLogR.str() + ", log t " + rep.coeffLogT.str());
    o.note("limit bound: derived " + num(rep.limitJiLowerBound) + ", printed-formula " + num(rep.limitPrinted));
    o.require(rep.verdict == Verdict::Certified, std::string("closed-form verdict ") + to_string(rep.verdict));
    const auto part = build_partition(0.05, 5, {0.25, 0.75}, true);
    ShearProfile prof{TrigPoly::sine(), paperA, paperB, part, TrigPoly::sine().sup_bound(3)};
    const auto f = ComposedEndo::homothety(5, prof, {4.0, 4.0}, 1.1);
    const auto grid = grid_min_J(f, 3, {32, 32, 16});
    o.require(grid.minAvgI > 0.0, "grid 32x32x16, n = 3: min (1/3) I = " + num(grid.minAvgI));
  });

  criterion(7, "Lyapunov exponents", [](Outcome& o) {
    const auto [t, r] = k5_certified_shears();
    const auto f = ComposedEndo::homothety(5, k5_default_profile(), {t, r}, 1.1);
    const long double logd = std::log(25.0);
    double lo = INFINITY;
    int below = 0, unpaired = 0;
    for (std::uint64_t seed = 1; seed <= 32; ++seed) {
      const auto est = lyapunov_forward(f, seeded_point(seed), 100000);
      lo = std::min(lo, static_cast<double>(est.lambdaPlus));
      below += !(est.lambdaPlus > logd) || !(est.lambdaMinus < 0.0L);
      unpaired += est.lambdaPlus + est.lambdaMinus != logd;
    }
    o.note("t = " + num(t) + ", r = " + num(r) + ", smallest lambda+ " + num(lo) + ", log 25 = " + num(static_cast<double>(logd)));
    o.require(below == 0, "lambda+ > log 25 at all 32 seeds (" + std::to_string(below) + " failures)");
    o.require(unpaired == 0, "lambda+ + lambda- = log 25 exactly (" + std::to_string(unpaired) + " failures)");
  });

  criterion(8, "general (2,4) pipeline", [](Outcome& o) {
    const auto& g = general();
    const auto& s = g.setup;
    o.require(s.change && is_valid_coordinate_change(g.E, *s.change),
              "coordinate change: G = " + s.change->G.str() + ", P = " + s.change->P.str());
    o.require(s.tildeCheck && s.tildeCheck->ok(), "vertical-shift profile passes its three conditions");
    o.require(s.profileCheck.ok(), "shear profile passes");
    o.require(verify_beta(s.change->G, s.tilde->s, s.beta, 200000),
              "beta = " + num(s.beta) + " re-validated at 10x sampling");
    const auto rep = certify_setup(s);
    o.require(rep.verdict == Verdict::Certified,
              "verdict at scanned t = " + num(s.t) + ": " + to_string(rep.verdict) + ", bound " +
                  num(rep.limitJiLowerBound));
    const auto f = make_endo(s);
    const int n = default_depth(f.degree());
    const auto grid = grid_min_J(f, n, {32, 32, 16});
    o.require(grid.minAvgI > 0.0, "grid 32x32x16, n = " + std::to_string(n) + ": min (1/n) I = " + num(grid.minAvgI));
  });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
