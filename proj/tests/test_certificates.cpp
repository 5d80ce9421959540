#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fixtures.hpp"
#include "nuh/certificates.hpp"
#include "support.hpp"

using namespace nuh;
using nuh::testing::general_case;

namespace {

// Reduced fraction p/q compared against a multiprecision rational.
::testing::AssertionResult equals_fraction(const Rational& got, long long p, long long q) {
  const long long g = std::gcd(p, q);
  p /= g;
  q /= g;
  if (q < 0) p = -p, q = -q;
  if (got == Rational(p, q)) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << got.str() << " != " << p << "/" << q;
}

long long floor_half(long long m) { return (m - 1) / 2; }

const double kPaperA = 2.0 * std::numbers::pi * std::sin(std::numbers::pi / 10);
const double kPaperB = 2.0 * std::numbers::pi;

}  // namespace

TEST(Constants, HomothetyProportion) {
  EXPECT_TRUE(equals_fraction(L_homothety(5), 2, 3));
  EXPECT_TRUE(equals_fraction(L_homothety(2), 0, 1));
  EXPECT_TRUE(equals_fraction(L_homothety(7), 3, 4));
  EXPECT_NUH_ERROR(L_homothety(1), ErrorKind::InvalidInput);
}

TEST(Constants, RecursionForFive) {
  const auto rc = recursion_constants(5);
  EXPECT_TRUE(equals_fraction(rc.c, 4, 25));
  EXPECT_TRUE(equals_fraction(rc.e, 14, 25));
  EXPECT_TRUE(equals_fraction(recursion_lower_bound(5, 0), 0, 1));
  EXPECT_NEAR(to_double(recursion_lower_bound(5, 60)), 2.0 / 3.0, 1e-15);
}

TEST(Constants, FixedPointIdentityUpToFifty) {
  for (long long k = 2; k <= 50; ++k) {
    const long long c = floor_half(k);
    // Long-hand: e / (1 - c) with e = c(k+c)/k^2 and 1 - c' = (k^2 - (k-1)^2 + c(k-1+c))/k^2.
    const long long num = c * (k + c);
    const long long den = k * k - (k - 1) * (k - 1) + c * (k - 1 + c);
    const auto rc = recursion_constants(k);
    EXPECT_EQ(rc.e / (1 - rc.c), L_homothety(k)) << k;
    EXPECT_TRUE(equals_fraction(L_homothety(k), num, den)) << k;
  }
}

TEST(Constants, GeneralProportionTable) {
  EXPECT_TRUE(equals_fraction(L_general(2, 4), 2, 3));
  EXPECT_TRUE(equals_fraction(L_general(3, 3), 3, 4));
  EXPECT_TRUE(equals_fraction(L_general(4, 4), 4, 5));
  EXPECT_TRUE(equals_fraction(L_general(1, 2), 0, 1));
  EXPECT_TRUE(equals_fraction(L_general(1, 3), 1, 2));
  EXPECT_TRUE(equals_fraction(L_general(1, 4), 1, 2));
  EXPECT_TRUE(equals_fraction(L_general(2, 2), 0, 1));
}

TEST(Coefficients, FiveGivesOneFifthEach) {
  const auto co = homothety_coefficients(5);
  EXPECT_TRUE(equals_fraction(co.logR, 1, 5));
  EXPECT_TRUE(equals_fraction(co.logT, 1, 5));
}

TEST(Coefficients, PositiveExactlyFromFive) {
  for (long long k = 2; k <= 50; ++k) {
    const auto co = homothety_coefficients(k);
    const bool both = co.logR > 0 && co.logT > 0;
    EXPECT_EQ(both, k >= 5) << k << ": " << co.logR.str() << ", " << co.logT.str();
  }
}

TEST(Coefficients, PrintedGeneralDisplay) {
  EXPECT_TRUE(equals_fraction(general_coefficient_printed(2, 4), 1, 6));
  EXPECT_TRUE(equals_fraction(general_coefficient_printed(1, 4), -1, 4));
  EXPECT_TRUE(equals_fraction(general_coefficient_printed(3, 3), 1, 3));
}

TEST(Coefficients, GeneralSignMatchesDegreeThreshold) {
  for (long long t2 = 1; t2 <= 30; ++t2)
    for (long long t1 = 1; t1 <= t2; ++t1) {
      if (t2 % t1 != 0 || t1 * t2 > 60) continue;
      const bool big = t1 * t2 > 4;
      EXPECT_EQ(general_coefficient_printed(t1, t2) > 0, big) << t1 << "," << t2;
      EXPECT_EQ(general_coefficient_derived(t1, t2) > 0, big) << t1 << "," << t2;
      // Derived coefficient simplifies to (tau1 c - 1)/(1 + tau1 c).
      const long long c = floor_half(t2);
      EXPECT_TRUE(equals_fraction(general_coefficient_derived(t1, t2), t1 * c - 1, 1 + t1 * c));
    }
}

TEST(OneStep, PrintedLogSlopes) {
  HomothetyCertificateInput in{5, kPaperA, kPaperB, 1.1, 1e8, 1e8};
  const auto base = V_H_bounds_homothety(in);
  auto r2 = in;
  r2.r = 1e9;
  const auto dr = V_H_bounds_homothety(r2);
  auto t2 = in;
  t2.t = 1e9;
  const auto dt = V_H_bounds_homothety(t2);
  const double l = std::log(10.0);
  EXPECT_NEAR((dr.V - base.V) / l, 16.0 / 25, 1e-6);
  EXPECT_NEAR((dt.V - base.V) / l, 9.0 / 25, 1e-6);
  EXPECT_NEAR((dr.H - base.H) / l, -17.0 / 25, 1e-6);
}

TEST(OneStep, PreconditionsEnforced) {
  HomothetyCertificateInput in{5, kPaperA, kPaperB, 1.1, 1.0, 4.0};
  EXPECT_NUH_ERROR(V_H_bounds_homothety(in), ErrorKind::PreconditionsUnmet);
  EXPECT_EQ(limit_Ji_bound_homothety(in).verdict, Verdict::PreconditionsUnmet);
}

TEST(Counts, MinimisationMatchesEnumeration) {
  const double bs[][3] = {{50.0, 0.2, 0.01}, {3.0, 7.0, 0.5}, {0.1, 0.2, 0.3}, {9.0, 9.0, 9.0}};
  for (const auto& b : bs)
    for (long long total : {4, 9, 25})
      for (long long m1 = 0; m1 <= total; m1 += 3)
        for (long long m12 = m1; m12 <= total; m12 += 2) {
          double best = INFINITY;
          for (long long n1 = 0; n1 <= total; ++n1)
            for (long long n2 = 0; n2 <= total; ++n2)
              for (long long n3 = 0; n3 <= total; ++n3) {
                if (n1 + n2 + n3 != total || n1 < m1 || n1 + n2 < m12) continue;
                best = std::min(best, (n1 * std::log(b[0]) + n2 * std::log(b[1]) + n3 * std::log(b[2])) / total);
              }
          ASSERT_NEAR(min_over_counts(b[0], b[1], b[2], total, m1, m12), best, 1e-12);
        }
}

TEST(Homothety, TouchingPartitionDataAtFour) {
  const auto rep = limit_Ji_bound_homothety({5, kPaperA, kPaperB, 1.1, 4.0, 4.0});
  EXPECT_NEAR(rep.threshold, 2.2 / kPaperA, 1e-12);
  EXPECT_TRUE(equals_fraction(rep.coeffLogR, 1, 5));
  EXPECT_TRUE(std::isfinite(rep.limitJiLowerBound));
  EXPECT_TRUE(std::isfinite(rep.limitPrinted));
  EXPECT_EQ(rep.verdict, rep.limitJiLowerBound > 0 ? Verdict::Certified : Verdict::NotCertified);
}

TEST(Homothety, LargeShearsCertify) {
  const auto rep = limit_Ji_bound_homothety({5, kPaperA, kPaperB, 1.1, 1e4, 1e4});
  EXPECT_EQ(rep.verdict, Verdict::Certified);
  EXPECT_GT(rep.limitJiLowerBound, 0.0);
}

TEST(Homothety, DerivedLimitBelowPrinted) {
  // The bucket-derived value is the worst case over admissible counts, so it never exceeds the
  // count assignment the printed formula fixes.
  for (double t : {5.0, 20.0, 300.0}) {
    const auto rep = limit_Ji_bound_homothety({5, kPaperA, kPaperB, 1.1, t, t});
    EXPECT_LE(rep.limitJiLowerBound, rep.limitPrinted + 1e-9) << t;
  }
}

TEST(Scan, VerdictsMonotoneInBothShears) {
  const auto grid = geometric_grid(1.0, 1e4, 25);
  const auto scan = scan_parameters({5, kPaperA, kPaperB, 1.1, 0, 0}, grid, grid);
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (scan.rows[i * n + j].verdict != Verdict::Certified) continue;
      if (i + 1 < n) EXPECT_EQ(scan.rows[(i + 1) * n + j].verdict, Verdict::Certified);
      if (j + 1 < n) EXPECT_EQ(scan.rows[i * n + j + 1].verdict, Verdict::Certified);
    }
  ASSERT_TRUE(scan.minimal.has_value());
  EXPECT_EQ(limit_Ji_bound_homothety({5, kPaperA, kPaperB, 1.1, scan.minimal->first, scan.minimal->second}).verdict,
            Verdict::Certified);
}

TEST(Scan, BelowThresholdAllUnmet) {
  const auto scan = scan_parameters({5, kPaperA, kPaperB, 1.1, 0, 0}, {0.5, 1.0}, {0.5, 1.0});
  for (const auto& row : scan.rows) EXPECT_EQ(row.verdict, Verdict::PreconditionsUnmet);
  EXPECT_FALSE(scan.minimal.has_value());
  EXPECT_NUH_ERROR(scan_parameters(HomothetyCertificateInput{}, {}, {1.0}), ErrorKind::InvalidInput);
}

TEST(Beta, FlatProfileReturnsAlphaWithMargin) {
  const IntMatrix G{4, 2, 0, 2};
  const double beta = estimate_beta(G, TrigPoly(0.0, {}), 8.0);
  EXPECT_NEAR(beta, 8.0 * kBetaMargin, 1e-4);
}

TEST(Beta, BuiltInProfileSurvivesDenserCheck) {
  const auto& gc = general_case();
  EXPECT_GT(gc.beta, gc.alpha);
  EXPECT_TRUE(verify_beta(gc.G, gc.tilde.s, gc.beta, 200000));
}

TEST(Expansion, FlatProfileMatchesDirectMinimum) {
  const IntMatrix G{4, 2, 0, 2};
  const double beta = 8.0 * kBetaMargin;
  const auto e = estimate_ev_eh(G, TrigPoly(0.0, {}), beta, 4, 400);
  const Mat2 inv = G.to_real().inverse();
  double ev = INFINITY;
  for (int i = 0; i <= 100000; ++i) {
    const double u1 = -1.0 / beta + 2.0 / beta * i / 100000.0;
    ev = std::min(ev, max_norm(inv * Vec2{u1, 1.0}));
  }
  EXPECT_NEAR(e.ev, ev * kExpansionMargin, 1e-4 * ev);
}

TEST(Expansion, StableUnderRefinement) {
  const auto& gc = general_case();
  const auto fine = estimate_ev_eh(gc.G, gc.tilde.s, gc.beta, 4000, 800);
  EXPECT_GT(gc.e.ev, 0.0);
  EXPECT_GT(gc.e.eh, 0.0);
  EXPECT_NEAR(fine.ev / gc.e.ev, 1.0, 0.01);
  EXPECT_NEAR(fine.eh / gc.e.eh, 1.0, 0.01);
}

TEST(General, ScanFindsCertifiedShear) {
  const auto& gc = general_case();
  GeneralCertificateInput in{2, 4, gc.profile.a, gc.profile.b, gc.beta, 0.0, gc.e.ev, gc.e.eh};
  const auto grid = geometric_grid(1.0, 1e7, 200);
  const auto scan = scan_parameters(in, grid);
  ASSERT_TRUE(scan.minimal.has_value());
  const double tstar = scan.minimal->first;
  in.t = tstar;
  const auto rep = certificate_general(in);
  EXPECT_EQ(rep.verdict, Verdict::Certified);
  EXPECT_TRUE(equals_fraction(rep.coeffLogTPrinted, 1, 6));
  EXPECT_TRUE(equals_fraction(rep.coeffLogT, 1, 3));
  // The grid point just below is not certified.
  const auto it = std::find(grid.begin(), grid.end(), tstar);
  ASSERT_NE(it, grid.begin());
  in.t = *(it - 1);
  EXPECT_NE(certificate_general(in).verdict, Verdict::Certified);
}

TEST(General, RejectsNonPositiveExpansion) {
  EXPECT_NUH_ERROR(certificate_general({2, 4, 1.0, 2.0, 9.0, 100.0, 0.0, 1.0}), ErrorKind::InvalidInput);
}

TEST(Determinant, LogDegreeAndMembershipMargin) {
  const auto f = nuh::testing::k5_endo();
  const auto m = C_det_and_U1(f, 0.1);
  EXPECT_NEAR(m.Cdet, std::log(25.0), 1e-15);
  EXPECT_NEAR(m.u1Margin, 0.1 + 0.5 * std::log(25.0), 1e-15);
  EXPECT_NEAR(C_det_and_U1(general_case().endo(100.0), 0.0).Cdet, std::log(8.0), 1e-15);
}

TEST(Report, JsonCarriesExactConstants) {
  const auto rep = limit_Ji_bound_homothety({5, kPaperA, kPaperB, 1.1, 4.0, 4.0});
  const auto j = to_json(rep);
  EXPECT_EQ(j["L"]["exact"], "2/3");
  EXPECT_EQ(j["coeffLogT"]["exact"], "1/5");
}
