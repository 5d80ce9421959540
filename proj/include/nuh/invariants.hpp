#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "nuh/certificates.hpp"
#include "nuh/endo.hpp"
#include "nuh/exponent_lab.hpp"

namespace nuh {

inline constexpr double kRoundTripTolerance = 1e-9;
inline constexpr double kOracleTolerance = 1e-8;

struct Tally {
  std::string name;
  std::uint64_t checks = 0;
  std::uint64_t violations = 0;
  double worst = 0.0;  // largest error, or smallest margin for bounds
  std::string firstFailure;

  void record(bool ok, const std::string& what) {
    ++checks;
    if (!ok && violations++ == 0) firstFailure = what;
  }
};

struct InvariantSuite {
  std::deque<Tally> tallies;  // stable references while growing

  Tally& operator[](const std::string& name) {
    for (auto& t : tallies)
      if (t.name == name) return t;
    tallies.push_back({name});
    return tallies.back();
  }
  const Tally* find(const std::string& name) const {
    for (const auto& t : tallies)
      if (t.name == name) return &t;
    return nullptr;
  }
  bool ok() const {
    return std::all_of(tallies.begin(), tallies.end(), [](const Tally& t) { return t.violations == 0; });
  }
  void merge(const InvariantSuite& other) {
    for (const auto& t : other.tallies) {
      auto& mine = (*this)[t.name];
      if (mine.violations == 0 && t.violations > 0) mine.firstFailure = t.firstFailure;
      if (mine.checks == 0) mine.worst = t.worst;
      mine.checks += t.checks;
      mine.violations += t.violations;
      mine.worst = std::max(mine.worst, t.worst);
    }
  }
};

inline nlohmann::json to_json(const InvariantSuite& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : s.tallies) {
    nlohmann::json row{{"name", t.name}, {"checks", t.checks}, {"violations", t.violations}, {"worst", t.worst}};
    if (t.violations) row["firstFailure"] = t.firstFailure;
    j.push_back(row);
  }
  return j;
}

inline std::string point_str(const TorusPoint& x) {
  return "(" + std::to_string(x.x1) + ", " + std::to_string(x.x2) + ")";
}

/// Uniform random direction strictly inside the vertical or horizontal cone of aperture `cone`.
inline Vec2 random_cone_direction(std::mt19937_64& rng, double cone, bool vertical) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (;;) {
    const double s = U(rng);
    const Vec2 u = vertical ? Vec2{s / cone, 1.0} : Vec2{1.0, s * cone};
    if (in_vertical_cone(u, cone) == vertical && std::abs(s) < 1.0) return u;
  }
}

/// Fiber size, distinctness, round trip, inverse Jacobian and the region counts of the
/// covering: homothety at most k critical and at least k floor((k-1)/2) on each good side;
/// general at most one critical and at least tau1 floor((tau2-1)/2) on each good side.
inline InvariantSuite preimage_invariants(const ComposedEndo& f, int samples, std::uint64_t seed) {
  InvariantSuite out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto d = f.degree();
  std::int64_t maxCritical = 1, minGood = 0;
  if (f.is_homothety()) {
    maxCritical = f.scale();
    minGood = f.scale() * half_floor(f.scale());
  } else {
    const auto dv = elementary_divisors(f.matrix());
    minGood = dv.tau1 * half_floor(dv.tau2);
  }
  auto& degree = out["fiber-size"];
  auto& distinct = out["distinct"];
  auto& roundTrip = out["round-trip"];
  auto& inverse = out["inverse-jacobian"];
  auto& critical = out["critical-count"];
  auto& good = out["good-count"];
  for (int s = 0; s < samples; ++s) {
    const double x1 = U(rng);
    const TorusPoint x = TorusPoint::wrapped(x1, U(rng));
    const auto recs = f.preimages(x);
    degree.record(static_cast<std::int64_t>(recs.size()) == d, point_str(x));
    double minSep = 1.0;
    int nc = 0, np = 0, nm = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      for (std::size_t j = i + 1; j < recs.size(); ++j) minSep = std::min(minSep, torus_distance(recs[i].y, recs[j].y));
      const double err = torus_distance(f.apply(recs[i].y), x);
      roundTrip.worst = std::max(roundTrip.worst, err);
      roundTrip.record(err < kRoundTripTolerance, point_str(x) + " error " + std::to_string(err));
      const Mat2 p = recs[i].invJacobian * f.jacobian(recs[i].y);
      const Mat2 J = f.jacobian(recs[i].y);
      const double scale = 1.0 + J.max_norm() * recs[i].invJacobian.max_norm();
      const double perr = std::max({std::abs(p.a11 - 1.0), std::abs(p.a12), std::abs(p.a21), std::abs(p.a22 - 1.0)});
      inverse.worst = std::max(inverse.worst, perr / scale);
      inverse.record(perr <= 1e-10 * scale, point_str(x));
      const int sg = label_sign(recs[i].hLabel);
      nc += sg == 0;
      np += sg > 0;
      nm += sg < 0;
    }
    distinct.record(minSep > kRoundTripTolerance, point_str(x));
    critical.worst = std::max(critical.worst, static_cast<double>(nc));
    critical.record(nc <= maxCritical, point_str(x) + " has " + std::to_string(nc) + " critical preimages");
    good.record(np >= minGood && nm >= minGood,
                point_str(x) + " good counts " + std::to_string(np) + "/" + std::to_string(nm));
  }
  return out;
}

/// Bucket cardinalities, cone invariance of the pullback and the branch lower bounds.
/// Meaningful only when the shear preconditions hold; the caller decides.
/// The homothety witness counts |B| and |D| on their own go to `witnesses` when given.
inline InvariantSuite bucket_invariants(const ComposedEndo& f, int samples, std::uint64_t seed,
                                        const ExpansionConstants& e = {}, InvariantSuite* witnesses = nullptr) {
  InvariantSuite out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double cone = f.cone();
  const std::int64_t k = f.scale(), ck = half_floor(k);
  std::int64_t tau1 = 1, c = 0, d = f.degree();
  if (!f.is_homothety()) {
    const auto dv = elementary_divisors(f.matrix());
    tau1 = dv.tau1;
    c = half_floor(dv.tau2);
  }
  InvariantSuite scratch;
  auto& wit = witnesses ? *witnesses : scratch;
  auto& invariance = out["cone-invariance"];
  auto& bounds = out["branch-bounds"];
  std::vector<PreimageRecord> recs;
  for (int s = 0; s < samples; ++s) {
    const double x1 = U(rng);
    const TorusPoint x = TorusPoint::wrapped(x1, U(rng));
    f.preimages_into(x, recs);
    for (bool vertical : {true, false}) {
      const Vec2 u = normalized(random_cone_direction(rng, cone, vertical));
      const auto split = partition_preimages(f, recs, u);
      const std::string where = point_str(x) + (vertical ? " vertical" : " horizontal");
      const auto n = [&](Bucket b) { return static_cast<std::int64_t>(split.count(b)); };
      if (f.is_homothety() && vertical) {
        out["bucket-A"].record(n(Bucket::A) >= (k - 1) * (k - 1), where);
        out["bucket-A+B"].record(n(Bucket::A) + n(Bucket::B) >= (k - 1) * (k - 1) + ck, where);
        out["bucket-V_h"].record(n(Bucket::VRest) <= 2 * k - 1 - ck, where);
        wit["witness-B"].record(n(Bucket::B) >= ck, where);
      } else if (f.is_homothety()) {
        out["bucket-C"].record(n(Bucket::C) >= (k - 1) * ck, where);
        out["bucket-C+D"].record(n(Bucket::C) + n(Bucket::D) >= ck * (k + ck), where);
        wit["witness-D"].record(n(Bucket::D) >= ck * (1 + ck), where);
      } else if (vertical) {
        out["bucket-A"].record(n(Bucket::A) >= d - 1, where);
      } else {
        out["bucket-D"].record(n(Bucket::D) >= tau1 * c, where);
      }
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const Bucket b = split.buckets[i];
        const auto pb = pullback(recs[i], u);
        const bool contracting = b == Bucket::A || b == Bucket::B || b == Bucket::C || b == Bucket::D;
        if (contracting) invariance.record(in_vertical_cone(pb.direction, cone), where + " bucket " + to_string(b));
        if (!f.is_homothety() && (e.ev <= 0.0 || e.eh <= 0.0)) continue;
        const double lb = branch_lower_bound(f, b, e);
        bounds.record(pb.norm >= lb * (1.0 - 1e-9), where + " bucket " + to_string(b));
      }
    }
  }
  return out;
}

/// Recursive series against direct enumeration at depth n.
inline Tally oracle_equivalence(const ComposedEndo& f, int samples, int n, std::uint64_t seed,
                                std::uint64_t budget = kDefaultNodeBudget) {
  Tally t{"oracle-equivalence"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0), A(0.0, 2.0 * std::numbers::pi);
  for (int s = 0; s < samples; ++s) {
    const double x1 = U(rng);
    const TorusPoint x = TorusPoint::wrapped(x1, U(rng));
    const double th = A(rng);
    const Vec2 u{std::cos(th), std::sin(th)};
    const double rec = I_n_recursive(f, x, u, n, budget).partial.back();
    const double dir = I_n_direct(f, x, u, n, budget);
    const double err = std::abs(rec - dir);
    t.worst = std::max(t.worst, err);
    t.record(err < kOracleTolerance, point_str(x) + " difference " + std::to_string(err));
  }
  return t;
}

/// Cone census at random (x, u): level-one counts against the guaranteed numbers and every
/// level against the recursion bound.
inline InvariantSuite census_invariants(const ComposedEndo& f, int samples, int n, std::uint64_t seed,
                                        std::uint64_t budget = kDefaultNodeBudget) {
  InvariantSuite out;
  check_budget(f, n, budget);
  const double cone = f.cone();
  std::int64_t needV, needH;
  if (f.is_homothety()) {
    const std::int64_t k = f.scale(), ck = half_floor(k);
    needV = (k - 1) * (k - 1) + ck;
    needH = ck * (k + ck);
  } else {
    const auto dv = elementary_divisors(f.matrix());
    needV = f.degree() - 1;
    needH = dv.tau1 * half_floor(dv.tau2);
  }
  auto& level1 = out["census-level-one"];
  auto& recursion = out["census-recursion"];
  std::vector<ConeCensus> results(static_cast<std::size_t>(samples) * 2);
  std::vector<TorusPoint> xs;
  std::vector<Vec2> us;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    const double x1 = U(rng);
    xs.push_back(TorusPoint::wrapped(x1, U(rng)));
    us.push_back(random_cone_direction(rng, cone, true));
    us.push_back(random_cone_direction(rng, cone, false));
  }
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const auto tree = build_tree(f, xs[s], n, budget);
    results[2 * s] = census_on_tree(f, tree, us[2 * s]);
    results[2 * s + 1] = census_on_tree(f, tree, us[2 * s + 1]);
  });
  double worstMargin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& c = results[i];
    const bool vertical = i % 2 == 0;
    const std::string where = point_str(xs[i / 2]) + (vertical ? " vertical" : " horizontal");
    if (c.g.size() > 1) {
      const auto need = static_cast<std::uint64_t>(vertical ? needV : needH);
      level1.record(c.g[1] >= need, where + " g1 = " + std::to_string(c.g[1]));
    }
    for (std::size_t lvl = 0; lvl < c.a.size(); ++lvl) worstMargin = std::min(worstMargin, c.a[lvl] - c.bound[lvl]);
    recursion.record(c.violations == 0, where);
  }
  recursion.worst = worstMargin;
  return out;
}

/// Default depth: the largest n <= 4 whose tree stays near desk scale.
inline int default_depth(std::int64_t d) {
  int n = 1;
  while (n < 4 && tree_size(d, n + 1) <= 20000) ++n;
  return n;
}

}  // namespace nuh
