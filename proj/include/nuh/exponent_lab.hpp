#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include "nuh/certificates.hpp"
#include "nuh/endo.hpp"
#include "nuh/error.hpp"
#include "nuh/parallel.hpp"

namespace nuh {

inline constexpr std::uint64_t kDefaultNodeBudget = 4'000'000;

/// Mean over the d preimages of log |(D_y f)^{-1} u|, u normalized first.
inline double I_one_step(const ComposedEndo& f, const TorusPoint& x, const Vec2& u) {
  const auto recs = f.preimages(x);
  const Vec2 w = normalized(u);
  double acc = 0.0;
  for (const auto& rec : recs) acc += std::log(max_norm(rec.invJacobian * w));
  return acc / static_cast<double>(recs.size());
}

inline std::uint64_t tree_size(std::int64_t d, int n) {
  std::uint64_t total = 0, level = 1;
  for (int i = 0; i <= n; ++i) {
    total += level;
    if (level > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(d)) return level;
    level *= static_cast<std::uint64_t>(d);
  }
  return total;
}

inline void check_budget(const ComposedEndo& f, int n, std::uint64_t budget) {
  if (n < 0) throw Error(ErrorKind::InvalidInput, "depth must be non-negative");
  const auto need = tree_size(f.degree(), n);
  if (need > budget)
    throw Error(ErrorKind::Budget, "depth " + std::to_string(n) + " needs " + std::to_string(need) +
                                       " tree nodes, budget is " + std::to_string(budget) + "; use a smaller depth");
}

/// Preimage tree of x to depth n. Level i holds d^i nodes; children of node p at
/// level i occupy [p d, (p+1) d) at level i+1. Each node keeps the inverse Jacobian
/// of the single step from its parent.
struct PreimageTree {
  std::int64_t d = 1;
  std::vector<std::vector<TorusPoint>> points;
  std::vector<std::vector<Mat2>> stepInv;
  std::vector<std::vector<RegionLabel>> hLabels;
};

inline PreimageTree build_tree(const ComposedEndo& f, const TorusPoint& x, int n,
                               std::uint64_t budget = kDefaultNodeBudget) {
  check_budget(f, n, budget);
  PreimageTree tree;
  tree.d = f.degree();
  tree.points.push_back({x});
  tree.stepInv.push_back({Mat2::identity()});
  tree.hLabels.push_back({classify(x, f.partition(), Orientation::Horizontal)});
  std::vector<PreimageRecord> recs;
  for (int i = 0; i < n; ++i) {
    const auto& parents = tree.points[i];
    std::vector<TorusPoint> pts;
    std::vector<Mat2> inv;
    std::vector<RegionLabel> labels;
    pts.reserve(parents.size() * tree.d);
    inv.reserve(parents.size() * tree.d);
    labels.reserve(parents.size() * tree.d);
    for (const auto& p : parents) {
      f.preimages_into(p, recs);
      for (const auto& rec : recs) {
        pts.push_back(rec.y);
        inv.push_back(rec.invJacobian);
        labels.push_back(rec.hLabel);
      }
    }
    tree.points.push_back(std::move(pts));
    tree.stepInv.push_back(std::move(inv));
    tree.hLabels.push_back(std::move(labels));
  }
  return tree;
}

struct IExpansionSeries {
  std::vector<double> J;        // J_0 .. J_{n-1}
  std::vector<double> partial;  // I(x,u;f^{i+1}) = J_0 + ... + J_i
};

/// Per-level J_i for one direction on a prebuilt tree; normalizes the pulled-back
/// vector at every level.
inline IExpansionSeries series_on_tree(const PreimageTree& tree, const Vec2& u) {
  IExpansionSeries out;
  const int n = static_cast<int>(tree.points.size()) - 1;
  std::vector<Vec2> parent{normalized(u)}, child;
  double weight = 1.0, sum = 0.0;
  for (int i = 0; i < n; ++i) {
    weight /= static_cast<double>(tree.d);
    const auto& inv = tree.stepInv[i + 1];
    child.resize(inv.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < inv.size(); ++c) {
      const Vec2 w = inv[c] * parent[c / tree.d];
      const double nrm = max_norm(w);
      acc += std::log(nrm);
      child[c] = w * (1.0 / nrm);
    }
    const double J = acc * weight;
    sum += J;
    out.J.push_back(J);
    out.partial.push_back(sum);
    parent.swap(child);
  }
  return out;
}

/// Recursive evaluation: J_i = (1/d^i) sum over f^{-i}(x) of I(y, normalized pulled-back u; f).
inline IExpansionSeries I_n_recursive(const ComposedEndo& f, const TorusPoint& x, const Vec2& u, int n,
                                      std::uint64_t budget = kDefaultNodeBudget) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "recursive series needs n >= 1");
  return series_on_tree(build_tree(f, x, n, budget), u);
}

/// Direct evaluation: compose inverse Jacobians along every branch of f^{-n}(x).
inline double I_n_direct(const ComposedEndo& f, const TorusPoint& x, const Vec2& u, int n,
                         std::uint64_t budget = kDefaultNodeBudget) {
  check_budget(f, n, budget);
  if (n == 0) return 0.0;
  const Vec2 w0 = normalized(u);
  const double dn = std::pow(static_cast<double>(f.degree()), n);
  double acc = 0.0;
  // Depth-first over branches keeps memory at O(n d).
  std::vector<std::vector<PreimageRecord>> stack(static_cast<std::size_t>(n));
  const auto visit = [&](auto&& self, const TorusPoint& p, const Mat2& prod, int depth) -> void {
    auto& recs = stack[static_cast<std::size_t>(depth)];
    f.preimages_into(p, recs);
    for (std::size_t c = 0; c < recs.size(); ++c) {
      const auto& rec = stack[static_cast<std::size_t>(depth)][c];
      const Mat2 m = rec.invJacobian * prod;
      if (depth + 1 == n)
        acc += std::log(max_norm(m * w0));
      else
        self(self, rec.y, m, depth + 1);
    }
  };
  visit(visit, x, Mat2::identity(), 0);
  return acc / dn;
}

struct ConeCensus {
  std::vector<std::uint64_t> g, b;
  std::vector<double> a;
  std::vector<double> bound;
  int violations = 0;
};

/// Lower bound on a_i from the vertical-cone recursion of the map's case.
inline RecursionConstants census_recursion(const ComposedEndo& f) {
  if (f.is_homothety()) return recursion_constants(f.scale());
  const auto dv = elementary_divisors(f.matrix());
  return recursion_constants_general(dv.tau1, dv.tau2);
}

inline ConeCensus census_on_tree(const ComposedEndo& f, const PreimageTree& tree, const Vec2& u) {
  ConeCensus out;
  const auto rc = census_recursion(f);
  const double beta = f.cone();
  const int n = static_cast<int>(tree.points.size()) - 1;
  std::vector<Vec2> parent{normalized(u)}, child;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) {
      const auto& inv = tree.stepInv[i];
      child.resize(inv.size());
      for (std::size_t c = 0; c < inv.size(); ++c) child[c] = normalized(inv[c] * parent[c / tree.d]);
      parent.swap(child);
    }
    std::uint64_t g = 0;
    for (const auto& w : parent) g += in_vertical_cone(w, beta);
    out.g.push_back(g);
    out.b.push_back(parent.size() - g);
    out.a.push_back(static_cast<double>(g) / static_cast<double>(parent.size()));
    out.bound.push_back(to_double(recursion_bound(rc, static_cast<unsigned>(i))));
    if (out.a.back() < out.bound.back() - 1e-9) ++out.violations;
  }
  return out;
}

inline ConeCensus cone_census(const ComposedEndo& f, const TorusPoint& x, const Vec2& u, int n,
                              std::uint64_t budget = kDefaultNodeBudget) {
  return census_on_tree(f, build_tree(f, x, n, budget), u);
}

/// D unit directions over both cones: the four boundary rays, the two axes, and the
/// rest split evenly between the horizontal and vertical sectors.
inline std::vector<Vec2> direction_fan(double alpha, int count = 16) {
  if (count < 6) throw Error(ErrorKind::InvalidInput, "direction fan needs at least 6 directions");
  std::vector<Vec2> fan{{1.0, alpha}, {1.0, -alpha}, {-1.0, alpha}, {-1.0, -alpha}, {1.0, 0.0}, {0.0, 1.0}};
  const int rest = count - 6;
  const int nh = rest / 2, nv = rest - nh;
  const double edge = std::atan(alpha);
  for (int i = 1; i <= nh; ++i) {
    const double th = -edge + 2.0 * edge * i / (nh + 1);
    if (std::abs(th) < 1e-12) continue;
    fan.push_back({std::cos(th), std::sin(th)});
  }
  for (int i = 1; i <= nv; ++i) {
    const double th = edge + (std::numbers::pi - 2.0 * edge) * i / (nv + 1);
    fan.push_back({std::cos(th), std::sin(th)});
  }
  while (static_cast<int>(fan.size()) < count) fan.push_back({1.0, alpha * 0.5});
  for (auto& u : fan) u = normalized(u);
  return fan;
}

struct GridSpec {
  int width = 32;
  int height = 32;
  int directions = 16;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridMinResult {
  std::vector<double> minJ;  // per level i < n
  double minAvgI = std::numeric_limits<double>::infinity();
  TorusPoint argX;
  Vec2 argU;
  std::uint64_t samples = 0;
};

inline GridMinResult grid_min_J(const ComposedEndo& f, int n, const GridSpec& grid,
                                std::uint64_t budget = kDefaultNodeBudget, unsigned workers = default_workers()) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "depth must be >= 1");
  if (grid.width < 1 || grid.height < 1) throw Error(ErrorKind::InvalidInput, "empty spatial grid");
  check_budget(f, n, budget);
  const auto fan = direction_fan(f.cone(), grid.directions);
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  std::vector<GridMinResult> per(cells);
  parallel_for(
      cells,
      [&](std::size_t idx) {
        const TorusPoint x{(static_cast<double>(idx % grid.width) + 0.5) / grid.width,
                           (static_cast<double>(idx / grid.width) + 0.5) / grid.height};
        const auto tree = build_tree(f, x, n, budget);
        auto& res = per[idx];
        res.minJ.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
        for (const auto& u : fan) {
          const auto s = series_on_tree(tree, u);
          for (int i = 0; i < n; ++i) res.minJ[i] = std::min(res.minJ[i], s.J[i]);
          const double avg = s.partial.back() / n;
          if (avg < res.minAvgI) res.minAvgI = avg, res.argX = x, res.argU = u;
        }
        res.samples = fan.size();
      },
      workers);
  GridMinResult out;
  out.minJ.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (const auto& r : per) {
    for (int i = 0; i < n; ++i) out.minJ[i] = std::min(out.minJ[i], r.minJ[i]);
    if (r.minAvgI < out.minAvgI) out.minAvgI = r.minAvgI, out.argX = r.argX, out.argU = r.argU;
    out.samples += r.samples;
  }
  return out;
}

/// The pair is kept in extended precision: for a double lambda+ of moderate size the
/// difference log d - lambda+ is then exact, so lambda+ + lambda- == log d holds as stated.
struct LyapunovEstimate {
  long double lambdaPlus = 0.0L;
  long double lambdaMinus = 0.0L;
  std::uint64_t steps = 0;
  TorusPoint start;
};

/// Top exponent by pushing a tangent vector forward and renormalizing each step.
inline LyapunovEstimate lyapunov_forward(const ComposedEndo& f, const TorusPoint& x0, std::uint64_t N,
                                         std::uint64_t burnIn = 1000) {
  if (N < 1) throw Error(ErrorKind::InvalidInput, "need at least one step");
  TorusPoint x = x0;
  Vec2 v = normalized({1.0, 1.0});
  double acc = 0.0;
  for (std::uint64_t i = 0; i < burnIn + N; ++i) {
    const Vec2 w = f.jacobian(x) * v;
    const double nrm = max_norm(w);
    if (i >= burnIn) acc += std::log(nrm);
    v = w * (1.0 / nrm);
    x = f.apply(x);
  }
  const long double logd = std::log(static_cast<double>(f.degree()));
  LyapunovEstimate out;
  out.lambdaPlus = acc / static_cast<double>(N);
  out.lambdaMinus = logd - out.lambdaPlus;
  if (out.lambdaPlus + out.lambdaMinus != logd)
    throw Error(ErrorKind::InvalidInput, "exponent too large to pair exactly with log d");
  out.steps = N;
  out.start = x0;
  return out;
}

/// log of a bound on sup |D f| in the max operator norm.
inline double lyapunov_upper_bound(const ComposedEndo& f) {
  const double E = f.matrix().to_real().max_norm();
  const double dv = 1.0 + f.r() * (f.is_homothety() ? f.profile().s.sup_bound(1) : f.tilde()->s.sup_bound(1));
  const double dh = 1.0 + f.t() * f.profile().s.sup_bound(1);
  return std::log(E * dv * dh);
}

inline TorusPoint seeded_point(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double a = U(rng);
  return TorusPoint::wrapped(a, U(rng));
}

/// CSV with columns i, J_i, partialSum, g_i, a_i, bound_i.
inline void write_series_csv(std::ostream& os, const IExpansionSeries& s, const ConeCensus& c) {
  os << "i,J_i,partialSum,g_i,a_i,bound_i\n";
  os.precision(17);
  for (std::size_t i = 0; i < s.J.size(); ++i) {
    os << i << ',' << s.J[i] << ',' << s.partial[i] << ',';
    if (i < c.g.size())
      os << c.g[i] << ',' << c.a[i] << ',' << c.bound[i];
    else
      os << ",,";
    os << '\n';
  }
}

}  // namespace nuh
