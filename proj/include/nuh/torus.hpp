#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nuh/error.hpp"
#include "nuh/linalg.hpp"

namespace nuh {

/// Tolerance used for mod-1 membership tests and preimage round trips.
inline constexpr double kModTolerance = 1e-12;

/// Reduce a real number to the circle coordinate in [0, 1).
inline double wrap(double r) {
  if (!std::isfinite(r)) throw Error(ErrorKind::InvalidInput, "wrap of non-finite value");
  double w = r - std::floor(r);
  // r slightly below an integer can round up to exactly 1.0
  if (w >= 1.0) w = 0.0;
  return w;
}

/// Signed distance-free circle gap: the representative of r mod 1 in [-1/2, 1/2).
inline double centered(double r) {
  double w = wrap(r);
  return w >= 0.5 ? w - 1.0 : w;
}

struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;

  static TorusPoint wrapped(double a, double b) { return {wrap(a), wrap(b)}; }
  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// Max-metric distance on the torus.
inline double torus_distance(const TorusPoint& p, const TorusPoint& q) {
  return std::max(std::abs(centered(p.x1 - q.x1)), std::abs(centered(p.x2 - q.x2)));
}

using Direction = Vec2;

inline double max_norm(const Vec2& u) {
  const double n = std::max(std::abs(u.u1), std::abs(u.u2));
  if (!(n > 0.0)) throw Error(ErrorKind::InvalidInput, "zero tangent vector");
  return n;
}

inline Vec2 normalized(const Vec2& u) { return u * (1.0 / max_norm(u)); }

enum class Orientation { Horizontal, Vertical };

struct ConeSpec {
  double alpha;

  explicit ConeSpec(double a) : alpha(a) {
    if (!(a > 1.0) || !std::isfinite(a))
      throw Error(ErrorKind::InvalidInput, "cone aperture must exceed 1");
  }
};

/// Horizontal cone is closed (|u2| <= alpha |u1|); vertical cone is its complement.
inline bool cone_contains(const Vec2& u, const ConeSpec& cone, Orientation o) {
  max_norm(u);
  const bool horizontal = std::abs(u.u2) <= cone.alpha * std::abs(u.u1);
  return o == Orientation::Horizontal ? horizontal : !horizontal;
}

inline bool in_vertical_cone(const Vec2& u, double alpha) {
  return std::abs(u.u2) > alpha * std::abs(u.u1);
}

enum class RegionLabel { GhPlus, GhMinus, Ch, GvPlus, GvMinus, Cv };

inline const char* to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::GhPlus: return "Gh+";
    case RegionLabel::GhMinus: return "Gh-";
    case RegionLabel::Ch: return "Ch";
    case RegionLabel::GvPlus: return "Gv+";
    case RegionLabel::GvMinus: return "Gv-";
    case RegionLabel::Cv: return "Cv";
  }
  return "?";
}

/// +1 for G^+, -1 for G^-, 0 for the critical region.
inline int label_sign(RegionLabel l) {
  switch (l) {
    case RegionLabel::GhPlus:
    case RegionLabel::GvPlus: return 1;
    case RegionLabel::GhMinus:
    case RegionLabel::GvMinus: return -1;
    default: return 0;
  }
}

inline bool is_critical(RegionLabel l) { return label_sign(l) == 0; }

/// Four cyclically ordered circle points z1..z4 with closed critical intervals
/// I1 = [z1,z2], I3 = [z3,z4] of equal length and open good intervals
/// I2 = (z2,z3), I4 = (z4,z1).
class RegionPartition {
 public:
  RegionPartition() = default;
  RegionPartition(double half_size, int divisor, double center1, double center3)
      : half_size_(half_size), divisor_(divisor), center1_(wrap(center1)), center3_(wrap(center3)) {}

  double half_size() const { return half_size_; }
  double critical_length() const { return 2.0 * half_size_; }
  int divisor() const { return divisor_; }
  double center1() const { return center1_; }
  double center3() const { return center3_; }

  double z1() const { return wrap(center1_ - half_size_); }
  double z2() const { return wrap(center1_ + half_size_); }
  double z3() const { return wrap(center3_ - half_size_); }
  double z4() const { return wrap(center3_ + half_size_); }

  /// |I2|, the good interval carrying G^-.
  double minus_length() const { return wrap(center3_ - center1_) - critical_length(); }
  /// |I4|, the good interval carrying G^+.
  double plus_length() const { return 1.0 - wrap(center3_ - center1_) - critical_length(); }

  /// Label of a circle coordinate: -1 on I2, +1 on I4, 0 on I1 u I3 (endpoints critical).
  int circle_sign(double c) const {
    const double len = critical_length();
    const double rel = wrap(c - z1());
    const double s3 = len + minus_length();
    if (rel <= len + kModTolerance || rel >= 1.0 - kModTolerance) return 0;
    if (rel >= s3 - kModTolerance && rel <= s3 + len + kModTolerance) return 0;
    return rel < s3 ? -1 : 1;
  }

 private:
  double half_size_ = 0.0;
  int divisor_ = 1;
  double center1_ = 0.25;
  double center3_ = 0.75;
};

inline RegionLabel classify(const TorusPoint& p, const RegionPartition& part, Orientation o) {
  if (o == Orientation::Horizontal) {
    switch (part.circle_sign(p.x1)) {
      case 1: return RegionLabel::GhPlus;
      case -1: return RegionLabel::GhMinus;
      default: return RegionLabel::Ch;
    }
  }
  switch (part.circle_sign(p.x2)) {
    case 1: return RegionLabel::GvPlus;
    case -1: return RegionLabel::GvMinus;
    default: return RegionLabel::Cv;
  }
}

/// Outcome of checking the three partition requirements plus the size ceiling.
struct PartitionCheck {
  bool ceiling_ok = true;
  bool translation_ok = true;
  bool good_size_ok = true;
  std::vector<std::string> violations;

  bool ok() const { return ceiling_ok && translation_ok && good_size_ok; }
};

/// Distance from r to the lattice (1/q)Z.
inline double lattice_distance(double r, int q) {
  const double scaled = r * q;
  return std::abs(scaled - std::round(scaled)) / q;
}

/// Checks a candidate partition. `ceiling` bounds the critical half-size.
/// Permissive mode accepts equality cases (touching translates, good intervals of
/// exactly the floor size, half-size equal to the ceiling).
inline PartitionCheck check_partition(double half_size, int divisor, std::pair<double, double> centers,
                                      double ceiling, bool permissive) {
  PartitionCheck out;
  if (!(half_size > 0.0) || divisor < 1) {
    out.ceiling_ok = false;
    out.violations.push_back("size: half-size must be positive and divisor >= 1");
    return out;
  }
  const double tol = kModTolerance;
  const double len = 2.0 * half_size;
  out.ceiling_ok = permissive ? half_size <= ceiling + tol : half_size < ceiling - tol;
  if (!out.ceiling_ok)
    out.violations.push_back("size: half-size " + std::to_string(half_size) + " not below ceiling " +
                             std::to_string(ceiling));

  // Translates of I1 by m/divisor meet I3 iff the centre offset is within |I1| of the lattice.
  const double gap = lattice_distance(wrap(centers.second - centers.first), divisor);
  out.translation_ok = permissive ? gap >= len - tol : gap > len + tol;
  if (!out.translation_ok)
    out.violations.push_back("translation: a translate of I1 by a multiple of 1/" + std::to_string(divisor) +
                             " meets I3");

  const double floor_size = static_cast<double>((divisor - 1) / 2) / divisor;
  const double sep = wrap(centers.second - centers.first);
  const double i2 = sep - len;
  const double i4 = 1.0 - sep - len;
  const auto good = [&](double g) { return permissive ? g >= floor_size - tol : g > floor_size + tol; };
  out.good_size_ok = i2 > 0.0 && i4 > 0.0 && good(i2) && good(i4);
  if (!out.good_size_ok)
    out.violations.push_back("good-interval: |I2| = " + std::to_string(i2) + ", |I4| = " + std::to_string(i4) +
                             " must exceed " + std::to_string(floor_size));
  return out;
}

inline std::string join_violations(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& item : v) s += (s.empty() ? "" : "; ") + item;
  return s;
}

/// Homothety-case partition: |I1| = |I3| = 2*half_size with half_size < 1/(4 divisor).
inline RegionPartition build_partition(double half_size, int divisor, std::pair<double, double> centers,
                                       bool permissive = false) {
  const auto check = check_partition(half_size, divisor, centers, 1.0 / (4.0 * divisor), permissive);
  if (!check.ok()) throw Error(ErrorKind::Construction, join_violations(check.violations));
  return RegionPartition(half_size, divisor, centers.first, centers.second);
}

/// Both candidate ceilings on the critical length L in the non-homothety case.
struct GeneralCeiling {
  double quarter;  // 1/(4 tau2)
  double slack;    // (1/tau2 - 1/alpha)/2
  double strict() const { return std::min(quarter, slack); }
  double literal() const { return std::max(quarter, slack); }
};

inline GeneralCeiling general_ceiling(int tau2, double alpha) {
  return {1.0 / (4.0 * tau2), (1.0 / tau2 - 1.0 / alpha) / 2.0};
}

/// Non-homothety partition with critical intervals of length L (so half-size L/2),
/// spacing divisor tau2. The strict mode enforces L below both ceilings; the
/// permissive mode accepts anything below the larger one.
inline RegionPartition build_general_partition(double L, int tau2, double alpha, std::pair<double, double> centers,
                                               bool permissive = false) {
  const auto ceil = general_ceiling(tau2, alpha);
  const double bound = permissive ? ceil.literal() : ceil.strict();
  if (!(L < bound))
    throw Error(ErrorKind::Construction, "size: L = " + std::to_string(L) + " not below ceiling " +
                                             std::to_string(bound) +
                                             (L < ceil.literal() ? " (accepted only by the larger ceiling)" : ""));
  // The ceiling was checked above; the shared check only sees the half-size bound.
  const auto check = check_partition(L / 2.0, tau2, centers, 1.0, permissive);
  if (!check.ok()) throw Error(ErrorKind::Construction, join_violations(check.violations));
  return RegionPartition(L / 2.0, tau2, centers.first, centers.second);
}

}  // namespace nuh
