#pragma once

#include <algorithm>
#include <cmath>

namespace nuh {

struct Vec2 {
  double u1 = 0.0;
  double u2 = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  Vec2 operator*(double s) const { return {u1 * s, u2 * s}; }
  Vec2 operator-() const { return {-u1, -u2}; }
};

/// 2x2 real matrix, row-major.
struct Mat2 {
  double a11 = 1.0, a12 = 0.0;
  double a21 = 0.0, a22 = 1.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  double det() const { return a11 * a22 - a12 * a21; }

  Mat2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }

  Vec2 operator*(const Vec2& v) const {
    return {a11 * v.u1 + a12 * v.u2, a21 * v.u1 + a22 * v.u2};
  }

  Mat2 operator*(const Mat2& m) const {
    return {a11 * m.a11 + a12 * m.a21, a11 * m.a12 + a12 * m.a22,
            a21 * m.a11 + a22 * m.a21, a21 * m.a12 + a22 * m.a22};
  }

  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }

  // Operator norm induced by the maximum norm: largest absolute row sum.
  double max_norm() const {
    return std::max(std::abs(a11) + std::abs(a12), std::abs(a21) + std::abs(a22));
  }
};

}  // namespace nuh
