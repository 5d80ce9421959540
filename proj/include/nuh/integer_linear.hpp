#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nuh/error.hpp"
#include "nuh/linalg.hpp"
#include "nuh/torus.hpp"

namespace nuh {

struct IntMatrix {
  std::int64_t e11 = 1, e12 = 0;
  std::int64_t e21 = 0, e22 = 1;

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

  static IntMatrix identity() { return {1, 0, 0, 1}; }
  static IntMatrix scalar(std::int64_t k) { return {k, 0, 0, k}; }

  IntMatrix operator*(const IntMatrix& m) const {
    return {e11 * m.e11 + e12 * m.e21, e11 * m.e12 + e12 * m.e22,
            e21 * m.e11 + e22 * m.e21, e21 * m.e12 + e22 * m.e22};
  }

  Mat2 to_real() const {
    return {static_cast<double>(e11), static_cast<double>(e12), static_cast<double>(e21),
            static_cast<double>(e22)};
  }

  std::string str() const {
    return "[[" + std::to_string(e11) + "," + std::to_string(e12) + "],[" + std::to_string(e21) + "," +
           std::to_string(e22) + "]]";
  }
};

inline std::int64_t determinant(const IntMatrix& E) { return E.e11 * E.e22 - E.e12 * E.e21; }

inline std::int64_t degree(const IntMatrix& E) {
  const auto det = determinant(E);
  if (det == 0) throw Error(ErrorKind::DegenerateMatrix, "det = 0, " + E.str() + " is not a covering");
  return det < 0 ? -det : det;
}

inline bool is_homothety(const IntMatrix& E) { return E.e12 == 0 && E.e21 == 0 && E.e11 == E.e22; }

/// Adjugate: E * adj(E) = det(E) * Id.
inline IntMatrix adjugate(const IntMatrix& E) { return {E.e22, -E.e12, -E.e21, E.e11}; }

/// Inverse of a unimodular matrix.
inline IntMatrix unimodular_inverse(const IntMatrix& P) {
  const auto det = determinant(P);
  if (det != 1 && det != -1) throw Error(ErrorKind::InvalidInput, P.str() + " is not unimodular");
  const auto a = adjugate(P);
  return {a.e11 * det, a.e12 * det, a.e21 * det, a.e22 * det};
}

struct ElementaryDivisors {
  std::int64_t tau1 = 1;
  std::int64_t tau2 = 1;
  friend bool operator==(const ElementaryDivisors&, const ElementaryDivisors&) = default;
};

inline ElementaryDivisors elementary_divisors(const IntMatrix& E) {
  const auto d = degree(E);
  auto g = std::gcd(std::gcd(E.e11, E.e12), std::gcd(E.e21, E.e22));
  return {g, d / g};
}

/// U * E * V = diag(tau1, tau2) with U, V unimodular.
struct SmithForm {
  IntMatrix U, D, V;
};

inline SmithForm smith_form(const IntMatrix& E) {
  degree(E);
  std::array<std::array<std::int64_t, 2>, 2> A{{{E.e11, E.e12}, {E.e21, E.e22}}};
  std::array<std::array<std::int64_t, 2>, 2> U{{{1, 0}, {0, 1}}}, V{{{1, 0}, {0, 1}}};
  const auto swap_rows = [&](auto& M) { std::swap(M[0], M[1]); };
  const auto swap_cols = [&](auto& M) {
    std::swap(M[0][0], M[0][1]);
    std::swap(M[1][0], M[1][1]);
  };
  for (int guard = 0; guard < 256; ++guard) {
    // Pivot: smallest nonzero magnitude to (0,0).
    int bi = -1, bj = -1;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (A[i][j] != 0 && (bi < 0 || std::abs(A[i][j]) < std::abs(A[bi][bj]))) bi = i, bj = j;
    if (bi == 1) swap_rows(A), swap_rows(U);
    if (bj == 1) swap_cols(A), swap_cols(V);
    const auto p = A[0][0];
    const auto qr = A[1][0] / p;
    for (int j = 0; j < 2; ++j) A[1][j] -= qr * A[0][j], U[1][j] -= qr * U[0][j];
    const auto qc = A[0][1] / p;
    for (int i = 0; i < 2; ++i) A[i][1] -= qc * A[i][0], V[i][1] -= qc * V[i][0];
    if (A[1][0] != 0 || A[0][1] != 0) continue;
    if (A[1][1] % A[0][0] != 0) {
      for (int j = 0; j < 2; ++j) A[0][j] += A[1][j], U[0][j] += U[1][j];
      continue;
    }
    for (int i = 0; i < 2; ++i)
      if (A[i][i] < 0)
        for (int j = 0; j < 2; ++j) A[i][j] = -A[i][j], U[i][j] = -U[i][j];
    return {{U[0][0], U[0][1], U[1][0], U[1][1]},
            {A[0][0], A[0][1], A[1][0], A[1][1]},
            {V[0][0], V[0][1], V[1][0], V[1][1]}};
  }
  throw Error(ErrorKind::SearchFailure, "Smith reduction did not terminate for " + E.str());
}

struct CoordinateChange {
  IntMatrix P;
  IntMatrix G;  // P^{-1} E P
};

/// G^{-1}Z^2 = (1/tau2)Z x (1/tau1)Z holds iff tau2 divides the first column of G,
/// tau1 divides the second, and |det G| = tau1 tau2.
inline bool has_normalized_lattice(const IntMatrix& G) {
  const auto dv = elementary_divisors(G);
  return G.e11 % dv.tau2 == 0 && G.e21 % dv.tau2 == 0 && G.e12 % dv.tau1 == 0 && G.e22 % dv.tau1 == 0;
}

/// G (0,1) = (e12, e22) is parallel to (0,1) iff e12 = 0.
inline bool has_vertical_eigenvector(const IntMatrix& G) { return G.e12 == 0; }

inline bool is_valid_coordinate_change(const IntMatrix& E, const CoordinateChange& cc) {
  const auto det = determinant(cc.P);
  if (det != 1 && det != -1) return false;
  if (!(unimodular_inverse(cc.P) * E * cc.P == cc.G)) return false;
  return has_normalized_lattice(cc.G) && !has_vertical_eigenvector(cc.G);
}

inline CoordinateChange normalize_coordinates(const IntMatrix& E) {
  degree(E);
  if (is_homothety(E))
    throw Error(ErrorKind::Unsupported, "homothety " + E.str() + " has every direction as eigenvector");
  if (is_valid_coordinate_change(E, {IntMatrix::identity(), E})) return {IntMatrix::identity(), E};

  // U E V = D gives (VS)^{-1} E (VS) = (S V^{-1} U^{-1} S) diag(tau2, tau1), which has the lattice shape.
  const auto snf = smith_form(E);
  const IntMatrix swap{0, 1, 1, 0};
  const IntMatrix base = snf.V * swap;
  const auto dv = elementary_divisors(E);
  const auto ratio = dv.tau2 / dv.tau1;

  // Conjugating further by W with w21 = 0 mod tau2/tau1 keeps the lattice shape.
  for (std::int64_t radius = 0; radius <= 6; ++radius) {
    for (std::int64_t w11 = -radius; w11 <= radius; ++w11)
      for (std::int64_t w12 = -radius; w12 <= radius; ++w12)
        for (std::int64_t w21 = -radius; w21 <= radius; ++w21)
          for (std::int64_t w22 = -radius; w22 <= radius; ++w22) {
            if (std::max({std::abs(w11), std::abs(w12), std::abs(w21), std::abs(w22)}) != radius) continue;
            if (w21 % ratio != 0) continue;
            const IntMatrix W{w11, w12, w21, w22};
            const auto det = determinant(W);
            if (det != 1 && det != -1) continue;
            const IntMatrix P = base * W;
            const CoordinateChange cc{P, unimodular_inverse(P) * E * P};
            if (is_valid_coordinate_change(E, cc)) return cc;
          }
  }
  throw Error(ErrorKind::SearchFailure, "no small coordinate change normalizes " + E.str());
}

/// A point of E^{-1}Z^2 mod Z^2 stored exactly as (num1/den, num2/den), 0 <= num < den.
struct LatticeOffset {
  std::int64_t num1 = 0;
  std::int64_t num2 = 0;
  std::int64_t den = 1;

  friend bool operator==(const LatticeOffset&, const LatticeOffset&) = default;
  friend auto operator<=>(const LatticeOffset& a, const LatticeOffset& b) {
    return std::array{a.num1 * b.den, a.num2 * b.den} <=> std::array{b.num1 * a.den, b.num2 * a.den};
  }
  double x1() const { return static_cast<double>(num1) / static_cast<double>(den); }
  double x2() const { return static_cast<double>(num2) / static_cast<double>(den); }
};

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const auto r = a % m;
  return r < 0 ? r + m : r;
}

/// The d distinct elements of E^{-1}Z^2 / Z^2, sorted lexicographically.
inline std::vector<LatticeOffset> lattice_offsets(const IntMatrix& E) {
  const auto d = degree(E);
  const auto det = determinant(E);
  const auto adj = adjugate(E);
  // E^{-1} m = adj(E) m / det; denominators divide d.
  std::vector<LatticeOffset> out;
  out.reserve(static_cast<std::size_t>(d));
  for (std::int64_t m1 = 0; m1 < d; ++m1)
    for (std::int64_t m2 = 0; m2 < d; ++m2) {
      auto n1 = (adj.e11 * m1 + adj.e12 * m2) * (det < 0 ? -1 : 1);
      auto n2 = (adj.e21 * m1 + adj.e22 * m2) * (det < 0 ? -1 : 1);
      LatticeOffset o{floor_mod(n1, d), floor_mod(n2, d), d};
      const auto g = std::gcd(std::gcd(o.num1, o.num2), o.den);
      o = {o.num1 / g, o.num2 / g, o.den / g};
      if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
    }
  std::sort(out.begin(), out.end());
  if (static_cast<std::int64_t>(out.size()) != d)
    throw Error(ErrorKind::Construction, "lattice enumeration produced " + std::to_string(out.size()) + " points");
  return out;
}

/// Solutions of E y = x (mod Z^2), in lattice_offsets order.
inline std::vector<TorusPoint> preimage_lattice(const IntMatrix& E, const TorusPoint& x,
                                                const std::vector<LatticeOffset>& offsets) {
  const Mat2 inv = E.to_real().inverse();
  const Vec2 base = inv * Vec2{x.x1, x.x2};
  std::vector<TorusPoint> out;
  out.reserve(offsets.size());
  for (const auto& o : offsets) out.push_back(TorusPoint::wrapped(base.u1 + o.x1(), base.u2 + o.x2()));
  return out;
}

inline std::vector<TorusPoint> preimage_lattice(const IntMatrix& E, const TorusPoint& x) {
  return preimage_lattice(E, x, lattice_offsets(E));
}

/// The linear torus endomorphism x -> E x mod 1.
inline TorusPoint apply_linear(const IntMatrix& E, const TorusPoint& x) {
  const Vec2 y = E.to_real() * Vec2{x.x1, x.x2};
  return TorusPoint::wrapped(y.u1, y.u2);
}

/// True when both extreme rays of the closed vertical cone, pulled back by E,
/// land strictly inside one component of the horizontal cone. For a linear map
/// this is equivalent to closure(E^{-1} vertical cone) inside int(horizontal cone).
inline bool vertical_cone_pulls_inside(const Mat2& inv, double alpha) {
  const Vec2 p = inv * Vec2{1.0, alpha};
  const Vec2 q = inv * Vec2{-1.0, alpha};
  const auto inside = [&](const Vec2& v) { return std::abs(v.u2) < alpha * std::abs(v.u1); };
  return inside(p) && inside(q) && (p.u1 > 0) == (q.u1 > 0);
}

inline constexpr double kAlphaMargin = 1.01;

/// Smallest cone aperture (up to bisection width and the 1.01 safety factor)
/// above max(tau2, 1) for which E^{-1} pulls the vertical cone into the horizontal one.
inline double min_alpha(const IntMatrix& E, double cap = 1e4) {
  degree(E);
  if (has_vertical_eigenvector(E))
    throw Error(ErrorKind::Unsupported, "(0,1) is an eigenvector of " + E.str());
  const Mat2 inv = E.to_real().inverse();
  double lo = std::max<double>(static_cast<double>(elementary_divisors(E).tau2), 1.0);
  double hi = cap;
  if (!vertical_cone_pulls_inside(inv, hi))
    throw Error(ErrorKind::SearchFailure, "no cone aperture below " + std::to_string(cap) + " for " + E.str());
  while ((hi - lo) > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (vertical_cone_pulls_inside(inv, mid) ? hi : lo) = mid;
  }
  return hi * kAlphaMargin;
}

}  // namespace nuh
