#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nuh/error.hpp"

namespace nuh {

/// c0 + sum_n (cos_n cos(2 pi n u) + sin_n sin(2 pi n u)).
class TrigPoly {
 public:
  struct Harmonic {
    int n;
    double cos_coef;
    double sin_coef;
    friend bool operator==(const Harmonic&, const Harmonic&) = default;
  };

  TrigPoly() = default;
  TrigPoly(double c0, std::vector<Harmonic> harmonics) : c0_(c0), harmonics_(std::move(harmonics)) {
    for (const auto& h : harmonics_)
      if (h.n < 1) throw Error(ErrorKind::InvalidInput, "harmonic index must be >= 1");
  }

  static TrigPoly sine(double amplitude = 1.0, int n = 1) { return {0.0, {{n, 0.0, amplitude}}}; }

  double constant() const { return c0_; }
  const std::vector<Harmonic>& harmonics() const { return harmonics_; }

  /// m-th derivative at u (m = 0 is the value).
  double derivative(double u, int m) const {
    double acc = m == 0 ? c0_ : 0.0;
    for (const auto& h : harmonics_) {
      const double w = 2.0 * std::numbers::pi * h.n;
      const double ph = w * u;
      const double c = std::cos(ph), s = std::sin(ph);
      // d/du cos = -w sin, d/du sin = w cos; cycle of period 4.
      double dc, ds;
      switch (m % 4) {
        case 0: dc = c, ds = s; break;
        case 1: dc = -s, ds = c; break;
        case 2: dc = -c, ds = -s; break;
        default: dc = s, ds = -c; break;
      }
      acc += std::pow(w, m) * (h.cos_coef * dc + h.sin_coef * ds);
    }
    return acc;
  }

  double value(double u) const { return derivative(u, 0); }
  double d1(double u) const { return derivative(u, 1); }

  /// Coefficient bound on sup |m-th derivative| (m >= 1; m = 0 includes |c0|).
  double sup_bound(int m) const {
    double acc = m == 0 ? std::abs(c0_) : 0.0;
    for (const auto& h : harmonics_)
      acc += std::pow(2.0 * std::numbers::pi * h.n, m) * std::hypot(h.cos_coef, h.sin_coef);
    return acc;
  }

  friend bool operator==(const TrigPoly&, const TrigPoly&) = default;

  /// "c0; n:cos:sin; n:cos:sin ..." with round-trip precision.
  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << c0_;
    for (const auto& h : harmonics_) os << "; " << h.n << ':' << h.cos_coef << ':' << h.sin_coef;
    return os.str();
  }

  static TrigPoly parse(const std::string& text) {
    std::istringstream is(text);
    std::string item;
    std::vector<std::string> parts;
    while (std::getline(is, item, ';')) parts.push_back(item);
    if (parts.empty()) throw Error(ErrorKind::InvalidInput, "empty trigonometric polynomial");
    try {
      const double c0 = std::stod(parts[0]);
      std::vector<Harmonic> hs;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        std::istringstream hp(parts[i]);
        std::string n, c, s;
        if (!std::getline(hp, n, ':') || !std::getline(hp, c, ':') || !std::getline(hp, s))
          throw Error(ErrorKind::InvalidInput, "harmonic '" + parts[i] + "' is not n:cos:sin");
        hs.push_back({std::stoi(n), std::stod(c), std::stod(s)});
      }
      return {c0, std::move(hs)};
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidInput, "malformed trigonometric polynomial '" + text + "'");
    }
  }

 private:
  double c0_ = 0.0;
  std::vector<Harmonic> harmonics_;
};

}  // namespace nuh
