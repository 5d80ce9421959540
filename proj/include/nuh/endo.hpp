#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nuh/error.hpp"
#include "nuh/integer_linear.hpp"
#include "nuh/linalg.hpp"
#include "nuh/shear.hpp"
#include "nuh/torus.hpp"

namespace nuh {

struct PreimageRecord {
  TorusPoint y;
  TorusPoint mid;  // h_t(y)
  int index = 0;   // position of the E^{-1} lattice offset
  RegionLabel hLabel = RegionLabel::Ch;
  std::optional<RegionLabel> vLabel;  // homothety case only
  Mat2 shearInv;     // (D_mid v)^{-1} E^{-1}
  Mat2 invJacobian;  // (D_y f)^{-1}
};

/// f = E o v o h_t. In the homothety case v = v_r built from the same profile as h_t;
/// in the general case v shifts x1 by s~(x2) and E is the normalized matrix G.
class ComposedEndo {
 public:
  static ComposedEndo homothety(std::int64_t k, const ShearProfile& s, ShearParams params, double alpha) {
    if (std::abs(k) < 2) throw Error(ErrorKind::InvalidInput, "homothety factor must satisfy |k| >= 2");
    ConeSpec cone(alpha);
    ComposedEndo f;
    f.E_ = IntMatrix::scalar(k);
    f.s_ = s;
    f.vprof_ = s.s;
    f.t_ = params.t;
    f.r_ = params.r;
    f.alpha_ = cone.alpha;
    f.cone_ = cone.alpha;
    f.homothety_ = true;
    f.init();
    return f;
  }

  static ComposedEndo general(const IntMatrix& G, const TildeProfile& st, const ShearProfile& s, double t,
                              double alpha, double beta) {
    if (nuh::is_homothety(G)) throw Error(ErrorKind::Unsupported, "general construction needs a non-homothety matrix");
    ConeSpec a(alpha), b(beta);
    if (!(beta > alpha)) throw Error(ErrorKind::InvalidInput, "beta must exceed alpha");
    ComposedEndo f;
    f.E_ = G;
    f.s_ = s;
    f.tilde_ = st;
    f.vprof_ = st.s;
    f.t_ = t;
    f.r_ = 1.0;
    f.alpha_ = a.alpha;
    f.cone_ = b.alpha;
    f.homothety_ = false;
    f.init();
    return f;
  }

  bool is_homothety() const { return homothety_; }
  const IntMatrix& matrix() const { return E_; }
  std::int64_t degree() const { return degree_; }
  /// |k| for homothety, used in the branch bounds.
  std::int64_t scale() const { return std::abs(E_.e11); }
  double t() const { return t_; }
  double r() const { return r_; }
  double alpha() const { return alpha_; }
  /// Aperture used for classification: alpha (homothety) or beta (general).
  double cone() const { return cone_; }
  const ShearProfile& profile() const { return s_; }
  const std::optional<TildeProfile>& tilde() const { return tilde_; }
  const RegionPartition& partition() const { return s_.partition; }
  const std::vector<LatticeOffset>& offsets() const { return offsets_; }
  const Mat2& linear_inverse() const { return Einv_; }

  TorusPoint apply(const TorusPoint& x) const {
    return apply_linear(E_, apply_v(r_, vprof_, apply_h(t_, s_.s, x)));
  }

  Mat2 jacobian(const TorusPoint& x) const {
    const auto mid = apply_h(t_, s_.s, x);
    return E_.to_real() * jacobian_v(r_, vprof_, mid) * jacobian_h(t_, s_.s, x);
  }

  /// Preimages in lattice order, written into `out` (resized to d).
  void preimages_into(const TorusPoint& x, std::vector<PreimageRecord>& out) const {
    out.resize(offsets_.size());
    const Vec2 base = Einv_ * Vec2{x.x1, x.x2};
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      const TorusPoint w = TorusPoint::wrapped(base.u1 + offsets_[i].x1(), base.u2 + offsets_[i].x2());
      auto& rec = out[i];
      rec.index = static_cast<int>(i);
      rec.mid = apply_v_inv(r_, vprof_, w);
      rec.y = apply_h_inv(t_, s_.s, rec.mid);
      rec.hLabel = classify(rec.y, s_.partition, Orientation::Horizontal);
      if (homothety_)
        rec.vLabel = classify(rec.mid, s_.partition, Orientation::Vertical);
      else
        rec.vLabel.reset();
      rec.shearInv = jacobian_v_inv(r_, vprof_, rec.mid) * Einv_;
      rec.invJacobian = jacobian_h_inv(t_, s_.s, rec.y) * rec.shearInv;
    }
  }

  std::vector<PreimageRecord> preimages(const TorusPoint& x) const {
    std::vector<PreimageRecord> out;
    preimages_into(x, out);
    return out;
  }

 private:
  void init() {
    degree_ = nuh::degree(E_);
    offsets_ = lattice_offsets(E_);
    Einv_ = E_.to_real().inverse();
  }

  IntMatrix E_;
  ShearProfile s_;
  std::optional<TildeProfile> tilde_;
  TrigPoly vprof_;
  double t_ = 0.0, r_ = 0.0;
  double alpha_ = 2.0, cone_ = 2.0;
  bool homothety_ = true;
  std::int64_t degree_ = 1;
  std::vector<LatticeOffset> offsets_;
  Mat2 Einv_;
};

inline TorusPoint apply_f(const ComposedEndo& f, const TorusPoint& x) { return f.apply(x); }
inline Mat2 jacobian_f(const ComposedEndo& f, const TorusPoint& x) { return f.jacobian(x); }
inline std::vector<PreimageRecord> preimages_f(const ComposedEndo& f, const TorusPoint& x) {
  return f.preimages(x);
}

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// The vector sign: -sgn(u1/u2), or -sgn(u2) on the vertical axis.
inline int sign_star(const Vec2& u) {
  if (u.u2 == 0.0) throw Error(ErrorKind::InvalidInput, "sign of a vector with u2 = 0 is undefined");
  if (u.u1 != 0.0) return -sgn(u.u1) * sgn(u.u2);
  return -sgn(u.u2);
}

/// Sign of w = (D_mid v)^{-1} E^{-1} u, with the extra branch for w2 = 0.
inline int sign_star_y(const PreimageRecord& rec, const Vec2& u) {
  const Vec2 w = rec.shearInv * u;
  if (w.u1 != 0.0 && w.u2 != 0.0) return -sgn(w.u1) * sgn(w.u2);
  if (w.u2 != 0.0) return -sgn(w.u2);
  if (w.u1 != 0.0) return -sgn(w.u1);
  throw Error(ErrorKind::InvalidInput, "pulled-back vector vanished");
}

inline int sign_star_y(const ComposedEndo&, const PreimageRecord& rec, const Vec2& u) { return sign_star_y(rec, u); }

/// Buckets for vertical u: A, B, VRest; for horizontal u: C, D, HRest.
/// The general case uses A / VRest (good / critical y) and D / HRest.
enum class Bucket { A, B, VRest, C, D, HRest };

inline const char* to_string(Bucket b) {
  switch (b) {
    case Bucket::A: return "A";
    case Bucket::B: return "B";
    case Bucket::VRest: return "V_h";
    case Bucket::C: return "C";
    case Bucket::D: return "D";
    case Bucket::HRest: return "H_h";
  }
  return "?";
}

inline bool is_vertical_bucket(Bucket b) { return b == Bucket::A || b == Bucket::B || b == Bucket::VRest; }

/// Horizontal-cone vectors lying on the axis u2 = 0 get sign +1.
inline int sign_star_or_plus(const Vec2& u) { return u.u2 == 0.0 ? 1 : sign_star(u); }

inline Bucket bucket_of(const ComposedEndo& f, const PreimageRecord& rec, const Vec2& u) {
  const bool vertical = in_vertical_cone(u, f.cone());
  const int hs = label_sign(rec.hLabel);
  if (!f.is_homothety()) {
    if (vertical) return hs != 0 ? Bucket::A : Bucket::VRest;
    return hs != 0 && hs == sign_star_y(rec, u) ? Bucket::D : Bucket::HRest;
  }
  const int vs = label_sign(*rec.vLabel);
  if (vertical) {
    if (hs != 0 && vs != 0) return Bucket::A;
    if (hs != 0 && vs == 0 && hs == sign_star_y(rec, u)) return Bucket::B;
    return Bucket::VRest;
  }
  const int star = sign_star_or_plus(u);
  if (hs != 0 && vs == star) return Bucket::C;
  if (hs != 0 && hs == sign_star_y(rec, u) && (vs == 0 || vs == -star)) return Bucket::D;
  return Bucket::HRest;
}

struct BucketSplit {
  bool vertical = true;
  std::vector<Bucket> buckets;  // aligned with the preimage list
  int count(Bucket b) const {
    int n = 0;
    for (auto x : buckets) n += x == b;
    return n;
  }
  /// |V_v| = |A|+|B| or |H_v| = |C|+|D|.
  int good() const { return vertical ? count(Bucket::A) + count(Bucket::B) : count(Bucket::C) + count(Bucket::D); }
  int rest() const { return static_cast<int>(buckets.size()) - good(); }
};

inline BucketSplit partition_preimages(const ComposedEndo& f, const std::vector<PreimageRecord>& recs, const Vec2& u) {
  max_norm(u);
  BucketSplit out;
  out.vertical = in_vertical_cone(u, f.cone());
  out.buckets.reserve(recs.size());
  for (const auto& rec : recs) out.buckets.push_back(bucket_of(f, rec, u));
  return out;
}

inline BucketSplit partition_preimages(const ComposedEndo& f, const TorusPoint& x, const Vec2& u) {
  return partition_preimages(f, f.preimages(x), u);
}

struct Pullback {
  Vec2 direction;
  double norm;
};

inline Pullback pullback(const PreimageRecord& rec, const Vec2& u) {
  const Vec2 w = rec.invJacobian * normalized(u);
  return {w, max_norm(w)};
}

inline Pullback pullback(const ComposedEndo&, const PreimageRecord& rec, const Vec2& u) { return pullback(rec, u); }

/// Infima of |(D v)^{-1} E^{-1} u| over unit u in the vertical / horizontal cone (general case).
struct ExpansionConstants {
  double ev = 0.0;
  double eh = 0.0;
};

/// Lower bound on |(D_y f)^{-1} u| for unit u in the given bucket, valid for shears above 2 alpha / a.
inline double branch_lower_bound(const ComposedEndo& f, Bucket b, const ExpansionConstants& e = {}) {
  const double a = f.profile().a, bb = f.profile().b, t = f.t();
  if (f.is_homothety()) {
    const double al = f.alpha(), r = f.r(), k = static_cast<double>(f.scale());
    switch (b) {
      case Bucket::A: return ((a - al / t) / al) * ((a - al / r) / al) * t * r / k;
      case Bucket::B: return 1.0 / (al * k);
      case Bucket::VRest: return 1.0 / ((bb * t + 1.0) * al * k);
      case Bucket::C: return ((a - al / t) / al) * t / k;
      case Bucket::D: return 1.0 / ((bb * r + 1.0) * k);
      case Bucket::HRest: return 1.0 / ((bb * t + 1.0) * (bb * r + 1.0) * k);
    }
  }
  const double be = f.cone();
  switch (b) {
    case Bucket::A: return e.ev * (a - be / t) * t / be;
    case Bucket::VRest: return e.ev / be;
    case Bucket::D: return e.eh;
    case Bucket::HRest: return e.eh / ((bb + 1.0 / t) * t);
    default: throw Error(ErrorKind::InvalidInput, std::string("bucket ") + to_string(b) + " unused in general case");
  }
}

/// Shears strong enough for the cone and expansion lemmas.
inline bool shear_preconditions_hold(const ComposedEndo& f) {
  const double thr = 2.0 * f.cone() / f.profile().a;
  return f.is_homothety() ? (f.t() > thr && f.r() > thr) : f.t() > thr;
}

}  // namespace nuh
