#pragma once

#include "nuh/certificates.hpp"
#include "nuh/endo.hpp"
#include "nuh/shear.hpp"

namespace nuh::testing {

inline RegionPartition k5_partition() { return build_partition(0.045, 5, {0.25, 0.75}); }

inline ComposedEndo k5_endo(double t = 4.0, double r = 4.0, double alpha = 1.1) {
  return ComposedEndo::homothety(5, default_profile(k5_partition()), {t, r}, alpha);
}

/// The (2,4) map in normalized coordinates with everything the general construction needs.
struct GeneralCase {
  IntMatrix G{4, 2, 0, 2};
  double alpha = 8.0;
  double L = 1.0 / 32;
  RegionPartition partition;
  ShearProfile profile;
  TildeProfile tilde;
  double beta = 0.0;
  ExpansionConstants e;

  GeneralCase() {
    partition = build_general_partition(L, 4, alpha, {0.25 + L, 0.75 - L});
    profile = default_profile(partition);
    tilde = default_tilde_profile(2, 4, L, alpha);
    beta = estimate_beta(G, tilde.s, alpha);
    e = estimate_ev_eh(G, tilde.s, beta);
  }

  ComposedEndo endo(double t) const { return ComposedEndo::general(G, tilde, profile, t, alpha, beta); }
};

inline const GeneralCase& general_case() {
  static const GeneralCase gc;
  return gc;
}

}  // namespace nuh::testing
