// Closed-form limit bound over a (t, r) grid for several homothety factors.
#include <cstdio>

#include "nuh/nuh.hpp"

int main() {
  const double shears[] = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  for (std::int64_t k = 5; k <= 7; ++k) {
    const auto part = nuh::build_partition(nuh::default_homothety_half_size(k), static_cast<int>(k),
                                           nuh::default_homothety_centers(k));
    const auto prof = nuh::default_profile(part);
    std::printf("k = %lld  a = %.5f  b = %.5f  L = %s\n", static_cast<long long>(k), prof.a, prof.b,
                nuh::to_string(nuh::L_homothety(k)).c_str());
    std::printf("%8s", "t\\r");
    for (double r : shears) std::printf("%9g", r);
    std::printf("\n");
    for (double t : shears) {
      std::printf("%8g", t);
      for (double r : shears) {
        const auto rep = nuh::limit_Ji_bound_homothety({k, prof.a, prof.b, 1.1, t, r});
        if (rep.verdict == nuh::Verdict::PreconditionsUnmet)
          std::printf("%9s", "-");
        else
          std::printf("%9.3f", rep.limitJiLowerBound);
      }
      std::printf("\n");
    }
    std::printf("\n");
  }
}
