// Preimages of one point under the k = 5 map with their regions and buckets,
// then the I(x,u;f^n) series for a vertical direction.
#include <cstdio>

#include "nuh/nuh.hpp"

int main() {
  const auto part = nuh::build_partition(0.045, 5, {0.25, 0.75});
  const auto prof = nuh::default_profile(part);
  const auto f = nuh::ComposedEndo::homothety(5, prof, {4.0, 4.0}, 1.1);
  const nuh::TorusPoint x{0.3, 0.6};
  const nuh::Vec2 u{0.1, 1.0};

  const auto recs = f.preimages(x);
  const auto split = nuh::partition_preimages(f, recs, u);
  std::printf("%3s %10s %10s %5s %5s %6s %12s\n", "#", "y1", "y2", "h", "v", "bucket", "|Df^-1 u|");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    std::printf("%3zu %10.6f %10.6f %5s %5s %6s %12.5f\n", i, rec.y.x1, rec.y.x2, nuh::to_string(rec.hLabel),
                nuh::to_string(*rec.vLabel), nuh::to_string(split.buckets[i]), nuh::pullback(rec, u).norm);
  }
  std::printf("A = %d  B = %d  rest = %d\n\n", split.count(nuh::Bucket::A), split.count(nuh::Bucket::B),
              split.count(nuh::Bucket::VRest));

  const auto series = nuh::I_n_recursive(f, x, u, 3);
  for (std::size_t i = 0; i < series.J.size(); ++i)
    std::printf("J_%zu = %9.5f   I(f^%zu) = %9.5f\n", i, series.J[i], i + 1, series.partial[i]);
  std::printf("direct I(f^3) = %9.5f\n", nuh::I_n_direct(f, x, u, 3));
}
