#include "dexpg/numkit/linalg.hpp"

#include <cmath>
#include <numbers>

namespace dexpg {

NumericalError::NumericalError(const std::string& what, int iteration)
    : std::runtime_error(what), iteration_(iteration) {}

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

bool all_finite(const DenseVec& v) { return v.allFinite(); }
bool all_finite(const DenseMat& m) { return m.allFinite(); }

namespace {
std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(base);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

double uniform(Rng& rng, double lo, double hi) {
  // 53 random bits -> [0, 1)
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double standard_normal(Rng& rng) {
  double u1 = uniform(rng, 0.0, 1.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dexpg
