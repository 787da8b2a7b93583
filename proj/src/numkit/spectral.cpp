#include "dexpg/numkit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dexpg {

double vibration_metric(std::span<const double> signal, int k) {
  const std::size_t n = signal.size();
  if (k < 1 || n < 2 * static_cast<std::size_t>(k) + 1) {
    throw std::invalid_argument("vibration_metric: need k >= 1 and at least 2k+1 samples, got k=" +
                                std::to_string(k) + ", n=" + std::to_string(n));
  }
  std::vector<double> mags;
  mags.reserve(n / 2);
  for (std::size_t bin = 1; bin <= n / 2; ++bin) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // reduce the phase index mod n to keep the argument small
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((bin * t) % n) / n;
      re += signal[t] * std::cos(angle);
      im -= signal[t] * std::sin(angle);
    }
    mags.push_back(std::hypot(re, im));
  }
  std::partial_sort(mags.begin(), mags.begin() + k, mags.end(), std::greater<>());
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += mags[i];
  return total;
}

}  // namespace dexpg
