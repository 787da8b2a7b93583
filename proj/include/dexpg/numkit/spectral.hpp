#pragma once

#include <span>

namespace dexpg {

// Sum of the k largest one-sided DFT magnitudes of `signal`, excluding the
// zero-frequency bin. Direct O(N^2) transform. Requires N >= 2k + 1.
double vibration_metric(std::span<const double> signal, int k);

}  // namespace dexpg
