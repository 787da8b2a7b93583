#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dexpg {

using DenseVec = Eigen::VectorXd;
using DenseMat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Every stochastic component draws from this engine; streams are derived with
// derive_seed so results do not depend on evaluation order.
using Rng = std::mt19937_64;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int iteration = -1);
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Throws DimensionError with `what` unless `ok`.
void require_dims(bool ok, const std::string& what);

bool all_finite(const DenseVec& v);
bool all_finite(const DenseMat& m);

// SplitMix64 mixing of a base seed with up to three stream indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Standard normal draw via Box-Muller, so sequences are identical across
// standard library implementations.
double standard_normal(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

}  // namespace dexpg
