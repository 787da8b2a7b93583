#pragma once

#include <vector>

#include "dexpg/numkit/linalg.hpp"

namespace dexpg {

enum class Activation { kTanh };

// Feed-forward network parameters. All weights and biases live in one flat
// vector in layer-major order; within a layer the weight matrix (out x in,
// row-major) precedes the bias.
struct MlpParams {
  std::vector<int> layer_sizes;
  DenseVec flat;
  Activation hidden = Activation::kTanh;

  static MlpParams zeros(std::vector<int> layer_sizes);
  // Glorot-uniform weights, zero biases. The last layer's weights are
  // multiplied by `output_scale`.
  static MlpParams glorot(std::vector<int> layer_sizes, Rng& rng, double output_scale = 1.0);

  static Eigen::Index param_count(const std::vector<int>& layer_sizes);

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  Eigen::Index param_count() const { return flat.size(); }

  Eigen::Index weight_offset(int layer) const;
  Eigen::Index bias_offset(int layer) const;

  Eigen::Map<const RowMat> weight(int layer) const;
  Eigen::Map<RowMat> weight(int layer);
  Eigen::Map<const DenseVec> bias(int layer) const;
  Eigen::Map<DenseVec> bias(int layer);
};

DenseVec mlp_forward(const MlpParams& params, const DenseVec& input);

struct MlpGradient {
  DenseVec params;  // flat, same layout as MlpParams::flat
  DenseVec input;
};

// Jacobian-transpose product of the forward map with `output_grad`.
MlpGradient mlp_backward(const MlpParams& params, const DenseVec& input,
                         const DenseVec& output_grad);

// Activations of a batched forward pass (one sample per column), kept so that
// repeated vector-Jacobian and Jacobian-vector products reuse them.
class MlpTape {
 public:
  MlpTape(const MlpParams& params, const DenseMat& inputs);

  const DenseMat& output() const { return activations_.back(); }
  Eigen::Index batch_size() const { return activations_.front().cols(); }

  // Sum over samples of J_i^T u_i, where u_i is column i of `output_grads`.
  // Per-sample input gradients are written to `input_grads` when given.
  DenseVec vjp(const DenseMat& output_grads, DenseMat* input_grads = nullptr) const;
  // Column i holds J_i t for the parameter tangent t.
  DenseMat jvp(const DenseVec& param_tangent) const;

 private:
  const MlpParams* params_;
  std::vector<DenseMat> activations_;  // activations_[0] = inputs
};

}  // namespace dexpg
