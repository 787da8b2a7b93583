#include "dexpg/numkit/mlp.hpp"

#include <cmath>
#include <string>

namespace dexpg {

Eigen::Index MlpParams::param_count(const std::vector<int>& sizes) {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    n += static_cast<Eigen::Index>(sizes[i]) * sizes[i + 1] + sizes[i + 1];
  }
  return n;
}

MlpParams MlpParams::zeros(std::vector<int> sizes) {
  require_dims(sizes.size() >= 2, "mlp needs at least an input and an output layer");
  for (int s : sizes) require_dims(s > 0, "mlp layer sizes must be positive");
  MlpParams p;
  p.flat = DenseVec::Zero(param_count(sizes));
  p.layer_sizes = std::move(sizes);
  return p;
}

MlpParams MlpParams::glorot(std::vector<int> sizes, Rng& rng, double output_scale) {
  MlpParams p = zeros(std::move(sizes));
  for (int l = 0; l < p.num_layers(); ++l) {
    const int fan_in = p.layer_sizes[l];
    const int fan_out = p.layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    if (l + 1 == p.num_layers()) limit *= output_scale;
    auto w = p.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uniform(rng, -limit, limit);
  }
  return p;
}

Eigen::Index MlpParams::weight_offset(int layer) const {
  Eigen::Index off = 0;
  for (int i = 0; i < layer; ++i) {
    off += static_cast<Eigen::Index>(layer_sizes[i]) * layer_sizes[i + 1] + layer_sizes[i + 1];
  }
  return off;
}

Eigen::Index MlpParams::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<Eigen::Index>(layer_sizes[layer]) * layer_sizes[layer + 1];
}

Eigen::Map<const RowMat> MlpParams::weight(int layer) const {
  return {flat.data() + weight_offset(layer), layer_sizes[layer + 1], layer_sizes[layer]};
}
Eigen::Map<RowMat> MlpParams::weight(int layer) {
  return {flat.data() + weight_offset(layer), layer_sizes[layer + 1], layer_sizes[layer]};
}
Eigen::Map<const DenseVec> MlpParams::bias(int layer) const {
  return {flat.data() + bias_offset(layer), layer_sizes[layer + 1]};
}
Eigen::Map<DenseVec> MlpParams::bias(int layer) {
  return {flat.data() + bias_offset(layer), layer_sizes[layer + 1]};
}

namespace {

void check_input(const MlpParams& params, Eigen::Index rows) {
  if (rows != params.input_size()) {
    throw DimensionError("mlp input has " + std::to_string(rows) + " entries, expected " +
                         std::to_string(params.input_size()));
  }
  require_dims(params.flat.size() == MlpParams::param_count(params.layer_sizes),
               "mlp flat parameter vector does not match layer sizes");
}

}  // namespace

DenseVec mlp_forward(const MlpParams& params, const DenseVec& input) {
  check_input(params, input.size());
  DenseVec h = input;
  for (int l = 0; l < params.num_layers(); ++l) {
    DenseVec z = params.weight(l) * h + params.bias(l);
    if (l + 1 < params.num_layers()) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

MlpGradient mlp_backward(const MlpParams& params, const DenseVec& input,
                         const DenseVec& output_grad) {
  check_input(params, input.size());
  require_dims(output_grad.size() == params.output_size(), "mlp output gradient size mismatch");
  MlpTape tape(params, input);
  MlpGradient g;
  DenseMat input_grad;
  g.params = tape.vjp(output_grad, &input_grad);
  g.input = input_grad.col(0);
  return g;
}

MlpTape::MlpTape(const MlpParams& params, const DenseMat& inputs) : params_(&params) {
  check_input(params, inputs.rows());
  activations_.reserve(params.num_layers() + 1);
  activations_.push_back(inputs);
  for (int l = 0; l < params.num_layers(); ++l) {
    DenseMat z = params.weight(l) * activations_.back();
    z.colwise() += params.bias(l);
    if (l + 1 < params.num_layers()) z = z.array().tanh();
    activations_.push_back(std::move(z));
  }
}

DenseVec MlpTape::vjp(const DenseMat& output_grads, DenseMat* input_grads) const {
  const MlpParams& p = *params_;
  require_dims(output_grads.rows() == p.output_size() && output_grads.cols() == batch_size(),
               "mlp vjp cotangent shape mismatch");
  DenseVec grad(p.param_count());
  DenseMat delta = output_grads;
  for (int l = p.num_layers() - 1; l >= 0; --l) {
    const DenseMat& h_in = activations_[l];
    Eigen::Map<RowMat> gw(grad.data() + p.weight_offset(l), p.layer_sizes[l + 1], p.layer_sizes[l]);
    gw.noalias() = delta * h_in.transpose();
    Eigen::Map<DenseVec>(grad.data() + p.bias_offset(l), p.layer_sizes[l + 1]) =
        delta.rowwise().sum();
    if (l > 0) {
      DenseMat back = p.weight(l).transpose() * delta;
      delta = back.array() * (1.0 - h_in.array().square());
    } else if (input_grads != nullptr) {
      *input_grads = p.weight(0).transpose() * delta;
    }
  }
  return grad;
}

DenseMat MlpTape::jvp(const DenseVec& t) const {
  const MlpParams& p = *params_;
  require_dims(t.size() == p.param_count(), "mlp jvp tangent size mismatch");
  DenseMat dh;  // tangent of the current activation; empty means zero
  for (int l = 0; l < p.num_layers(); ++l) {
    Eigen::Map<const RowMat> dw(t.data() + p.weight_offset(l), p.layer_sizes[l + 1], p.layer_sizes[l]);
    Eigen::Map<const DenseVec> db(t.data() + p.bias_offset(l), p.layer_sizes[l + 1]);
    DenseMat dz = dw * activations_[l];
    if (dh.size() != 0) dz.noalias() += p.weight(l) * dh;
    dz.colwise() += db;
    if (l + 1 < p.num_layers()) {
      dz = dz.array() * (1.0 - activations_[l + 1].array().square());
    }
    dh = std::move(dz);
  }
  return dh;
}

}  // namespace dexpg
