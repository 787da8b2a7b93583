#include "dexpg/policy/gaussian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace dexpg {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<int> layer_sizes(int obs_dim, const std::vector<int>& hidden, int action_dim) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  return sizes;
}

DenseVec clamp_log_std(DenseVec v) {
  for (auto& x : v) x = std::clamp(x, kLogStdMin, kLogStdMax);
  return v;
}

}  // namespace

GaussianPolicy::GaussianPolicy(int obs_dim, int action_dim, const PolicyConfig& config, Rng& rng)
    : mean_(MlpParams::glorot(layer_sizes(obs_dim, config.hidden, action_dim), rng,
                              config.output_scale)),
      log_std_(clamp_log_std(DenseVec::Constant(action_dim, config.init_log_std))) {}

GaussianPolicy::GaussianPolicy(MlpParams mean, DenseVec log_std) : mean_(std::move(mean)) {
  set_log_std(log_std);
}

void GaussianPolicy::set_log_std(const DenseVec& log_std) {
  require_dims(log_std.size() == mean_.output_size(), "log_std length must equal action_dim");
  log_std_ = clamp_log_std(log_std);
}

DenseVec GaussianPolicy::flat() const {
  DenseVec theta(param_count());
  theta << mean_.flat, log_std_;
  return theta;
}

void GaussianPolicy::set_flat(const DenseVec& theta) {
  require_dims(theta.size() == param_count(), "flat parameter vector has wrong length");
  mean_.flat = theta.head(mean_.param_count());
  log_std_ = clamp_log_std(theta.tail(log_std_.size()));
}

DenseVec GaussianPolicy::mean(const DenseVec& obs) const { return mlp_forward(mean_, obs); }

DenseMat GaussianPolicy::mean_batch(const DenseMat& obs) const {
  return MlpTape(mean_, obs).output();
}

double gaussian_log_density(const DenseVec& mean, const DenseVec& log_std, const DenseVec& x) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double z = (x[k] - mean[k]) * std::exp(-log_std[k]);
    lp += -0.5 * z * z - log_std[k] - kHalfLog2Pi;
  }
  return lp;
}

ActionSample GaussianPolicy::sample(const DenseVec& obs, Rng& rng) const {
  const DenseVec mu = mean(obs);
  ActionSample s;
  s.action.resize(mu.size());
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    s.action[k] = mu[k] + std::exp(log_std_[k]) * standard_normal(rng);
  }
  s.log_prob = gaussian_log_density(mu, log_std_, s.action);
  return s;
}

double GaussianPolicy::log_prob(const DenseVec& obs, const DenseVec& action) const {
  require_dims(action.size() == action_dim(), "action length must equal action_dim");
  return gaussian_log_density(mean(obs), log_std_, action);
}

DenseVec GaussianPolicy::log_prob_grad(const DenseVec& obs, const DenseVec& action) const {
  const double w = 1.0;
  return weighted_log_prob_grad(obs, action, std::span<const double>(&w, 1));
}

DenseVec GaussianPolicy::weighted_log_prob_grad(const DenseMat& obs, const DenseMat& actions,
                                                std::span<const double> weights) const {
  require_dims(actions.rows() == action_dim() && actions.cols() == obs.cols() &&
                   static_cast<Eigen::Index>(weights.size()) == obs.cols(),
               "batch shapes of observations, actions and weights disagree");
  const MlpTape tape(mean_, obs);
  const DenseVec inv_var = (-2.0 * log_std_).array().exp();
  // d/d mu = (a - mu) / sigma^2;  d/d log_sigma = (a - mu)^2 / sigma^2 - 1
  DenseMat diff = actions - tape.output();
  DenseMat cot = diff.array().colwise() * inv_var.array();
  DenseVec g_log_std = DenseVec::Zero(action_dim());
  for (Eigen::Index i = 0; i < obs.cols(); ++i) {
    const double w = weights[i];
    g_log_std.array() += w * ((diff.col(i).array().square() * inv_var.array()) - 1.0);
    cot.col(i) *= w;
  }
  DenseVec g(param_count());
  g << tape.vjp(cot), g_log_std;
  return g;
}

double mean_kl(const GaussianPolicy& p, const GaussianPolicy& q, const DenseMat& obs) {
  require_dims(obs.cols() > 0, "mean_kl needs at least one state");
  const DenseMat mp = p.mean_batch(obs);
  const DenseMat mq = q.mean_batch(obs);
  const DenseVec var_q = (2.0 * q.log_std()).array().exp();
  const DenseVec var_p = (2.0 * p.log_std()).array().exp();
  // closed form for diagonal Gaussians
  const double const_part =
      (q.log_std() - p.log_std()).sum() + 0.5 * (var_p.array() / var_q.array()).sum() -
      0.5 * static_cast<double>(p.action_dim());
  const DenseMat d = mp - mq;
  const double quad = (d.array().square().colwise() / var_q.array()).sum();
  return const_part + 0.5 * quad / static_cast<double>(obs.cols());
}

FisherOperator::FisherOperator(const GaussianPolicy& policy, DenseMat obs, Rng& rng,
                               double damping)
    : policy_(&policy),
      obs_(std::move(obs)),
      damping_(damping),
      tape_(policy.mean_net(), obs_) {
  if (obs_.cols() == 0) throw std::invalid_argument("fisher operator needs a nonempty state batch");
  if (damping < 0.0) throw std::invalid_argument("fisher damping must be nonnegative");
  z_.resize(policy.action_dim(), obs_.cols());
  for (Eigen::Index i = 0; i < z_.cols(); ++i)
    for (Eigen::Index k = 0; k < z_.rows(); ++k) z_(k, i) = standard_normal(rng);
}

DenseMat FisherOperator::actions() const {
  const DenseVec sigma = policy_->log_std().array().exp();
  return tape_.output() + (z_.array().colwise() * sigma.array()).matrix();
}

DenseVec FisherOperator::operator()(const DenseVec& v) const {
  const GaussianPolicy& pol = *policy_;
  require_dims(v.size() == pol.param_count(), "fisher operand has wrong length");
  const Eigen::Index n_mean = pol.mean_net().param_count();
  const Eigen::Index n = obs_.cols();
  const DenseVec inv_sigma = (-pol.log_std()).array().exp();
  const DenseVec v_log_std = v.tail(pol.action_dim());

  // Score at sample i: mean block J_i^T (z_i / sigma), log-std block z_i^2 - 1.
  const DenseMat u = z_.array().colwise() * inv_sigma.array();
  const DenseMat c = z_.array().square() - 1.0;
  const DenseMat dm = tape_.jvp(v.head(n_mean));
  Eigen::RowVectorXd s = (u.array() * dm.array()).colwise().sum();
  s += v_log_std.transpose() * c;
  s /= static_cast<double>(n);

  DenseVec out(v.size());
  out.head(n_mean) = tape_.vjp(u.array().rowwise() * s.array());
  out.tail(pol.action_dim()) = c * s.transpose();
  out += damping_ * v;
  return out;
}

DenseMat stack_columns(const std::vector<DenseVec>& columns) {
  if (columns.empty()) return {};
  DenseMat m(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    require_dims(columns[i].size() == m.rows(), "stacked vectors differ in length");
    m.col(static_cast<Eigen::Index>(i)) = columns[i];
  }
  return m;
}

DenseVec fisher_vector_product(const GaussianPolicy& policy, const std::vector<DenseVec>& states,
                               const DenseVec& v, double damping, Rng& rng) {
  if (states.empty()) throw std::invalid_argument("fisher_vector_product needs states");
  return FisherOperator(policy, stack_columns(states), rng, damping)(v);
}

// Checkpoint: one text header line, then the flat parameters as
// little-endian float64.
void save_policy(const GaussianPolicy& policy, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  const auto& sizes = policy.mean_net().layer_sizes;
  out << "DEXPOLICY v1 " << policy.obs_dim() << ' ' << policy.action_dim() << ' ' << sizes.size();
  for (int s : sizes) out << ' ' << s;
  const DenseVec theta = policy.flat();
  out << ' ' << theta.size() << '\n';
  for (double x : theta) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

GaussianPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, version;
  int obs = 0, act = 0;
  std::size_t layers = 0;
  header >> magic >> version >> obs >> act >> layers;
  if (magic != "DEXPOLICY") throw CheckpointError(path.string() + " is not a policy checkpoint");
  if (version != "v1") throw CheckpointError("unsupported checkpoint version " + version);
  if (!header || layers < 2 || layers > 64) throw CheckpointError("malformed checkpoint header");
  std::vector<int> sizes(layers);
  for (auto& s : sizes) header >> s;
  Eigen::Index count = 0;
  header >> count;
  if (!header || sizes.front() != obs || sizes.back() != act || obs < 1 || act < 1) {
    throw CheckpointError("malformed checkpoint header");
  }
  if (count != MlpParams::param_count(sizes) + act) {
    throw CheckpointError("checkpoint parameter count does not match its layer sizes");
  }
  DenseVec theta(count);
  for (auto& x : theta) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw CheckpointError("checkpoint " + path.string() + " is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    x = std::bit_cast<double>(bits);
  }
  GaussianPolicy policy(MlpParams::zeros(sizes), DenseVec::Zero(act));
  policy.set_flat(theta);
  return policy;
}

}  // namespace dexpg
