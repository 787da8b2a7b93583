#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dexpg/policy/gaussian.hpp"
#include "dexpg/policy/value.hpp"
#include "oracles.hpp"

using namespace dexpg;

namespace {

oracle::Vec to_std(const DenseVec& v) { return {v.data(), v.data() + v.size()}; }

GaussianPolicy tiny_policy(std::uint64_t seed, int obs = 3, int act = 2, std::vector<int> hidden = {4}) {
  Rng rng(seed);
  PolicyConfig cfg;
  cfg.hidden = std::move(hidden);
  cfg.output_scale = 1.0;
  GaussianPolicy p(obs, act, cfg, rng);
  DenseVec ls(act);
  for (auto& v : ls) v = uniform(rng, -0.8, 0.3);
  p.set_log_std(ls);
  return p;
}

DenseVec random_vec(Rng& rng, int n, double scale = 1.0) {
  DenseVec v(n);
  for (auto& x : v) x = uniform(rng, -scale, scale);
  return v;
}

oracle::Vec oracle_score(const GaussianPolicy& p, const DenseVec& obs, const DenseVec& a) {
  return oracle::gaussian_score(p.mean_net().layer_sizes, to_std(p.mean_net().flat), to_std(p.log_std()),
                                to_std(obs), to_std(a));
}

}  // namespace

TEST_CASE("construction and parameter layout") {
  Rng rng(1);
  GaussianPolicy p(14, 6, PolicyConfig{}, rng);
  CHECK(p.param_count() == MlpParams::param_count({14, 64, 64, 6}) + 6);
  CHECK(p.log_std().isApproxToConstant(-0.5));
  // small output layer: initial means are near zero
  CHECK(p.mean(DenseVec::Ones(14)).cwiseAbs().maxCoeff() < 0.1);
  DenseVec theta = p.flat();
  theta.tail(6).setConstant(9.0);
  p.set_flat(theta);
  CHECK(p.log_std().isApproxToConstant(kLogStdMax));
  theta.tail(6).setConstant(-9.0);
  p.set_flat(theta);
  CHECK(p.log_std().isApproxToConstant(kLogStdMin));
}

TEST_CASE("log density matches the closed form and integrates to one") {
  GaussianPolicy p = tiny_policy(2, 3, 1);
  Rng rng(4);
  const DenseVec obs = random_vec(rng, 3);
  const DenseVec mu = p.mean(obs);
  for (int i = 0; i < 5; ++i) {
    const DenseVec a = random_vec(rng, 1, 2.0);
    CHECK(p.log_prob(obs, a) == doctest::Approx(oracle::gaussian_log_pdf(to_std(mu), to_std(p.log_std()), to_std(a))));
  }
  // midpoint rule over +-12 sd
  const double sd = std::exp(p.log_std()[0]);
  const int n = 20000;
  double total = 0.0;
  DenseVec a(1);
  for (int i = 0; i < n; ++i) {
    a[0] = mu[0] - 12 * sd + (i + 0.5) * 24 * sd / n;
    total += std::exp(p.log_prob(obs, a)) * 24 * sd / n;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampling is deterministic per seed and centered on the mean") {
  GaussianPolicy p = tiny_policy(3);
  const DenseVec obs = DenseVec::Constant(3, 0.2);
  Rng r1(8), r2(8);
  CHECK(p.sample(obs, r1).action == p.sample(obs, r2).action);
  DenseVec sum = DenseVec::Zero(2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += p.sample(obs, r1).action;
  const DenseVec sd = p.log_std().array().exp();
  CHECK(((sum / n - p.mean(obs)).array() / sd.array()).abs().maxCoeff() < 4.0 / std::sqrt(n));
}

TEST_CASE("log-prob gradient matches the dual-number oracle and finite differences") {
  for (int inst = 0; inst < 20; ++inst) {
    GaussianPolicy p = tiny_policy(100 + inst);
    Rng rng(200 + inst);
    const DenseVec obs = random_vec(rng, 3);
    const DenseVec a = p.mean(obs) + random_vec(rng, 2, 0.5);
    const DenseVec g = p.log_prob_grad(obs, a);
    const oracle::Vec exact = oracle_score(p, obs, a);
    const oracle::Vec fd = oracle::central_diff(
        [&](const oracle::Vec& th) {
          GaussianPolicy q = p;
          q.set_flat(Eigen::Map<const DenseVec>(th.data(), static_cast<Eigen::Index>(th.size())));
          return q.log_prob(obs, a);
        },
        to_std(p.flat()));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      CHECK(std::abs(g[i] - exact[i]) <= 1e-12 * (1 + std::abs(exact[i])));
      CHECK(oracle::grad_close(g[i], fd[i]));
    }
  }
}

TEST_CASE("weighted gradient sums weighted per-sample scores") {
  GaussianPolicy p = tiny_policy(7);
  Rng rng(11);
  const int n = 9;
  DenseMat obs(3, n), acts(2, n);
  std::vector<double> w(n);
  oracle::Vec expect(p.param_count(), 0.0);
  for (int i = 0; i < n; ++i) {
    obs.col(i) = random_vec(rng, 3);
    acts.col(i) = random_vec(rng, 2);
    w[i] = uniform(rng, -2, 2);
    const auto s = oracle_score(p, obs.col(i), acts.col(i));
    for (std::size_t k = 0; k < s.size(); ++k) expect[k] += w[i] * s[k];
  }
  const DenseVec g = p.weighted_log_prob_grad(obs, acts, w);
  for (Eigen::Index k = 0; k < g.size(); ++k) CHECK(std::abs(g[k] - expect[k]) < 1e-11);
}

TEST_CASE("Fisher operator equals the explicit score outer-product matrix") {
  for (int inst = 0; inst < 5; ++inst) {
    GaussianPolicy p = tiny_policy(300 + inst, 3, 2, {5});  // 32 + 2 parameters
    REQUIRE(p.param_count() <= 50);
    Rng rng(400 + inst);
    const int n = 12;
    DenseMat obs(3, n);
    for (int i = 0; i < n; ++i) obs.col(i) = random_vec(rng, 3);
    const double damping = 1e-3;
    FisherOperator fvp(p, obs, rng, damping);
    const DenseMat acts = fvp.actions();
    const auto dim = static_cast<std::size_t>(p.param_count());
    oracle::Mat f(dim, oracle::Vec(dim, 0.0));
    for (int i = 0; i < n; ++i) {
      const auto s = oracle_score(p, obs.col(i), acts.col(i));
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) f[r][c] += s[r] * s[c] / n;
    }
    for (std::size_t r = 0; r < dim; ++r) f[r][r] += damping;
    for (int probe = 0; probe < 20; ++probe) {
      const DenseVec v = random_vec(rng, static_cast<int>(dim));
      const DenseVec fv = fvp(v);
      for (std::size_t r = 0; r < dim; ++r) {
        double e = 0.0;
        for (std::size_t c = 0; c < dim; ++c) e += f[r][c] * v[c];
        CHECK(std::abs(fv[r] - e) < 1e-10);
      }
      const DenseVec u = random_vec(rng, static_cast<int>(dim));
      CHECK(std::abs(u.dot(fvp(v)) - v.dot(fvp(u))) < 1e-10);
      CHECK(v.dot(fv) >= 0.0);
    }
  }
}

TEST_CASE("Fisher operator argument checks") {
  GaussianPolicy p = tiny_policy(1);
  Rng rng(1);
  CHECK_THROWS_AS(FisherOperator(p, DenseMat(3, 0), rng, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(FisherOperator(p, DenseMat::Zero(3, 2), rng, -1.0), std::invalid_argument);
  FisherOperator f(p, DenseMat::Zero(3, 2), rng, 0.0);
  CHECK_THROWS_AS(f(DenseVec::Zero(3)), DimensionError);
}

TEST_CASE("mean KL is zero for identical policies and matches the closed form") {
  GaussianPolicy p = tiny_policy(5);
  GaussianPolicy q = p;
  Rng rng(6);
  DenseMat obs(3, 4);
  for (int i = 0; i < 4; ++i) obs.col(i) = random_vec(rng, 3);
  CHECK(mean_kl(p, q, obs) == 0.0);
  DenseVec ls = q.log_std();
  ls[0] += 0.3;
  q.set_log_std(ls);
  // only the first std moved: KL = log(s2/s1) + s1^2/(2 s2^2) - 1/2
  const double r = std::exp(-0.3);
  CHECK(mean_kl(p, q, obs) == doctest::Approx(0.3 + 0.5 * r * r - 0.5));
}

TEST_CASE("checkpoints round-trip and reject damaged files") {
  const auto dir = std::filesystem::temp_directory_path() / "dexpg_test_policy";
  std::filesystem::create_directories(dir);
  GaussianPolicy p = tiny_policy(12);
  save_policy(p, dir / "p.bin");
  CHECK(load_policy(dir / "p.bin") == p);
  std::string bytes;
  {
    std::ifstream in(dir / "p.bin", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  CHECK_THROWS_AS(load_policy(write("trunc.bin", bytes.substr(0, bytes.size() - 5))), CheckpointError);
  CHECK_THROWS_AS(load_policy(write("magic.bin", "XX" + bytes)), CheckpointError);
  std::string v2 = bytes;
  v2.replace(v2.find("v1"), 2, "v2");
  CHECK_THROWS_AS(load_policy(write("ver.bin", v2)), CheckpointError);
  CHECK_THROWS_AS(load_policy(dir / "missing.bin"), CheckpointError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("GAE matches the direct double-sum oracle") {
  Rng rng(21);
  std::vector<Trajectory> trajs(3);
  std::vector<std::vector<double>> values;
  for (int k = 0; k < 3; ++k) {
    const int len = 5 + 3 * k;
    values.emplace_back();
    for (int t = 0; t < len; ++t) {
      trajs[k].rewards.push_back(uniform(rng, -1, 1));
      trajs[k].actions.push_back(DenseVec::Zero(1));
      trajs[k].observations.push_back(DenseVec::Zero(1));
      values[k].push_back(uniform(rng, -2, 2));
    }
    trajs[k].observations.push_back(DenseVec::Zero(1));
  }
  for (double lam : {0.0, 0.5, 0.97, 1.0}) {
    const AdvantageEstimate est = gae_from_values(trajs, values, 0.99, lam, false);
    for (int k = 0; k < 3; ++k) {
      const auto expect = oracle::gae_direct(trajs[k].rewards, values[k], 0.99, lam);
      for (std::size_t t = 0; t < expect.size(); ++t) CHECK(est.values[k][t] == doctest::Approx(expect[t]).epsilon(1e-12));
    }
  }
  // lambda = 1 with zero values is the discounted return
  std::vector<std::vector<double>> zeros;
  for (auto& t : trajs) zeros.emplace_back(t.length(), 0.0);
  const AdvantageEstimate mc = gae_from_values(trajs, zeros, 0.9, 1.0, false);
  const DenseVec ret = discounted_returns(trajs, 0.9);
  std::size_t i = 0;
  for (int k = 0; k < 3; ++k) {
    const auto expect = oracle::returns_direct(trajs[k].rewards, 0.9);
    for (std::size_t t = 0; t < expect.size(); ++t, ++i) {
      CHECK(mc.values[k][t] == doctest::Approx(expect[t]).epsilon(1e-12));
      CHECK(ret[static_cast<Eigen::Index>(i)] == doctest::Approx(expect[t]).epsilon(1e-12));
    }
  }
  const AdvantageEstimate norm = gae_from_values(trajs, values, 0.99, 0.97, true);
  const auto flat = norm.flattened();
  double mean = 0, sq = 0;
  for (double v : flat) mean += v / flat.size();
  for (double v : flat) sq += (v - mean) * (v - mean) / flat.size();
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-6);
  CHECK_THROWS_AS(gae_from_values(trajs, values, 1.5, 0.9, false), std::invalid_argument);
}

TEST_CASE("baseline fit never increases the regression error") {
  Rng rng(31);
  std::vector<Trajectory> trajs(4);
  for (auto& t : trajs) {
    for (int s = 0; s < 30; ++s) {
      DenseVec o = random_vec(rng, 3);
      t.observations.push_back(o);
      t.actions.push_back(DenseVec::Zero(1));
      t.rewards.push_back(o[0] * 2 + 1);
    }
    t.observations.push_back(DenseVec::Zero(3));
  }
  ValueBaseline b(3, BaselineConfig{}, rng);
  const DenseVec target = discounted_returns(trajs, 0.95);
  auto mse = [&](const ValueBaseline& v) {
    double e = 0.0;
    Eigen::Index i = 0;
    for (const auto& t : trajs)
      for (std::size_t s = 0; s < t.length(); ++s, ++i) e += std::pow(v.value(t.observations[s]) - target[i], 2);
    return e / static_cast<double>(i);
  };
  const double before = mse(b);
  const ValueBaseline fitted = fit_baseline(b, trajs, 0.95);
  CHECK(mse(fitted) <= before);
  BaselineConfig off;
  off.epochs = 0;
  ValueBaseline same(3, off, rng);
  CHECK(fit_baseline(same, trajs, 0.95).net.flat == same.net.flat);
}
