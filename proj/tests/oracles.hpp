#pragma once
// Test-only reference implementations. Deliberately naive and independent of
// the library code paths they check.

#include <cmath>
#include <algorithm>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// y = W x + b with W stored row-major in a flat array starting at `off`.
inline Vec affine(const Vec& flat, std::size_t off, int out, int in, const Vec& x) {
  Vec y(out, 0.0);
  for (int i = 0; i < out; ++i) {
    double s = 0.0;
    for (int j = 0; j < in; ++j) s += flat[off + i * in + j] * x[j];
    y[i] = s + flat[off + out * in + i];
  }
  return y;
}

// Forward pass of a tanh MLP with linear output computed element by element.
inline Vec mlp_chain(const std::vector<int>& sizes, const Vec& flat, Vec x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Vec y = affine(flat, off, sizes[l + 1], sizes[l], x);
    off += sizes[l + 1] * sizes[l] + sizes[l + 1];
    if (l + 2 < sizes.size())
      for (double& v : y) v = std::tanh(v);
    x = y;
  }
  return x;
}

// Central differences of a scalar function.
inline Vec central_diff(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// Gaussian elimination with partial pivoting.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Relative error with an absolute floor, as used by gradient checks.
inline bool grad_close(double analytic, double numeric, double rel = 1e-5, double abs_floor = 1e-7) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

// Forward-mode dual number: exact directional derivatives, no step size.
struct Dual {
  double v = 0.0, d = 0.0;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual tanh(Dual a) {
  const double t = std::tanh(a.v);
  return {t, a.d * (1 - t * t)};
}

// Same chain as mlp_chain over duals; output derivative along the seeded direction.
inline std::vector<Dual> mlp_chain_dual(const std::vector<int>& sizes, const std::vector<Dual>& flat,
                                        std::vector<Dual> x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int out = sizes[l + 1], in = sizes[l];
    std::vector<Dual> y(out);
    for (int i = 0; i < out; ++i) {
      Dual s;
      for (int j = 0; j < in; ++j) s = s + flat[off + i * in + j] * x[j];
      y[i] = s + flat[off + out * in + i];
      if (l + 2 < sizes.size()) y[i] = tanh(y[i]);
    }
    off += out * in + out;
    x = y;
  }
  return x;
}

// Jacobian of the MLP output w.r.t. its flat parameters, rows = outputs.
inline Mat mlp_param_jacobian(const std::vector<int>& sizes, const Vec& flat, const Vec& x) {
  Mat jac(sizes.back(), Vec(flat.size()));
  std::vector<Dual> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = {x[i], 0.0};
  for (std::size_t p = 0; p < flat.size(); ++p) {
    std::vector<Dual> fd(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) fd[i] = {flat[i], i == p ? 1.0 : 0.0};
    const auto y = mlp_chain_dual(sizes, fd, xs);
    for (int o = 0; o < sizes.back(); ++o) jac[o][p] = y[o].d;
  }
  return jac;
}

// Score of a diagonal Gaussian policy, layout [mean params | log_std].
inline Vec gaussian_score(const std::vector<int>& sizes, const Vec& flat, const Vec& log_std, const Vec& x,
                          const Vec& a) {
  const Vec mu = mlp_chain(sizes, flat, x);
  const Mat jac = mlp_param_jacobian(sizes, flat, x);
  Vec g(flat.size() + log_std.size(), 0.0);
  for (std::size_t o = 0; o < mu.size(); ++o) {
    const double var = std::exp(2 * log_std[o]);
    const double r = (a[o] - mu[o]) / var;
    for (std::size_t p = 0; p < flat.size(); ++p) g[p] += jac[o][p] * r;
    g[flat.size() + o] = (a[o] - mu[o]) * (a[o] - mu[o]) / var - 1.0;
  }
  return g;
}

inline double gaussian_log_pdf(const Vec& mu, const Vec& log_std, const Vec& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sd = std::exp(log_std[i]);
    const double z = (a[i] - mu[i]) / sd;
    s += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * 3.14159265358979323846);
  }
  return s;
}

// GAE by the direct double sum A_t = sum_l (gamma lambda)^l delta_{t+l}.
inline Vec gae_direct(const Vec& rewards, const Vec& values, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  Vec delta(n);
  for (std::size_t t = 0; t < n; ++t) delta[t] = rewards[t] + (t + 1 < n ? gamma * values[t + 1] : 0.0) - values[t];
  Vec adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t l = t; l < n; ++l) {
      adv[t] += w * delta[l];
      w *= gamma * lambda;
    }
  }
  return adv;
}

inline Vec returns_direct(const Vec& rewards, double gamma) {
  Vec out(rewards.size(), 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double w = 1.0;
    for (std::size_t l = t; l < rewards.size(); ++l) {
      out[t] += w * rewards[l];
      w *= gamma;
    }
  }
  return out;
}

}  // namespace oracle
