#pragma once

#include <functional>
#include <vector>

#include "dexpg/numkit/linalg.hpp"

namespace dexpg {

using LinearOperator = std::function<DenseVec(const DenseVec&)>;

struct CgResult {
  DenseVec x;
  int iterations = 0;
  // residual_norms[i] is ||A x_i - b|| after i iterations (entry 0 is ||b||).
  std::vector<double> residual_norms;
};

// Krylov solve of A x = b for symmetric positive-definite A, truncated after
// `max_iters` iterations or once ||A x - b|| <= residual_tol * ||b||.
//
// Uses the conjugate-residual recurrence: it spans the same Krylov subspaces
// as textbook CG (so n iterations solve an n-dimensional system exactly) but
// picks the iterate of minimal residual norm, which makes the residual
// sequence non-increasing. Costs one operator application per iteration.
CgResult conjugate_gradient(const LinearOperator& apply_a, const DenseVec& b, int max_iters,
                            double residual_tol);

}  // namespace dexpg
