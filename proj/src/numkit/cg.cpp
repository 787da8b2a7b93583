#include "dexpg/numkit/cg.hpp"

#include <cmath>
#include <string>

namespace dexpg {

CgResult conjugate_gradient(const LinearOperator& apply_a, const DenseVec& b, int max_iters,
                            double residual_tol) {
  if (!b.allFinite()) throw NumericalError("conjugate_gradient: right-hand side is not finite", 0);
  require_dims(max_iters >= 0, "conjugate_gradient: max_iters must be non-negative");

  CgResult out;
  out.x = DenseVec::Zero(b.size());
  const double b_norm = b.norm();
  out.residual_norms.push_back(b_norm);
  if (b_norm == 0.0) return out;

  DenseVec r = b;
  DenseVec p = r;
  DenseVec ar = apply_a(r);
  require_dims(ar.size() == b.size(), "conjugate_gradient: operator changed the vector size");
  DenseVec ap = ar;
  double r_ar = r.dot(ar);

  for (int it = 1; it <= max_iters; ++it) {
    const double ap_ap = ap.squaredNorm();
    if (!std::isfinite(r_ar) || !std::isfinite(ap_ap)) {
      throw NumericalError("conjugate_gradient: non-finite value at iteration " + std::to_string(it),
                           it);
    }
    if (ap_ap == 0.0) break;
    const double alpha = r_ar / ap_ap;
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    const double r_norm = r.norm();
    out.residual_norms.push_back(r_norm);
    if (!std::isfinite(r_norm)) {
      throw NumericalError("conjugate_gradient: non-finite residual at iteration " +
                               std::to_string(it),
                           it);
    }
    if (r_norm <= residual_tol * b_norm || it == max_iters) break;

    ar = apply_a(r);
    const double r_ar_next = r.dot(ar);
    if (r_ar == 0.0) break;
    const double beta = r_ar_next / r_ar;
    p = r + beta * p;
    ap = ar + beta * ap;
    r_ar = r_ar_next;
  }
  return out;
}

}  // namespace dexpg
