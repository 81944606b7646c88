#include "purcell/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

namespace purcell::fit {

Matrix numeric_jacobian(const ResidualFn& f, const Vector& p, double rel_step) {
  const Vector r0 = f(p);
  Matrix jac(r0.size(), p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = rel_step * std::max(std::abs(p[k]), 1.0);
    Vector hi = p, lo = p;
    hi[k] += h;
    lo[k] -= h;
    jac.col(k) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return jac;
}

LmResult levenberg_marquardt(const ResidualFn& residuals, Vector initial, const LmOptions& options,
                             const JacobianFn& jacobian) {
  LmResult result;
  Vector p = std::move(initial);
  Vector r = residuals(p);
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;

  auto jac_at = [&](const Vector& at) {
    return jacobian ? jacobian(at) : numeric_jacobian(residuals, at, options.fd_step);
  };

  Matrix jac = jac_at(p);
  std::size_t it = 0;
  bool stalled = false;
  for (; it < options.max_iterations && !stalled; ++it) {
    const Matrix jtj = jac.transpose() * jac;
    const Vector grad = jac.transpose() * r;
    bool accepted = false;
    Vector step;
    // Inner loop: raise damping until the step decreases the cost.
    for (int tries = 0; tries < 40; ++tries) {
      Matrix a = jtj;
      for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vector trial = p + step;
      const Vector rt = residuals(trial);
      const double ct = rt.allFinite() ? rt.squaredNorm() : INFINITY;
      if (ct <= cost) {
        const double drop = cost - ct;
        p = trial;
        r = rt;
        const double old = cost;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        stalled = drop <= options.cost_tolerance * std::max(old, 1e-300);
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      result.converged = true;  // no descent direction left: at a (local) minimum
      break;
    }
    const double rel = step.norm() / std::max(p.norm(), 1e-300);
    jac = jac_at(p);
    if (rel < options.relative_step_tolerance || stalled) {
      result.converged = true;
      ++it;
      break;
    }
  }

  result.iterations = it;
  result.params = p;
  result.cost = cost;
  const Matrix jtj = jac.transpose() * jac;
  result.jtj_inverse = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return result;
}

}  // namespace purcell::fit
