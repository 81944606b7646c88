#pragma once

// Small dense Levenberg-Marquardt solver for the handful-of-parameters fits used
// by the resonance and leakage fitters.

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace purcell::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps parameters to the (already weighted) residual vector.
using ResidualFn = std::function<Vector(const Vector&)>;
/// Optional analytic Jacobian of the residuals; rows = residuals, cols = params.
using JacobianFn = std::function<Matrix(const Vector&)>;

struct LmOptions {
  std::size_t max_iterations = 500;
  double relative_step_tolerance = 1e-12;
  double cost_tolerance = 1e-15;
  double initial_lambda = 1e-3;
  // Step for forward-difference Jacobians, relative to max(|p|, 1).
  double fd_step = 1e-7;
};

struct LmResult {
  Vector params;
  Matrix jtj_inverse;  // unscaled covariance (J^T J)^-1 at the solution
  double cost = 0.0;   // sum of squared residuals
  std::size_t iterations = 0;
  bool converged = false;
};

Matrix numeric_jacobian(const ResidualFn& f, const Vector& p, double rel_step);

LmResult levenberg_marquardt(const ResidualFn& residuals, Vector initial, const LmOptions& options = {},
                             const JacobianFn& jacobian = nullptr);

}  // namespace purcell::fit
