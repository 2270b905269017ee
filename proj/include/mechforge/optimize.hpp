#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mechforge {

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Derivative-free Nelder-Mead minimization. Stops when the simplex value
/// spread falls below `tolerance` or after `max_evaluations` calls. The
/// objective may return huge values (1e100) to encode infeasible points.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                          double tolerance = 1e-8, int max_evaluations = 20000);

}  // namespace mechforge
