// Quasi-Newton minimizer: BFGS with strong Wolfe line search and central
// finite-difference gradients. Gradient components may be evaluated
// concurrently; a running instance is exclusive.
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "seaspde/common.hpp"

namespace seaspde {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol = 1e-5;  // converged when ||g||_inf <= grad_tol*max(1,|f|)
  double fd_step = 1e-5;   // relative central-difference step
  Exec exec = Exec::parallel;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0;
  std::vector<double> history;  // objective after each accepted step
};

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step, Exec exec = Exec::parallel);

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& opt = {});

}  // namespace seaspde
