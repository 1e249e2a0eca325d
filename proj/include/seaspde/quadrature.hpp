// Adaptive Gauss-Kronrod (G7-K15) quadrature for vector-valued integrands.
#pragma once

#include <functional>

#include <Eigen/Core>

#include "seaspde/common.hpp"

namespace seaspde {

// f(x, out) fills out[0..k-1]. Integrates every component over [a, b] until
// each satisfies err <= reltol*|value| + abstol; throws NumericalError with
// the residual estimate if the subdivision budget is exhausted.
Eigen::VectorXd gk_adaptive(
    const std::function<void(double, double*)>& f, int k, double a, double b,
    double reltol = 1e-10, double abstol = 0.0, int max_segments = 4000);

}  // namespace seaspde
