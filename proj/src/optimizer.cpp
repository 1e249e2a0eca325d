#include "seaspde/optimizer.hpp"

#include <cmath>
#include <limits>

namespace seaspde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  try {
    double v = f(x);
    return std::isfinite(v) ? v : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

// Strong Wolfe line search (c1=1e-4, c2=0.9), Nocedal-Wright style
// bracket/zoom with bisection refinement. Returns the accepted step and
// fills f_out/g_out at the accepted point.
double wolfe_search(const Objective& f, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& dir, double f0, double g0,
                    double fd_step, Exec exec, double* f_out,
                    Eigen::VectorXd* g_out) {
  const double c1 = 1e-4, c2 = 0.9;
  auto phi = [&](double a) { return safe_eval(f, x + a * dir); };
  auto dphi = [&](double a, Eigen::VectorXd* g) {
    *g = fd_gradient(f, x + a * dir, fd_step, exec);
    return g->dot(dir);
  };

  double a_prev = 0.0, f_prev = f0;
  double a = 1.0;
  double a_lo = 0, a_hi = 0, f_lo = f0;
  bool bracketed = false;
  Eigen::VectorXd g;
  for (int it = 0; it < 25 && !bracketed; ++it) {
    double fa = phi(a);
    if (fa > f0 + c1 * a * g0 || (it > 0 && fa >= f_prev)) {
      a_lo = a_prev;
      f_lo = f_prev;
      a_hi = a;
      bracketed = true;
      break;
    }
    double da = dphi(a, &g);
    if (std::abs(da) <= -c2 * g0) {
      *f_out = fa;
      *g_out = g;
      return a;
    }
    if (da >= 0) {
      a_lo = a;
      f_lo = fa;
      a_hi = a_prev;
      bracketed = true;
      break;
    }
    a_prev = a;
    f_prev = fa;
    a *= 2.0;
  }
  if (!bracketed) {
    a_lo = 0;
    f_lo = f0;
    a_hi = a;
  }
  // zoom
  for (int it = 0; it < 30; ++it) {
    double am = 0.5 * (a_lo + a_hi);
    double fm = phi(am);
    if (fm > f0 + c1 * am * g0 || fm >= f_lo) {
      a_hi = am;
    } else {
      double dm = dphi(am, &g);
      if (std::abs(dm) <= -c2 * g0) {
        *f_out = fm;
        *g_out = g;
        return am;
      }
      if (dm * (a_hi - a_lo) >= 0) a_hi = a_lo;
      a_lo = am;
      f_lo = fm;
    }
  }
  double am = a_lo;
  if (am <= 0) return 0.0;
  *f_out = phi(am);
  *g_out = fd_gradient(f, x + am * dir, fd_step, exec);
  return am;
}

}  // namespace

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double rel_step, Exec exec) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  auto comp = [&](int i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double fp = safe_eval(f, xp);
    double fm = safe_eval(f, xm);
    g[i] = (fp - fm) / (2.0 * h);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) comp(i);
  } else {
    for (int i = 0; i < n; ++i) comp(i);
  }
  return g;
}

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& opt) {
  const int n = static_cast<int>(x0.size());
  BfgsResult res;
  res.x = x0;
  res.f = safe_eval(f, res.x);
  if (!std::isfinite(res.f))
    throw NumericalError("bfgs: objective not finite at the initial point");
  Eigen::VectorXd g = fd_gradient(f, res.x, opt.fd_step, opt.exec);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  res.history.push_back(res.f);

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    res.grad_norm = g.cwiseAbs().maxCoeff();
    if (res.grad_norm <= opt.grad_tol * std::max(1.0, std::abs(res.f))) {
      res.converged = true;
      return res;
    }
    Eigen::VectorXd dir = -(H * g);
    double slope = g.dot(dir);
    if (!(slope < 0)) {  // reset on loss of descent
      H.setIdentity();
      dir = -g;
      slope = g.dot(dir);
      if (!(slope < 0)) break;
    }
    double fn;
    Eigen::VectorXd gn;
    double a = wolfe_search(f, res.x, dir, res.f, slope, opt.fd_step, opt.exec,
                            &fn, &gn);
    if (a <= 0 || !std::isfinite(fn) || fn > res.f) break;  // stalled
    Eigen::VectorXd sv = a * dir;
    Eigen::VectorXd yv = gn - g;
    double sy = sv.dot(yv);
    res.x += sv;
    double f_change = res.f - fn;
    res.f = fn;
    g = gn;
    res.history.push_back(res.f);
    if (sy > 1e-12 * sv.norm() * yv.norm()) {
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd V = I - (sv * yv.transpose()) / sy;
      H = V * H * V.transpose() + (sv * sv.transpose()) / sy;
    }
    if (f_change <= 1e-12 * std::max(1.0, std::abs(res.f))) break;
  }
  res.grad_norm = g.cwiseAbs().maxCoeff();
  res.converged =
      res.grad_norm <= opt.grad_tol * std::max(1.0, std::abs(res.f));
  return res;
}

}  // namespace seaspde
