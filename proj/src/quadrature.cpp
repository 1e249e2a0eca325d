#include "seaspde/quadrature.hpp"

#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace seaspde {
namespace {

// Kronrod-15 abscissae (positive half) and weights, Gauss-7 weights on the
// shared nodes.
const double kXgk[8] = {0.991455371120813, 0.949107912342759,
                        0.864864423359769, 0.741531185599394,
                        0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979,
                        0.104790010322250, 0.140653259715525,
                        0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277,
                       0.381830050505119, 0.417959183673469};

struct Segment {
  double a, b;
  Eigen::VectorXd val;
  Eigen::VectorXd err;
  double score;
};

Segment eval_segment(const std::function<void(double, double*)>& f, int k,
                     double a, double b) {
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  Eigen::VectorXd kron = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd gauss = Eigen::VectorXd::Zero(k);
  std::vector<double> buf(k);
  for (int i = 0; i < 8; ++i) {
    for (int sgn = 0; sgn < (i == 7 ? 1 : 2); ++sgn) {
      double x = c + (sgn == 0 ? 1.0 : -1.0) * h * kXgk[i];
      f(x, buf.data());
      for (int j = 0; j < k; ++j) {
        kron[j] += kWgk[i] * buf[j];
        if (i % 2 == 1) gauss[j] += kWg[i / 2] * buf[j];
      }
    }
  }
  Segment s;
  s.a = a;
  s.b = b;
  s.val = h * kron;
  s.err = (h * (kron - gauss)).cwiseAbs();
  s.score = s.err.maxCoeff();
  return s;
}

}  // namespace

Eigen::VectorXd gk_adaptive(const std::function<void(double, double*)>& f,
                            int k, double a, double b, double reltol,
                            double abstol, int max_segments) {
  auto cmp = [](const Segment& x, const Segment& y) {
    return x.score < y.score;
  };
  std::priority_queue<Segment, std::vector<Segment>, decltype(cmp)> q(cmp);
  q.push(eval_segment(f, k, a, b));
  Eigen::VectorXd total = q.top().val;
  Eigen::VectorXd toterr = q.top().err;
  int n_seg = 1;
  while (n_seg < max_segments) {
    bool done = true;
    for (int j = 0; j < k; ++j)
      if (toterr[j] > reltol * std::abs(total[j]) + abstol) done = false;
    if (done) return total;
    Segment worst = q.top();
    q.pop();
    double mid = 0.5 * (worst.a + worst.b);
    Segment l = eval_segment(f, k, worst.a, mid);
    Segment r = eval_segment(f, k, mid, worst.b);
    total += l.val + r.val - worst.val;
    toterr += l.err + r.err - worst.err;
    q.push(l);
    q.push(r);
    ++n_seg;
  }
  std::ostringstream msg;
  msg << "gk_adaptive: no convergence after " << max_segments
      << " segments; residual estimate " << toterr.maxCoeff();
  throw NumericalError(msg.str());
}

}  // namespace seaspde
