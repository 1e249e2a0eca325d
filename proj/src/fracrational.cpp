#include "seaspde/fracrational.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "seaspde/rngutil.hpp"

namespace seaspde {
namespace {

constexpr double kIdentityTol = 1e-12;

double poly_eval(const Eigen::VectorXd& coef, double x) {
  double v = 0;
  for (int i = static_cast<int>(coef.size()) - 1; i >= 0; --i)
    v = v * x + coef[i];
  return v;
}

// Real roots via the companion matrix; throws if a clearly complex pair
// appears (the minimax approximant of x^s on a positive interval has real
// zeros and poles).
std::vector<double> poly_roots(const Eigen::VectorXd& coef) {
  int d = static_cast<int>(coef.size()) - 1;
  while (d > 0 && coef[d] == 0.0) --d;
  if (d == 0) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -coef[i] / coef[d];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
  std::vector<double> roots;
  for (int i = 0; i < d; ++i) {
    auto z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z.real())))
      throw NumericalError("fit_rational: complex factor in rational fit");
    roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

struct PolyPair {
  Eigen::VectorXd num;  // monomial coefficients, degree m+1
  Eigen::VectorXd den;  // monomial coefficients, degree m
};

// Monomial coefficients of T_j(xi(u)) with xi the affine map [lo,hi]->[-1,1],
// built from the Chebyshev recurrence by polynomial arithmetic. Degrees here
// are tiny (<= m+1), so the conversion is well conditioned.
std::vector<Eigen::VectorXd> cheb_monomials(int max_deg, double lo,
                                            double hi) {
  double a = 2.0 / (hi - lo);
  double b = -(hi + lo) / (hi - lo);
  std::vector<Eigen::VectorXd> T(max_deg + 1);
  T[0] = Eigen::VectorXd::Ones(1);
  if (max_deg >= 1) {
    T[1] = Eigen::VectorXd(2);
    T[1] << b, a;
  }
  for (int k = 2; k <= max_deg; ++k) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(k + 1);
    // 2*xi(u)*T_{k-1}
    for (int i = 0; i < T[k - 1].size(); ++i) {
      next[i] += 2.0 * b * T[k - 1][i];
      next[i + 1] += 2.0 * a * T[k - 1][i];
    }
    next.head(T[k - 2].size()) -= T[k - 2];
    T[k] = next;
  }
  return T;
}

struct RemezResult {
  PolyPair poly;
  double max_err = std::numeric_limits<double>::infinity();
};

// One linearized step of the rational Remez exchange: on the reference set
// solve N(x_i) - f_i D(x_i) = sigma_i E f_i D(x_i) as a generalized
// eigenproblem and take the valid eigenpair of smallest |E|.
bool remez_solve(const Eigen::VectorXd& refs, const Eigen::VectorXd& frefs,
                 const std::vector<Eigen::VectorXd>& Tmono, int m,
                 const Eigen::VectorXd& grid, PolyPair* out) {
  const int nn = m + 2;
  const int nd = m + 1;
  const int n = static_cast<int>(refs.size());  // 2m+3
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, nn + nd);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, nn + nd);
  for (int i = 0; i < n; ++i) {
    double sigma = (i % 2 == 0) ? 1.0 : -1.0;
    for (int j = 0; j < nn; ++j) A(i, j) = poly_eval(Tmono[j], refs[i]);
    for (int j = 0; j < nd; ++j) {
      double psi = poly_eval(Tmono[j], refs[i]);
      A(i, nn + j) = -frefs[i] * psi;
      B(i, nn + j) = sigma * frefs[i] * psi;
    }
  }
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
  ges.compute(A, B);
  double best_abs = std::numeric_limits<double>::infinity();
  PolyPair best;
  bool found = false;
  for (int k = 0; k < n; ++k) {
    std::complex<double> alpha = ges.alphas()[k];
    double beta = ges.betas()[k];
    if (std::abs(beta) < 1e-14 * (1.0 + std::abs(alpha))) continue;
    std::complex<double> E = alpha / beta;
    if (std::abs(E.imag()) > 1e-10 * (1.0 + std::abs(E.real()))) continue;
    if (std::abs(E.real()) >= 1.0) continue;  // >100% relative error
    Eigen::VectorXcd vc = ges.eigenvectors().col(k);
    if (vc.imag().cwiseAbs().maxCoeff() >
        1e-8 * (1e-30 + vc.real().cwiseAbs().maxCoeff()))
      continue;
    Eigen::VectorXd v = vc.real();
    PolyPair cand;
    cand.num = Eigen::VectorXd::Zero(nn);
    cand.den = Eigen::VectorXd::Zero(nd);
    for (int j = 0; j < nn; ++j)
      cand.num.head(Tmono[j].size()) += v[j] * Tmono[j];
    for (int j = 0; j < nd; ++j)
      cand.den.head(Tmono[j].size()) += v[nn + j] * Tmono[j];
    // The denominator must keep one sign across the whole interval.
    bool dpos = true, dneg = true;
    for (int g = 0; g < grid.size(); ++g) {
      double d = poly_eval(cand.den, grid[g]);
      dpos = dpos && d > 0;
      dneg = dneg && d < 0;
    }
    if (!dpos && !dneg) continue;
    if (dneg) {
      cand.num = -cand.num;
      cand.den = -cand.den;
    }
    if (std::abs(E.real()) < best_abs) {
      best_abs = std::abs(E.real());
      best = cand;
      found = true;
    }
  }
  if (found) *out = best;
  return found;
}

double max_rel_error_grid(const PolyPair& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& f) {
  double e = 0;
  for (int i = 0; i < x.size(); ++i) {
    double d = poly_eval(p.den, x[i]);
    if (d == 0) return std::numeric_limits<double>::infinity();
    e = std::max(e, std::abs(poly_eval(p.num, x[i]) / d / f[i] - 1.0));
  }
  return e;
}

// Best (m+1)/m relative approximation of u^s on [delta, 1] by Remez
// exchange; falls back to the best iterate if the exchange stalls.
RemezResult remez_fit(double s, double delta, int m) {
  const int nref = 2 * m + 3;
  const int ng = 4000;
  Eigen::VectorXd grid(ng), fgrid(ng);
  for (int i = 0; i < ng; ++i) {
    double t = std::cos(kPi * i / (ng - 1));  // [-1, 1]
    grid[i] = std::exp(0.5 * std::log(delta) * (1 - t));
    fgrid[i] = std::pow(grid[i], s);
  }
  auto Tmono = cheb_monomials(m + 1, delta, 1.0);

  // Initial references: Chebyshev-extrema spacing in log coordinates.
  Eigen::VectorXd refs(nref), frefs(nref);
  for (int i = 0; i < nref; ++i) {
    double t = std::cos(kPi * i / (nref - 1));
    refs[i] = std::exp(0.5 * std::log(delta) * (1 - t));
    frefs[i] = std::pow(refs[i], s);
  }

  RemezResult best;
  for (int it = 0; it < 40; ++it) {
    PolyPair cand;
    if (!remez_solve(refs, frefs, Tmono, m, grid, &cand)) break;
    double err = max_rel_error_grid(cand, grid, fgrid);
    if (err < best.max_err) {
      best.max_err = err;
      best.poly = cand;
    }

    // Multi-point exchange: one extremum per sign segment of the error.
    Eigen::VectorXd e(ng);
    for (int i = 0; i < ng; ++i)
      e[i] = poly_eval(cand.num, grid[i]) / poly_eval(cand.den, grid[i]) /
                 fgrid[i] -
             1.0;
    struct Seg {
      int arg;
      double mag;
    };
    std::vector<Seg> segs;
    int i0 = 0;
    while (i0 < ng) {
      int i1 = i0;
      double sgn = e[i0] >= 0 ? 1.0 : -1.0;
      int arg = i0;
      double mag = std::abs(e[i0]);
      while (i1 + 1 < ng && (e[i1 + 1] >= 0 ? 1.0 : -1.0) == sgn) {
        ++i1;
        if (std::abs(e[i1]) > mag) {
          mag = std::abs(e[i1]);
          arg = i1;
        }
      }
      segs.push_back({arg, mag});
      i0 = i1 + 1;
    }
    if (static_cast<int>(segs.size()) < nref) break;
    // Trim to nref segments, dropping the weakest while preserving
    // alternation (ends drop singly; interior drops merge neighbors).
    while (static_cast<int>(segs.size()) > nref) {
      size_t worst = 0;
      for (size_t k = 1; k < segs.size(); ++k)
        if (segs[k].mag < segs[worst].mag) worst = k;
      if (worst == 0)
        segs.erase(segs.begin());
      else if (worst + 1 == segs.size())
        segs.pop_back();
      else {
        Seg merged = segs[worst - 1].mag >= segs[worst + 1].mag
                         ? segs[worst - 1]
                         : segs[worst + 1];
        segs[worst - 1] = merged;
        segs.erase(segs.begin() + worst, segs.begin() + worst + 2);
      }
    }
    Eigen::VectorXd nrefs(nref);
    for (int k = 0; k < nref; ++k) nrefs[k] = grid[segs[k].arg];
    std::sort(nrefs.data(), nrefs.data() + nref);
    bool same = (nrefs - refs).cwiseAbs().maxCoeff() <
                1e-12 * (1.0 + refs.cwiseAbs().maxCoeff());
    refs = nrefs;
    for (int k = 0; k < nref; ++k) frefs[k] = std::pow(refs[k], s);
    if (same) break;
  }
  return best;
}

}  // namespace

double eval_rational_pl(const RationalCoeffs& c, double x) {
  double v = c.scale_b;
  for (double r : c.poles_r2) v *= (1.0 - r * x);
  return v;
}

double eval_rational_pr(const RationalCoeffs& c, double x) {
  double v = c.scale_c;
  for (double r : c.roots_r1) v *= (1.0 - r * x);
  return v;
}

RationalCoeffs fit_rational(double alpha, double lo, double hi, int m) {
  if (alpha < 1.0) throw ConfigError("fit_rational: alpha must be >= 1");
  if (!(0 < lo && lo < hi)) throw ConfigError("fit_rational: need 0 < lo < hi");
  if (m < 1) throw ConfigError("fit_rational: m must be >= 1");

  RationalCoeffs out;
  out.m = m;
  out.m_alpha = std::max(1, static_cast<int>(std::floor(alpha)));
  out.exponent_s = 0.5 * alpha - (out.m_alpha - 1);
  out.lo = lo;
  out.hi = hi;
  if (std::abs(out.exponent_s) < kIdentityTol) {
    out.identity = true;
    out.poles_r2.assign(m + 1, 0.0);
    out.roots_r1.assign(m, 0.0);
    out.max_rel_error = 0.0;
    return out;
  }
  const double s = out.exponent_s;
  const double delta = lo / hi;

  RemezResult fitres = remez_fit(s, delta, m);
  if (!std::isfinite(fitres.max_err))
    throw NumericalError("fit_rational: exchange did not converge");
  const PolyPair& best = fitres.poly;

  std::vector<double> zn = poly_roots(best.num);
  std::vector<double> zd = poly_roots(best.den);
  if (static_cast<int>(zn.size()) != m + 1 ||
      static_cast<int>(zd.size()) != m)
    throw NumericalError("fit_rational: unexpected factor degrees");
  for (double z : zn)
    if (std::abs(z) < 1e-14)
      throw NumericalError("fit_rational: numerator root at the origin");
  for (double z : zd)
    if (std::abs(z) < 1e-14)
      throw NumericalError("fit_rational: denominator root at the origin");

  // Map u = x/hi back to x and factor as b prod(1 - r x) / c prod(1 - r x).
  out.scale_b = std::pow(hi, s) * poly_eval(best.num, 0.0);
  out.scale_c = poly_eval(best.den, 0.0);
  for (double z : zn) out.poles_r2.push_back(1.0 / (hi * z));
  for (double z : zd) out.roots_r1.push_back(1.0 / (hi * z));

  // Report the achieved error of the factored form on a dense grid, and
  // verify positivity on the interval.
  const int nv = 10000;
  double err = 0;
  for (int i = 0; i < nv; ++i) {
    double xx = lo * std::pow(hi / lo, i / double(nv - 1));
    double pl = eval_rational_pl(out, xx);
    double pr = eval_rational_pr(out, xx);
    double target = std::pow(xx, s);
    if (!(pl / pr > 0))
      throw NumericalError(
          "fit_rational: rational not positive on the interval");
    err = std::max(err, std::abs(pl / pr / target - 1.0));
  }
  out.max_rel_error = err;
  return out;
}

std::pair<double, double> spectral_interval(const SpMat& K,
                                            const Eigen::VectorXd& C) {
  const int n = static_cast<int>(K.rows());
  // Gershgorin bounds on C^{-1}K are loose at the top and degenerate to
  // <= 0 at the bottom for stiffness-dominated rows, so both ends come from
  // deterministic power/inverse iterations, padded outward.
  NormalSampler rng(0x5eed);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng();
  v.normalize();
  double hi = 0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd w = K * v;
    hi = v.dot(w) / v.dot(C.cwiseProduct(v));
    v = C.cwiseInverse().cwiseProduct(w);
    v /= v.norm();
  }

  SparseChol kchol(K);
  for (int i = 0; i < n; ++i) v[i] = rng();
  v.normalize();
  double lo = hi;
  for (int it = 0; it < 12; ++it) {
    Eigen::VectorXd cv = C.cwiseProduct(v);
    v = kchol.solve(cv);
    v /= v.norm();
    lo = v.dot(K * v) / v.dot(C.cwiseProduct(v));
  }
  lo = std::max(lo * 0.95, 1e-300);
  return {lo, hi * 1.05};
}

FractionalOperator build_factors(const SpMat& K, const Eigen::VectorXd& C,
                                 const RationalCoeffs& coeffs) {
  if (K.rows() != K.cols() || K.rows() != C.size())
    throw ConfigError("build_factors: dimension mismatch");
  FractionalOperator op;
  op.K = K;
  op.C = C;
  op.Cinv = C.cwiseInverse();
  op.coeffs = coeffs;

  const int n = static_cast<int>(K.rows());
  SpMat Lh = op.Cinv.asDiagonal() * K;
  SpMat I(n, n);
  I.setIdentity();

  SpMat pl = I;
  for (int p = 1; p < coeffs.m_alpha; ++p) pl = (pl * Lh).pruned();
  if (!coeffs.identity) {
    for (double r : coeffs.poles_r2) {
      SpMat f = I - r * Lh;
      pl = (pl * f).pruned();
    }
  }
  pl = coeffs.scale_b * pl;
  op.Pl = op.C.asDiagonal() * pl;
  // Symmetric up to rounding; enforce exactly for the Cholesky below.
  op.Pl = 0.5 * (SpMat(op.Pl.transpose()) + op.Pl);

  SpMat pr = I;
  if (!coeffs.identity) {
    for (double r : coeffs.roots_r1) {
      SpMat f = I - r * Lh;
      pr = (pr * f).pruned();
    }
  }
  op.Pr = coeffs.scale_c * pr;

  SpMat Q = SpMat(op.Pl.transpose()) * op.Cinv.asDiagonal() * op.Pl;
  op.latent_precision = 0.5 * (SpMat(Q.transpose()) + Q);

  try {
    op.Pl_chol = std::make_shared<SparseChol>(op.Pl);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("build_factors: singular factor: ") +
                         e.what());
  }
  return op;
}

FractionalOperator make_fractional(const SpMat& K, const Eigen::VectorXd& C,
                                   double alpha, int m) {
  auto [lo, hi] = spectral_interval(K, C);
  return build_factors(K, C, fit_rational(alpha, lo, hi, m));
}

Eigen::VectorXd nested_sample(const FractionalOperator& op,
                              const Eigen::VectorXd& noise) {
  return op.Pr * op.Pl_chol->solve(noise);
}

Eigen::MatrixXd nested_sample_batch(const FractionalOperator& op, int n,
                                    std::uint64_t seed, Exec exec) {
  const int N = static_cast<int>(op.K.rows());
  Eigen::MatrixXd out(N, n);
  Eigen::VectorXd csqrt = op.C.cwiseSqrt();
  auto draw = [&](int c) {
    NormalSampler rng(mix_seed(seed, c));
    Eigen::VectorXd z(N);
    for (int i = 0; i < N; ++i) z[i] = csqrt[i] * rng();
    out.col(c) = nested_sample(op, z);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n; ++c) draw(c);
  } else {
    for (int c = 0; c < n; ++c) draw(c);
  }
  return out;
}

}  // namespace seaspde
