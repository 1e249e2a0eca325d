// Stepwise maximum-likelihood pipeline: marginal field estimation per
// variable, then cross-correlation estimation by full ML or by the pointwise
// product likelihood on sample cross-correlations.
#pragma once

#include <memory>
#include <string>

#include "seaspde/bivarmodel.hpp"
#include "seaspde/common.hpp"
#include "seaspde/mesh.hpp"
#include "seaspde/optimizer.hpp"

namespace seaspde {

struct Dataset {
  std::vector<Eigen::Vector2d> locations;  // chart coordinates
  Eigen::MatrixXd log_hs;                  // replicates x locations
  Eigen::MatrixXd log_t;                   // replicates x locations
  // Lattice bookkeeping for the shifted cross-correlation search; empty when
  // the locations do not form a lattice.
  std::vector<Eigen::Vector2i> grid_index;
  int grid_nx = 0, grid_ny = 0;

  int n_locations() const { return static_cast<int>(locations.size()); }
  int n_replicates() const { return static_cast<int>(log_hs.rows()); }
};

// Pointwise standardization: mean and (n-1)-variance per column; the
// standardized columns have mean 0 and unit variance exactly.
struct StandardizedField {
  Eigen::MatrixXd z;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};
StandardizedField standardize(const Eigen::MatrixXd& raw);

struct FitConfig {
  int k = 4;               // cosine basis order
  int m_rational = 2;
  double alpha_init = 2.0;
  double nugget_init = 1e-2;
  int max_iter = 500;
  double grad_tol = 1e-5;
  double fd_step = 1e-5;
  int shift_radius_cells = 5;
  std::string rho_method = "pointwise";  // or "fullml"
  bool shifted_gamma = false;  // use shift-maximized sample correlations
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;
};

struct FitReport {
  Eigen::VectorXd parameters;
  double final_nll = 0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0;
  std::vector<double> objective_history;
};

// Exact Gaussian log-likelihood of standardized replicates Z (rows = time)
// under the latent field + nugget, through sparse factorizations only.
// Returns -inf on factorization failure.
double marginal_loglik(const Mesh& mesh, const SpMat& A_full,
                       const DeformationParams& d, double alpha,
                       double nugget_var, const Eigen::MatrixXd& Z,
                       int m_rational);

// Maximizes marginal_loglik over {h1,h2,h3 coefficients, log(alpha-1),
// log nugget}. Initialization: isotropic h-fields with kappa from a
// nearest-neighbour correlation heuristic.
struct MarginalFit {
  MarginalSpec spec;
  FitReport report;
};
MarginalFit fit_marginal(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations,
                         const StandardizedField& field,
                         const FitConfig& cfg);

// Joint bivariate Gaussian log-likelihood with both marginals fixed.
double bivariate_loglik(const Mesh& mesh, const SpMat& A_full,
                        const MarginalSpec& sx, const MarginalSpec& sy,
                        const CrossCorrField& rho, const Eigen::MatrixXd& Zx,
                        const Eigen::MatrixXd& Zy, int m_rational);

struct RhoFit {
  CrossCorrField rho;
  FitReport report;
};

RhoFit fit_rho_fullml(const Mesh& mesh,
                      const std::vector<Eigen::Vector2d>& locations,
                      const MarginalSpec& sx, const MarginalSpec& sy,
                      const Eigen::MatrixXd& Zx, const Eigen::MatrixXd& Zy,
                      const FitConfig& cfg);

// Product likelihood of the per-location bivariate pairs expressed through
// the sample cross-correlations:
//   l = sum_j O_j [ -log(2 pi) - 1/2 log(1-g_j^2) - 1/(1-g_j^2)
//                   + g_j/(1-g_j^2) * ((O_j-1)/O_j) ghat_j ]
// which is stationary in g_j at ghat_j (O_j-1)/O_j.
double pointwise_ml_objective(const Eigen::VectorXd& gamma_model,
                              const Eigen::VectorXd& gamma_hat,
                              const Eigen::VectorXd& counts);

RhoFit fit_rho_pointwise(const Mesh& mesh,
                         const std::vector<Eigen::Vector2d>& locations,
                         const MarginalSpec& sx, const MarginalSpec& sy,
                         const Eigen::VectorXd& gamma_hat,
                         const Eigen::VectorXd& counts, const FitConfig& cfg);

// Per-location Pearson cross-correlation between the fields, and the
// shift-maximized variant searched over the lattice within a radius.
struct CrossCorrStats {
  Eigen::VectorXd gamma_hat;
  Eigen::VectorXd gamma_shifted;
  std::vector<Eigen::Vector2i> shifts;   // lattice offsets of the maximizer
  std::vector<char> valid;               // 0 for excluded (zero variance)
  Eigen::VectorXd counts;                // O_j
};
CrossCorrStats sample_crosscorr_stats(const Dataset& data, int radius_cells);

// Bounding box of a location set, the chart for all cosine fields.
BoundingBox bounding_box(const std::vector<Eigen::Vector2d>& locations);

}  // namespace seaspde
