// Galerkin FEM assembly on the triangulated domain: lumped mass C, reaction
// matrix B, diffusion matrix G, operator matrix K = B + G, and the
// rho-coupling matrices of the bivariate system. Spatially varying
// coefficients are evaluated with a one-point (centroid) quadrature rule.
#pragma once

#include <optional>
#include <string>

#include "seaspde/common.hpp"
#include "seaspde/mesh.hpp"
#include "seaspde/paramfield.hpp"

namespace seaspde {

struct OperatorMatrices {
  Eigen::VectorXd C;     // lumped mass diagonal <phi_i, 1>
  Eigen::VectorXd Cinv;  // elementwise inverse
  SpMat B;               // reaction term
  SpMat G;               // diffusion term
  SpMat K;               // B + G
};

struct CrossMatrices {
  SpMat C_rho;  // lumped <rho phi_i, phi_j> (diagonal)
  SpMat K_rho;  // -C^{-1} C_rho K_Y
};

// Lumped mass over all vertices: C_ii = sum of incident triangle areas / 3.
Eigen::VectorXd assemble_mass(const Mesh& mesh);

// Consistent mass <phi_i, phi_j>; kept for oracle tests only.
SpMat consistent_mass(const Mesh& mesh);

// Assembles the operator of L = kappa^{2/alpha-2} (kappa^2 - div H grad)
// with the prefactor folded into the per-triangle coefficient. When
// rho_fold is given, the coefficient gains the factor (1 + rho^2)^{1/alpha},
// which after the alpha/2 power realizes the sqrt(1+rho^2) scaling of the
// first equation of the coupled system.
OperatorMatrices assemble_operator(const Mesh& mesh,
                                   const DeformationParams& d, double alpha,
                                   const CosineField* rho_fold = nullptr,
                                   Exec exec = Exec::parallel);

// Lumped <rho phi_i, phi_j> diagonal over all vertices.
Eigen::VectorXd assemble_rho_mass(const Mesh& mesh, const CrossCorrField& rho);

// C_rho with rho at centroids and mass lumping, and K_rho = -C^{-1} C_rho K_Y.
// K_Y and C may be indexed over all vertices or over active vertices.
CrossMatrices assemble_cross(const Mesh& mesh, const CrossCorrField& rho,
                             const SpMat& K_Y, const Eigen::VectorXd& C);

// Drops rows/columns of Dirichlet (outer-boundary) vertices.
SpMat restrict_to_active(const SpMat& full, const Mesh& mesh);
Eigen::VectorXd restrict_to_active(const Eigen::VectorXd& full,
                                   const Mesh& mesh);

// Text export, one `i j value` line per stored entry.
void export_coo(const SpMat& m, const std::string& path);

}  // namespace seaspde
