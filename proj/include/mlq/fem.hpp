#pragma once

#include <Eigen/Sparse>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlq/coeff.hpp"
#include "mlq/mesh.hpp"

namespace mlq {

/// Failures of the numerical pipeline: lost ellipticity, solver breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Reduced P1 system after symmetric elimination of the Dirichlet vertices.
struct SparseSystem {
  MeshPtr mesh;
  SparseMatrix matrix;
  Eigen::VectorXd load;
  std::vector<int> unknown_vertex;  // reduced index -> mesh vertex

  std::size_t unknowns() const { return unknown_vertex.size(); }
  std::vector<Eigen::Triplet<double>> triplets() const;
};

struct SolverOptions {
  double rel_tol = 1e-2;
  bool jacobi = true;
  double max_iteration_factor = 10.0;  // iterations allowed per unknown
};

/// 1e-2 * 2^-level: keeps the algebraic error below the discretization error.
double default_rel_tol(int level);

/// Per-mesh assembly data reused across parameter values: unit-coefficient
/// local stiffness matrices, the sparsity pattern, the load vector, and the
/// coefficient terms evaluated at triangle centroids.
class Discretization {
 public:
  Discretization(MeshPtr mesh, const ProblemSpec& problem);

  const MeshPtr& mesh() const { return mesh_; }
  std::size_t unknowns() const { return unknown_vertex_.size(); }
  std::size_t dimension() const { return dimension_; }

  /// Coefficient at the centroid of triangle t for parameter y.
  double alpha_at(std::size_t t, std::span<const double> y) const;

  SparseSystem assemble(std::span<const double> y) const;
  ScalarField solve(std::span<const double> y, const SolverOptions& options) const;

 private:
  MeshPtr mesh_;
  std::size_t dimension_ = 0;
  bool reciprocal_ = false;
  ReciprocalProductCoefficient reciprocal_coeff_{6};
  std::vector<double> centroid_terms_;  // per triangle: phi0, term_1..term_m
  std::vector<std::array<double, 9>> local_;
  std::vector<std::array<int, 9>> slots_;  // value index in the pattern, -1 if eliminated
  std::vector<int> vertex_unknown_;
  std::vector<int> unknown_vertex_;
  SparseMatrix pattern_;
  Eigen::VectorXd load_;
};

SparseSystem assemble(const MeshPtr& mesh, const Coefficient& coeff, std::span<const double> y,
                      const SpatialFunction& source);

/// Conjugate gradients to relative residual rel_tol; throws NumericalError
/// after max_iteration_factor * unknowns iterations.
ScalarField solve(const SparseSystem& system, const SolverOptions& options = {});

/// sqrt(sum_T |T| (|grad u|^2 + u(c_T)^2)).
double h1_norm(const ScalarField& field);
/// sum_T |T| (|grad u| + |u(c_T)|).
double w11_norm(const ScalarField& field);

}  // namespace mlq
