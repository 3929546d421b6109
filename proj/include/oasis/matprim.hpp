#pragma once

// Symmetric-matrix primitives shared by every identification scheme.
//
// Eigendecompositions are returned with eigenvalues in descending order and
// each eigenvector column signed so that its largest-magnitude entry is
// positive (first index wins on exact ties). Square roots are unique, but the
// fixed convention keeps intermediate Q matrices reproducible run to run.

#include <Eigen/Dense>

#include "oasis/errors.hpp"

namespace oasis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance used when asserting symmetry of inputs (relative to max |entry|).
inline constexpr double kSymmetryTol = 1e-12;

/// Positive-definite covariance matrix. Construction validates symmetry and
/// definiteness, so downstream code can rely on both.
class CovMatrix {
 public:
  /// Throws NotSymmetric or NotPositiveDefinite. The stored matrix is the
  /// exact symmetrization (S + S')/2 of the input.
  explicit CovMatrix(const Matrix& values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }

 private:
  Matrix values_;
};

struct Eigensystem {
  Vector values;   // descending
  Matrix vectors;  // columns orthonormal, sign-normalized
};

/// C = Λσ⁻¹ Σ Λσ⁻¹ with its eigendecomposition.
struct CorrStructure {
  Matrix C;
  Vector sigma;
  Vector eigvalues;
  Matrix eigvectors;
};

/// Orthonormal n×n matrix. Only obtainable through the checked factory.
class RotationMatrix {
 public:
  /// Accepts ‖R'R − I‖_F ≤ tol; throws NotOrthonormal otherwise.
  static RotationMatrix from(const Matrix& values, double tol = 1e-6);
  static RotationMatrix identity(Eigen::Index n);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  RotationMatrix transpose() const;

 private:
  explicit RotationMatrix(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// Symmetric eigendecomposition with the canonical ordering and signs.
Eigensystem sym_eigen(const Matrix& S);

/// Relative symmetry check: max|S − S'| ≤ tol · max(1, max|S|).
bool is_symmetric(const Matrix& S, double tol = kSymmetryTol);

/// Threshold below which an eigenvalue counts as non-positive: n·ε·λ_max.
double pd_threshold(Eigen::Index n, double lambda_max);

CorrStructure corr_from_cov(const CovMatrix& sigma_mat);

/// Q Λ^{1/2} Q'. Eigenvalues within the PD threshold of zero are clamped.
Matrix sym_sqrt(const Matrix& S);

/// Q Λ^{-1/2} Q'. Requires positive definiteness.
Matrix sym_inv_sqrt(const Matrix& S);

/// Lower-triangular L with positive diagonal and LL' = S.
Matrix cholesky_lower(const CovMatrix& S);

/// Eigen-based square root primitives applied to a precomputed eigensystem.
Matrix sym_power(const Eigensystem& es, double power);

/// Matrix with entries S_ij / (σ_i σ_j). Exposed for tests and proxies.
Matrix correlation_of(const Matrix& S, const Vector& sigma);

/// Frobenius norm of A'SA − I.
double feasibility_gap(const Matrix& A, const Matrix& S);

}  // namespace oasis
