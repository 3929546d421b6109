#include "oasis/matprim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oasis {

namespace {

void require_square(const Matrix& S, const char* what) {
  if (S.rows() != S.cols() || S.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must be a non-empty square matrix");
  }
}

}  // namespace

bool is_symmetric(const Matrix& S, double tol) {
  if (S.rows() != S.cols()) return false;
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return (S - S.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double pd_threshold(Eigen::Index n, double lambda_max) {
  return static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lambda_max;
}

Eigensystem sym_eigen(const Matrix& S) {
  require_square(S, "eigendecomposition input");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidArgument, "eigendecomposition did not converge");
  }
  const Eigen::Index n = S.rows();
  // Eigen returns ascending order; reverse to descending.
  Eigensystem es{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    es.values(k) = solver.eigenvalues()(n - 1 - k);
    es.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(es.vectors(i, k));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (es.vectors(arg, k) < 0.0) es.vectors.col(k) *= -1.0;
  }
  return es;
}

Matrix correlation_of(const Matrix& S, const Vector& sigma) {
  const Eigen::Index n = S.rows();
  Matrix C(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      C(i, j) = (i == j) ? 1.0 : S(i, j) / (sigma(i) * sigma(j));
    }
  }
  return C;
}

CovMatrix::CovMatrix(const Matrix& values) {
  require_square(values, "covariance matrix");
  if (!values.allFinite()) {
    throw Error(ErrorKind::NotPositiveDefinite, "covariance matrix has non-finite entries");
  }
  if (!is_symmetric(values)) {
    throw Error(ErrorKind::NotSymmetric, "covariance matrix is not symmetric");
  }
  values_ = 0.5 * (values + values.transpose());
  const Eigen::Index n = values_.rows();
  if ((values_.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorKind::NotPositiveDefinite, "covariance matrix has a non-positive variance");
  }
  // Definiteness is judged on the correlation matrix so that the cutoff does
  // not depend on the units of the series.
  const Vector sigma = values_.diagonal().cwiseSqrt();
  const Vector lambda = Eigen::SelfAdjointEigenSolver<Matrix>(correlation_of(values_, sigma), Eigen::EigenvaluesOnly).eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (lambda.minCoeff() <= pd_threshold(n, lmax)) {
    throw Error(ErrorKind::NotPositiveDefinite, "smallest eigenvalue of the correlation matrix is not positive");
  }
}

RotationMatrix RotationMatrix::from(const Matrix& values, double tol) {
  if (values.rows() != values.cols() || values.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "rotation must be a non-empty square matrix");
  }
  const Matrix gap = values.transpose() * values - Matrix::Identity(values.rows(), values.cols());
  if (!values.allFinite() || gap.norm() > tol) {
    throw Error(ErrorKind::NotOrthonormal, "R'R deviates from the identity");
  }
  return RotationMatrix(values);
}

RotationMatrix RotationMatrix::identity(Eigen::Index n) { return RotationMatrix(Matrix::Identity(n, n)); }

RotationMatrix RotationMatrix::transpose() const { return RotationMatrix(values_.transpose()); }

CorrStructure corr_from_cov(const CovMatrix& sigma_mat) {
  const Matrix& S = sigma_mat.values();
  CorrStructure out;
  out.sigma = S.diagonal().cwiseSqrt();
  out.C = correlation_of(S, out.sigma);
  Eigensystem es = sym_eigen(out.C);
  if (es.values(es.values.size() - 1) <= pd_threshold(S.rows(), es.values(0))) {
    throw Error(ErrorKind::NotPositiveDefinite, "correlation matrix is singular");
  }
  out.eigvalues = std::move(es.values);
  out.eigvectors = std::move(es.vectors);
  return out;
}

Matrix sym_power(const Eigensystem& es, double power) {
  Vector scaled(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    scaled(i) = es.values(i) == 0.0 ? 0.0 : std::pow(es.values(i), power);
  }
  Matrix out = es.vectors * scaled.asDiagonal() * es.vectors.transpose();
  // Exact symmetry; the product above is symmetric only up to rounding.
  return 0.5 * (out + out.transpose());
}

Matrix sym_sqrt(const Matrix& S) {
  require_square(S, "sym_sqrt input");
  if (!is_symmetric(S)) throw Error(ErrorKind::NotSymmetric, "sym_sqrt input is not symmetric");
  Eigensystem es = sym_eigen(0.5 * (S + S.transpose()));
  const double tol = pd_threshold(S.rows(), std::max(0.0, es.values(0)));
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) < -tol) throw Error(ErrorKind::NegativeEigenvalue, "sym_sqrt input has a negative eigenvalue");
    if (es.values(i) < 0.0) es.values(i) = 0.0;
  }
  return sym_power(es, 0.5);
}

Matrix sym_inv_sqrt(const Matrix& S) {
  require_square(S, "sym_inv_sqrt input");
  if (!is_symmetric(S)) throw Error(ErrorKind::NotSymmetric, "sym_inv_sqrt input is not symmetric");
  const Eigensystem es = sym_eigen(0.5 * (S + S.transpose()));
  const Eigen::Index n = S.rows();
  if (es.values(0) <= 0.0 || es.values(n - 1) <= pd_threshold(n, es.values(0))) {
    throw Error(ErrorKind::NotPositiveDefinite, "sym_inv_sqrt input is not positive definite");
  }
  return sym_power(es, -0.5);
}

Matrix cholesky_lower(const CovMatrix& S) {
  Eigen::LLT<Matrix> llt(S.values());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  }
  return llt.matrixL();
}

double feasibility_gap(const Matrix& A, const Matrix& S) {
  if (A.rows() != S.rows() || S.rows() != S.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "A and Σ dimensions disagree");
  }
  return (A.transpose() * S * A - Matrix::Identity(A.cols(), A.cols())).norm();
}

}  // namespace oasis
