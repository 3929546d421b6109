#pragma once

// Identification of structural shocks u = A'ε with A'ΣA = I.
//
// Every scheme returns A together with B = (A')⁻¹ (so ε = Bu), the per-shock
// correlations corr(u_i, ε_i) and their mean. Shock i is always labelled by
// variable i of the original ordering, whatever ordering a Cholesky factor was
// computed under.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oasis/matprim.hpp"

namespace oasis {

/// Tolerance on ‖A'ΣA − I‖_F for matrices supplied from outside the library.
inline constexpr double kFeasibilityTol = 1e-6;

class Weights {
 public:
  /// Throws NonpositiveWeight unless every entry is finite and > 0.
  explicit Weights(Vector w);
  static Weights equal(Eigen::Index n) { return Weights(Vector::Ones(n)); }

  const Vector& values() const noexcept { return w_; }
  Eigen::Index size() const noexcept { return w_.size(); }

 private:
  Vector w_;
};

/// A permutation of 0..n−1; position k holds the variable ordered k-th.
class Ordering {
 public:
  /// Throws InvalidPermutation.
  explicit Ordering(std::vector<int> order);
  static Ordering identity(int n);

  const std::vector<int>& indices() const noexcept { return order_; }
  int size() const noexcept { return static_cast<int>(order_.size()); }
  Ordering reversed() const;
  /// One-based, space separated, e.g. "3 1 2".
  std::string to_string() const;

  friend bool operator==(const Ordering&, const Ordering&) = default;

 private:
  std::vector<int> order_;
};

enum class SchemeKind { Oasis, WeightedOasis, Cholesky, SequentialMaxCorr, External };

struct Scheme {
  SchemeKind kind = SchemeKind::Oasis;
  std::optional<Vector> weights;
  std::optional<Ordering> ordering;

  std::string label() const;
};

struct IdentificationResult {
  Scheme scheme;
  Matrix A;
  Matrix B;
  Vector per_shock_corr;
  double avg_corr = 0.0;
  /// Σ w_i corr(u_i, ε_i); equals n·avg_corr for unit weights.
  double objective = 0.0;
};

struct CorrelationSummary {
  Vector per_shock;
  double weighted_sum = 0.0;
  double average = 0.0;
};

struct Diagnostics {
  double d_C = 0.0;
  double abs_corr_mean = 0.0;
  double rho_star = 1.0;
  double rho_chol = 1.0;
  /// (1−ρ̄_c)/(1−ρ̄*); empty when ρ̄* is numerically one.
  std::optional<double> proximity_ratio;
  double approx_star = 1.0;
  double approx_chol = 1.0;
  /// 1−ρ̄* and 1−ρ̄_c computed without cancellation.
  double gap_star = 0.0;
  double gap_chol = 0.0;
};

struct PermutationScan {
  double min_rho = 1.0;
  double max_rho = 1.0;
  Ordering argmin = Ordering::identity(1);
  Ordering argmax = Ordering::identity(1);
  bool exhaustive = true;
  std::uint64_t evaluated = 0;
};

struct EquicorrValues {
  double rho_star = 1.0;
  double rho_chol = 1.0;
};

struct DownscaleDecomposition {
  Matrix M;               // Q'R'Q
  Vector sqrt_lambda;     // λ_i^{1/2}, descending λ
  double reconstruction;  // Σ M_ii λ_i^{1/2} = n·ρ̄(A)
};

inline constexpr std::uint64_t kDefaultScanBudget = 5'040'000;

IdentificationResult oasis(const CovMatrix& sigma);
IdentificationResult weighted_oasis(const CovMatrix& sigma, const Weights& w);
IdentificationResult cholesky_id(const CovMatrix& sigma, const Ordering& ordering);
/// Upper-triangular factorization, i.e. Cholesky under the reversed ordering.
IdentificationResult cholesky_upper_id(const CovMatrix& sigma, const Ordering& ordering);
/// Solves the j-th constrained correlation maximization directly by
/// Σ-orthogonal projection. Equals cholesky_id under the identity ordering.
IdentificationResult sequential_max_corr(const CovMatrix& sigma);

/// Wraps an externally supplied feasible A. Throws NotInFeasibleSet.
IdentificationResult from_matrix(const Matrix& A, const CovMatrix& sigma);

/// diag(A'Λσ C) and its (weighted) aggregates. Throws NotInFeasibleSet.
CorrelationSummary avg_corr(const Matrix& A, const CovMatrix& sigma, const Weights& w);
CorrelationSummary avg_corr(const Matrix& A, const CovMatrix& sigma);

/// R = A1⁻¹A2, so u2 = R'u1. Throws SingularMatrix or NotOrthonormal.
RotationMatrix rotation_between(const Matrix& A1, const Matrix& A2);

/// mean diag(A1'ΣA2). Throws NotInFeasibleSet.
double cross_scheme_corr(const Matrix& A1, const Matrix& A2, const CovMatrix& sigma);

/// ρ̄_c for one ordering, from the diagonal of the permuted Cholesky factor of C.
double cholesky_avg_corr(const Matrix& C, const Ordering& ordering);

PermutationScan permutation_scan(const CovMatrix& sigma, std::uint64_t budget = kDefaultScanBudget,
                                 std::uint64_t seed = 0);

Diagnostics diagnostics(const CovMatrix& sigma, const Ordering& ordering);

/// d(C) = (1/n) Σ_{i≠j} C_ij².
double d_of(const Matrix& C);

/// Closed forms for the equicorrelation matrix. Throws RhoOutOfRange.
EquicorrValues equicorr_closed_forms(int n, double rho);

/// Equicorrelation matrix with off-diagonal rho.
Matrix equicorrelation(int n, double rho);

DownscaleDecomposition eigen_downscale_decomposition(const Matrix& A, const CovMatrix& sigma);

}  // namespace oasis
