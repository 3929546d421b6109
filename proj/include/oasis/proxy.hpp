#pragma once

// Proxy-VAR identification: choose r uncorrelated unit-variance shocks
// u = a'ε that are maximally (weighted) correlated with r instruments z.
// The optimum comes from the thin SVD of Ξ = C_εε^{-1/2} C_εz Λ_w.

#include <string>
#include <vector>

#include "oasis/ident.hpp"

namespace oasis {

class ProxyInputs {
 public:
  /// c_eps_z is n×r with r ≤ n and entries in [−1, 1]; weights has r entries.
  ProxyInputs(CovMatrix sigma, Matrix c_eps_z, Weights weights);

  /// Builds Σ and corr(ε, z) from sample paths (rows are periods). Both series
  /// are demeaned and share the divisor T.
  static ProxyInputs from_samples(const Matrix& eps, const Matrix& z, const Weights& weights);
  static ProxyInputs from_samples(const Matrix& eps, const Matrix& z);

  const CovMatrix& sigma() const noexcept { return sigma_; }
  const Matrix& c_eps_z() const noexcept { return c_eps_z_; }
  const Weights& weights() const noexcept { return weights_; }
  Eigen::Index n() const noexcept { return sigma_.dim(); }
  Eigen::Index r() const noexcept { return c_eps_z_.cols(); }

 private:
  CovMatrix sigma_;
  Matrix c_eps_z_;
  Weights weights_;
};

struct ProxyResult {
  Matrix a_star;  // n×r
  Vector xi;      // singular values of Ξ, descending
  double objective = 0.0;
  /// ξ_r > 1e-10·ξ_1. When false the maximizer is not unique.
  bool full_rank = true;
  std::vector<std::string> warnings;
  Matrix U;  // n×r left singular vectors, sign-normalized
  Matrix V;  // r×r right singular vectors
};

inline constexpr double kProxyRankTol = 1e-10;

ProxyResult proxy_oasis(const ProxyInputs& inputs);

/// g(a) = Σ_j w_j corr(a_j'ε, z_j). Throws NotInFeasibleSet unless a'Σa = I_r.
double proxy_objective(const Matrix& a, const ProxyInputs& inputs);

/// Treats the reduced-form shocks of the chosen variables (0-based) as the
/// instruments. Throws SingularSubset.
ProxyResult subset_oasis(const CovMatrix& sigma, const std::vector<int>& subset);

}  // namespace oasis
