#include "oasis/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace oasis {

ProxyInputs::ProxyInputs(CovMatrix sigma, Matrix c_eps_z, Weights weights)
    : sigma_(std::move(sigma)), c_eps_z_(std::move(c_eps_z)), weights_(std::move(weights)) {
  if (c_eps_z_.rows() != sigma_.dim() || c_eps_z_.cols() == 0 || c_eps_z_.cols() > sigma_.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "corr(ε, z) must be n×r with 1 ≤ r ≤ n");
  }
  if (weights_.size() != c_eps_z_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "one weight per instrument is required");
  }
  if (!c_eps_z_.allFinite() || c_eps_z_.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "cross-correlations must lie in [−1, 1]");
  }
}

ProxyInputs ProxyInputs::from_samples(const Matrix& eps, const Matrix& z, const Weights& weights) {
  if (eps.rows() != z.rows() || eps.rows() < 2) {
    throw Error(ErrorKind::DimensionMismatch, "ε and z must have the same number of (≥ 2) rows");
  }
  const double T = static_cast<double>(eps.rows());
  const Matrix ec = eps.rowwise() - eps.colwise().mean();
  const Matrix zc = z.rowwise() - z.colwise().mean();
  const Matrix S = ec.transpose() * ec / T;
  const Vector sd_e = S.diagonal().cwiseSqrt();
  const Vector sd_z = (zc.transpose() * zc / T).diagonal().cwiseSqrt();
  if ((sd_z.array() <= 0.0).any()) throw Error(ErrorKind::InvalidArgument, "an instrument has zero variance");
  Matrix cross = ec.transpose() * zc / T;
  cross = sd_e.cwiseInverse().asDiagonal() * cross * sd_z.cwiseInverse().asDiagonal();
  return ProxyInputs(CovMatrix(S), cross.cwiseMax(-1.0).cwiseMin(1.0), weights);
}

ProxyInputs ProxyInputs::from_samples(const Matrix& eps, const Matrix& z) {
  return from_samples(eps, z, Weights::equal(z.cols()));
}

double proxy_objective(const Matrix& a, const ProxyInputs& inputs) {
  const Matrix& S = inputs.sigma().values();
  if (a.rows() != inputs.n() || a.cols() != inputs.r()) {
    throw Error(ErrorKind::DimensionMismatch, "a must be n×r");
  }
  const Matrix gap = a.transpose() * S * a - Matrix::Identity(a.cols(), a.cols());
  if (!a.allFinite() || gap.norm() > kFeasibilityTol) {
    throw Error(ErrorKind::NotInFeasibleSet, "a'Σa deviates from I_r");
  }
  // corr(a'ε, z) Λ_w = a'Λσ C_εz Λ_w.
  const Vector sd = S.diagonal().cwiseSqrt();
  const Matrix m = a.transpose() * sd.asDiagonal() * inputs.c_eps_z() * inputs.weights().values().asDiagonal();
  return m.trace();
}

ProxyResult proxy_oasis(const ProxyInputs& inputs) {
  const CorrStructure cs = corr_from_cov(inputs.sigma());
  const Matrix c_inv_sqrt = sym_power(Eigensystem{cs.eigvalues, cs.eigvectors}, -0.5);
  const Matrix xi_mat = c_inv_sqrt * inputs.c_eps_z() * inputs.weights().values().asDiagonal();

  Eigen::JacobiSVD<Matrix> svd(xi_mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ProxyResult out;
  out.xi = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < out.U.rows(); ++i) {
      if (std::abs(out.U(i, k)) > best) {
        best = std::abs(out.U(i, k));
        arg = i;
      }
    }
    if (out.U(arg, k) < 0.0) {
      out.U.col(k) *= -1.0;
      out.V.col(k) *= -1.0;
    }
  }
  out.a_star = cs.sigma.cwiseInverse().asDiagonal() * c_inv_sqrt * out.U * out.V.transpose();
  out.objective = proxy_objective(out.a_star, inputs);

  const double xi_max = out.xi(0);
  const double xi_min = out.xi(out.xi.size() - 1);
  out.full_rank = xi_max > 0.0 && xi_min > kProxyRankTol * xi_max;
  if (!out.full_rank) {
    std::ostringstream msg;
    msg << "RankDeficientInstruments: smallest singular value " << xi_min
        << " is negligible; the maximizer is not unique";
    out.warnings.push_back(msg.str());
  }
  return out;
}

ProxyResult subset_oasis(const CovMatrix& sigma, const std::vector<int>& subset) {
  const Eigen::Index n = sigma.dim();
  if (subset.empty() || static_cast<Eigen::Index>(subset.size()) > n) {
    throw Error(ErrorKind::SingularSubset, "subset must select between 1 and n variables");
  }
  std::set<int> seen;
  for (int i : subset) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InvalidArgument, "subset index out of range");
    if (!seen.insert(i).second) throw Error(ErrorKind::SingularSubset, "subset repeats a variable");
  }
  const CorrStructure cs = corr_from_cov(sigma);
  const auto r = static_cast<Eigen::Index>(subset.size());
  Matrix c_sub(r, r);
  Matrix c_eps_z(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    c_eps_z.col(j) = cs.C.col(subset[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < r; ++i) c_sub(i, j) = cs.C(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]);
  }
  const Vector lambda = Eigen::SelfAdjointEigenSolver<Matrix>(c_sub, Eigen::EigenvaluesOnly).eigenvalues();
  if (lambda(0) <= pd_threshold(r, lambda(r - 1))) {
    throw Error(ErrorKind::SingularSubset, "covariance of the selected shocks is singular");
  }
  return proxy_oasis(ProxyInputs(sigma, std::move(c_eps_z), Weights::equal(r)));
}

}  // namespace oasis
