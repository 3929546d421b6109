#include "oasis/ident.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace oasis {

Weights::Weights(Vector w) : w_(std::move(w)) {
  if (w_.size() == 0) throw Error(ErrorKind::NonpositiveWeight, "weight vector is empty");
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_(i)) || w_(i) <= 0.0) {
      throw Error(ErrorKind::NonpositiveWeight, "weight " + std::to_string(i + 1) + " is not strictly positive");
    }
  }
}

Ordering::Ordering(std::vector<int> order) : order_(std::move(order)) {
  std::vector<bool> seen(order_.size(), false);
  for (int v : order_) {
    if (v < 0 || static_cast<std::size_t>(v) >= order_.size() || seen[static_cast<std::size_t>(v)]) {
      throw Error(ErrorKind::InvalidPermutation, "ordering is not a permutation of the variables");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  if (order_.empty()) throw Error(ErrorKind::InvalidPermutation, "ordering is empty");
}

Ordering Ordering::identity(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return Ordering(std::move(v));
}

Ordering Ordering::reversed() const { return Ordering(std::vector<int>(order_.rbegin(), order_.rend())); }

std::string Ordering::to_string() const {
  std::ostringstream out;
  for (std::size_t k = 0; k < order_.size(); ++k) out << (k ? " " : "") << order_[k] + 1;
  return out.str();
}

std::string Scheme::label() const {
  switch (kind) {
    case SchemeKind::Oasis: return "oasis";
    case SchemeKind::WeightedOasis: {
      std::ostringstream out;
      out << "weighted_oasis(";
      if (weights) {
        for (Eigen::Index i = 0; i < weights->size(); ++i) out << (i ? "," : "") << (*weights)(i);
      }
      out << ")";
      return out.str();
    }
    case SchemeKind::Cholesky: return "cholesky(" + (ordering ? ordering->to_string() : std::string()) + ")";
    case SchemeKind::SequentialMaxCorr: return "sequential_max_corr";
    case SchemeKind::External: return "external";
  }
  return "unknown";
}

namespace {

void require_dim(const CovMatrix& sigma, Eigen::Index n, const char* what) {
  if (sigma.dim() != n) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " does not match Σ");
}

void require_feasible(const Matrix& A, const CovMatrix& sigma) {
  if (A.rows() != sigma.dim() || A.cols() != sigma.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "A does not match Σ");
  }
  if (!A.allFinite() || feasibility_gap(A, sigma.values()) > kFeasibilityTol) {
    throw Error(ErrorKind::NotInFeasibleSet, "A'ΣA deviates from the identity");
  }
}

IdentificationResult finish(Scheme scheme, Matrix A, Matrix B, Vector per_shock, const Vector& w) {
  // Rounding can push a correlation an ulp past ±1.
  per_shock = per_shock.cwiseMax(-1.0).cwiseMin(1.0);
  IdentificationResult r{std::move(scheme), std::move(A), std::move(B), per_shock, per_shock.mean(), w.dot(per_shock)};
  return r;
}

Matrix permute_sym(const Matrix& S, const std::vector<int>& order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  Matrix out(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) out(k, l) = S(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(l)]);
  }
  return out;
}

/// Inverse of the relabelling: out(ord[k], ord[l]) = M(k, l).
Matrix unpermute(const Matrix& M, const std::vector<int>& order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  Matrix out(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) out(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(l)]) = M(k, l);
  }
  return out;
}

}  // namespace

IdentificationResult oasis(const CovMatrix& sigma) {
  const CorrStructure cs = corr_from_cov(sigma);
  const Eigensystem es{cs.eigvalues, cs.eigvectors};
  const Matrix c_inv_sqrt = sym_power(es, -0.5);
  const Matrix c_sqrt = sym_power(es, 0.5);
  Matrix A = cs.sigma.cwiseInverse().asDiagonal() * c_inv_sqrt;
  Matrix B = cs.sigma.asDiagonal() * c_sqrt;
  // diag(A'Λσ C) = diag(C^{1/2}).
  return finish(Scheme{SchemeKind::Oasis, std::nullopt, std::nullopt}, std::move(A), std::move(B),
                c_sqrt.diagonal(), Vector::Ones(sigma.dim()));
}

IdentificationResult weighted_oasis(const CovMatrix& sigma, const Weights& w) {
  require_dim(sigma, w.size(), "weight vector");
  const CorrStructure cs = corr_from_cov(sigma);
  const Vector& wv = w.values();
  const Matrix K = wv.asDiagonal() * cs.C * wv.asDiagonal();
  const Eigensystem es = sym_eigen(K);
  const Matrix k_inv_sqrt = sym_power(es, -0.5);
  const Matrix k_sqrt = sym_power(es, 0.5);
  Matrix A = wv.cwiseQuotient(cs.sigma).asDiagonal() * k_inv_sqrt;
  Matrix B = cs.sigma.cwiseQuotient(wv).asDiagonal() * k_sqrt;
  // corr(u, ε) = A'Λσ C = K^{-1/2} Λw C.
  const Vector per_shock = (k_inv_sqrt * wv.asDiagonal() * cs.C).diagonal();
  return finish(Scheme{SchemeKind::WeightedOasis, wv, std::nullopt}, std::move(A), std::move(B), per_shock, wv);
}

IdentificationResult cholesky_id(const CovMatrix& sigma, const Ordering& ordering) {
  const Eigen::Index n = sigma.dim();
  if (ordering.size() != n) throw Error(ErrorKind::InvalidPermutation, "ordering length does not match Σ");
  const auto& ord = ordering.indices();
  const CovMatrix permuted(permute_sym(sigma.values(), ord));
  const Matrix L = cholesky_lower(permuted);
  const Matrix L_inv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));

  Matrix A = unpermute(L_inv.transpose(), ord);
  Matrix B = unpermute(L, ord);
  // corr(u_k, ε_k) = L_kk / σ_k under the permuted labels.
  Vector per_shock(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int v = ord[static_cast<std::size_t>(k)];
    per_shock(v) = L(k, k) / std::sqrt(sigma.values()(v, v));
  }
  return finish(Scheme{SchemeKind::Cholesky, std::nullopt, ordering}, std::move(A), std::move(B), per_shock,
                Vector::Ones(n));
}

IdentificationResult cholesky_upper_id(const CovMatrix& sigma, const Ordering& ordering) {
  return cholesky_id(sigma, ordering.reversed());
}

IdentificationResult sequential_max_corr(const CovMatrix& sigma) {
  const Matrix& S = sigma.values();
  const Eigen::Index n = sigma.dim();
  Matrix A(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Maximize a'Σe_j over Σ-unit a that are Σ-orthogonal to a_1..a_{j-1}:
    // the Σ-projection of e_j onto the complement, normalized.
    Vector a = Vector::Unit(n, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) a -= (A.col(i).dot(S * a)) * A.col(i);
    }
    a /= std::sqrt(a.dot(S * a));
    A.col(j) = a;
  }
  const Vector sd = S.diagonal().cwiseSqrt();
  const Vector per_shock = (A.transpose() * S).diagonal().cwiseQuotient(sd);
  Matrix B = A.transpose().inverse();
  return finish(Scheme{SchemeKind::SequentialMaxCorr, std::nullopt, std::nullopt}, std::move(A), std::move(B),
                per_shock, Vector::Ones(n));
}

IdentificationResult from_matrix(const Matrix& A, const CovMatrix& sigma) {
  require_feasible(A, sigma);
  const CorrelationSummary s = avg_corr(A, sigma);
  return finish(Scheme{SchemeKind::External, std::nullopt, std::nullopt}, A, A.transpose().inverse(), s.per_shock,
                Vector::Ones(sigma.dim()));
}

CorrelationSummary avg_corr(const Matrix& A, const CovMatrix& sigma, const Weights& w) {
  require_feasible(A, sigma);
  require_dim(sigma, w.size(), "weight vector");
  const Matrix& S = sigma.values();
  const Vector per_shock = (A.transpose() * S).diagonal().cwiseQuotient(S.diagonal().cwiseSqrt());
  return CorrelationSummary{per_shock, w.values().dot(per_shock), per_shock.mean()};
}

CorrelationSummary avg_corr(const Matrix& A, const CovMatrix& sigma) {
  return avg_corr(A, sigma, Weights::equal(sigma.dim()));
}

RotationMatrix rotation_between(const Matrix& A1, const Matrix& A2) {
  if (A1.rows() != A1.cols() || A1.rows() != A2.rows() || A2.rows() != A2.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "rotation inputs must be square and of equal size");
  }
  const Eigen::FullPivLU<Matrix> lu(A1);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularMatrix, "A1 is singular");
  // Both inputs may each be off by the feasibility tolerance.
  return RotationMatrix::from(lu.solve(A2), 10.0 * kFeasibilityTol);
}

double cross_scheme_corr(const Matrix& A1, const Matrix& A2, const CovMatrix& sigma) {
  require_feasible(A1, sigma);
  require_feasible(A2, sigma);
  return (A1.transpose() * sigma.values() * A2).diagonal().mean();
}

namespace {

/// Right-looking Cholesky of C along an ordering, returning Σ_k L_kk. The
/// exhaustive scan performs the identical arithmetic so values agree bit for bit.
struct SchurWorkspace {
  explicit SchurWorkspace(int n) : n(n), levels(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(n * n))) {}
  int n;
  std::vector<std::vector<double>> levels;  // levels[d] is an m×m block, m = n − d
};

// Eliminates local index `v` from the m×m block `src`, writing the (m−1)×(m−1)
// complement to `dst`. Returns the pivot variance.
double eliminate(const double* src, int m, int v, double* dst) {
  const double pivot = src[v * m + v];
  int r = 0;
  for (int a = 0; a < m; ++a) {
    if (a == v) continue;
    const double fa = src[a * m + v] / pivot;
    int c = 0;
    for (int b = 0; b < m; ++b) {
      if (b == v) continue;
      dst[r * (m - 1) + c] = src[a * m + b] - fa * src[v * m + b];
      ++c;
    }
    ++r;
  }
  return pivot;
}

double path_sum(const Matrix& C, const std::vector<int>& order, SchurWorkspace& ws) {
  const int n = ws.n;
  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) ws.levels[0][static_cast<std::size_t>(a * n + b)] = C(a, b);
  double sum = 0.0;
  for (int d = 0; d < n; ++d) {
    const int m = n - d;
    const auto it = std::find(remaining.begin(), remaining.end(), order[static_cast<std::size_t>(d)]);
    const int v = static_cast<int>(it - remaining.begin());
    sum += std::sqrt(eliminate(ws.levels[static_cast<std::size_t>(d)].data(), m, v, ws.levels[static_cast<std::size_t>(d + 1)].data()));
    remaining.erase(it);
  }
  return sum;
}

struct Extremes {
  double min_sum = std::numeric_limits<double>::infinity();
  double max_sum = -std::numeric_limits<double>::infinity();
  std::vector<int> argmin;
  std::vector<int> argmax;
  std::uint64_t evaluated = 0;

  // Ties keep the lexicographically smaller ordering.
  void offer(double s, const std::vector<int>& order) {
    ++evaluated;
    if (s < min_sum || (s == min_sum && order < argmin)) {
      min_sum = s;
      argmin = order;
    }
    if (s > max_sum || (s == max_sum && order < argmax)) {
      max_sum = s;
      argmax = order;
    }
  }

  void merge(const Extremes& o) {
    if (o.evaluated == 0) return;
    const std::uint64_t total = evaluated + o.evaluated;
    offer(o.min_sum, o.argmin);
    offer(o.max_sum, o.argmax);
    evaluated = total;
  }
};

void dfs(SchurWorkspace& ws, std::vector<int>& remaining, std::vector<int>& prefix, double sum, Extremes& ex) {
  const int d = static_cast<int>(prefix.size());
  const int m = ws.n - d;
  if (m == 0) {
    ex.offer(sum, prefix);
    return;
  }
  const double* src = ws.levels[static_cast<std::size_t>(d)].data();
  double* dst = ws.levels[static_cast<std::size_t>(d + 1)].data();
  for (int v = 0; v < m; ++v) {
    const double lkk = std::sqrt(eliminate(src, m, v, dst));
    const int var = remaining[static_cast<std::size_t>(v)];
    remaining.erase(remaining.begin() + v);
    prefix.push_back(var);
    dfs(ws, remaining, prefix, sum + lkk, ex);
    prefix.pop_back();
    remaining.insert(remaining.begin() + v, var);
  }
}

Extremes exhaustive_subtree(const Matrix& C, int first) {
  const int n = static_cast<int>(C.rows());
  SchurWorkspace ws(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) ws.levels[0][static_cast<std::size_t>(a * n + b)] = C(a, b);
  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  const double l11 = std::sqrt(eliminate(ws.levels[0].data(), n, first, ws.levels[1].data()));
  remaining.erase(remaining.begin() + first);
  std::vector<int> prefix{first};
  Extremes ex;
  dfs(ws, remaining, prefix, 0.0 + l11, ex);
  return ex;
}

std::vector<int> greedy_order(const Matrix& C, bool pick_max) {
  const int n = static_cast<int>(C.rows());
  SchurWorkspace ws(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) ws.levels[0][static_cast<std::size_t>(a * n + b)] = C(a, b);
  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> order;
  for (int d = 0; d < n; ++d) {
    const int m = n - d;
    const double* src = ws.levels[static_cast<std::size_t>(d)].data();
    int best = 0;
    for (int v = 1; v < m; ++v) {
      const double val = src[v * m + v];
      const double cur = src[best * m + best];
      if (pick_max ? val > cur : val < cur) best = v;
    }
    eliminate(src, m, best, ws.levels[static_cast<std::size_t>(d + 1)].data());
    order.push_back(remaining[static_cast<std::size_t>(best)]);
    remaining.erase(remaining.begin() + best);
  }
  return order;
}

// Unbiased draw from [0, bound) by rejection; avoids relying on the standard
// library's distribution algorithms so sequences are portable.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

constexpr std::uint64_t kScanChunk = 1 << 16;

Extremes sampled_chunk(const Matrix& C, std::uint64_t seed, std::uint64_t chunk, std::uint64_t count) {
  const int n = static_cast<int>(C.rows());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  std::mt19937_64 rng(seq);
  SchurWorkspace ws(n);
  Extremes ex;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (std::uint64_t s = 0; s < count; ++s) {
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)], order[bounded(rng, static_cast<std::uint64_t>(i) + 1)]);
    }
    ex.offer(path_sum(C, order, ws), order);
  }
  return ex;
}

/// n! if it does not exceed `cap`, otherwise nullopt.
std::optional<std::uint64_t> factorial_upto(int n, std::uint64_t cap) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) {
    if (f > cap / static_cast<std::uint64_t>(k)) return std::nullopt;
    f *= static_cast<std::uint64_t>(k);
  }
  if (f > cap) return std::nullopt;
  return f;
}

template <class Task>
std::vector<Extremes> run_tasks(std::size_t count, Task task) {
  std::vector<Extremes> out(count);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = task(i);
    return out;
  }
  for (std::size_t start = 0; start < count; start += workers) {
    std::vector<std::future<Extremes>> batch;
    for (std::size_t i = start; i < std::min(count, start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, task, i));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
  }
  return out;
}

}  // namespace

double cholesky_avg_corr(const Matrix& C, const Ordering& ordering) {
  if (C.rows() != ordering.size() || C.cols() != C.rows()) {
    throw Error(ErrorKind::InvalidPermutation, "ordering length does not match C");
  }
  SchurWorkspace ws(ordering.size());
  return path_sum(C, ordering.indices(), ws) / static_cast<double>(ordering.size());
}

PermutationScan permutation_scan(const CovMatrix& sigma, std::uint64_t budget, std::uint64_t seed) {
  const CorrStructure cs = corr_from_cov(sigma);
  const int n = static_cast<int>(sigma.dim());
  Extremes total;
  bool exhaustive = false;
  if (factorial_upto(n, budget)) {
    exhaustive = true;
    // Subtrees by first variable, merged in index order, keep the
    // lexicographic tie rule independent of the worker count.
    for (const Extremes& part : run_tasks(static_cast<std::size_t>(n), [&](std::size_t first) {
           return exhaustive_subtree(cs.C, static_cast<int>(first));
         })) {
      total.merge(part);
    }
  } else {
    const std::uint64_t chunks = (budget + kScanChunk - 1) / kScanChunk;
    for (const Extremes& part : run_tasks(static_cast<std::size_t>(chunks), [&](std::size_t c) {
           const std::uint64_t count = std::min<std::uint64_t>(kScanChunk, budget - c * kScanChunk);
           return sampled_chunk(cs.C, seed, c, count);
         })) {
      total.merge(part);
    }
    SchurWorkspace ws(n);
    for (const std::vector<int>& order :
         {Ordering::identity(n).indices(), greedy_order(cs.C, true), greedy_order(cs.C, false)}) {
      total.offer(path_sum(cs.C, order, ws), order);
    }
  }
  const double dn = static_cast<double>(n);
  return PermutationScan{total.min_sum / dn, total.max_sum / dn, Ordering(total.argmin), Ordering(total.argmax),
                         exhaustive, total.evaluated};
}

double d_of(const Matrix& C) {
  const Eigen::Index n = C.rows();
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) s += C(i, j) * C(i, j);
  return s / static_cast<double>(n);
}

Diagnostics diagnostics(const CovMatrix& sigma, const Ordering& ordering) {
  const CorrStructure cs = corr_from_cov(sigma);
  const Eigen::Index n = sigma.dim();
  const double dn = static_cast<double>(n);
  Diagnostics out;
  out.d_C = d_of(cs.C);
  double abs_sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) abs_sum += std::abs(cs.C(i, j));
  out.abs_corr_mean = n > 1 ? abs_sum / (dn * (dn - 1.0)) : 0.0;

  out.rho_star = oasis(sigma).avg_corr;
  out.rho_chol = cholesky_id(sigma, ordering).avg_corr;

  // 1 − √λ = (1 − λ)/(1 + √λ) and 1 − L_kk = (Σ_{j<k} L_kj²)/(1 + L_kk).
  double gs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = cs.eigvalues(i);
    gs += (1.0 - l) / (1.0 + std::sqrt(l));
  }
  out.gap_star = std::max(0.0, gs / dn);
  const Matrix Lc = cholesky_lower(CovMatrix(permute_sym(cs.C, ordering.indices())));
  double gc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    gc += Lc.row(k).head(k).squaredNorm() / (1.0 + Lc(k, k));
  }
  out.gap_chol = gc / dn;

  if (out.d_C > 0.0 && out.gap_star > 0.0) out.proximity_ratio = out.gap_chol / out.gap_star;
  out.approx_star = 1.0 - out.d_C / 8.0;
  out.approx_chol = 1.0 - out.d_C / 4.0;
  return out;
}

EquicorrValues equicorr_closed_forms(int n, double rho) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
  const double lower = n > 1 ? -1.0 / static_cast<double>(n - 1) : -1.0;
  if (!(rho > lower && rho < 1.0)) {
    throw Error(ErrorKind::RhoOutOfRange, "equicorrelation parameter outside (−1/(n−1), 1)");
  }
  const double dn = static_cast<double>(n);
  EquicorrValues v;
  v.rho_star = std::sqrt(1.0 + (dn - 1.0) * rho) / dn + std::sqrt(1.0 - rho) * (1.0 - 1.0 / dn);
  double s = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double dk = static_cast<double>(k);
    s += std::sqrt(1.0 - (dk - 1.0) * rho * rho / ((dk - 2.0) * rho + 1.0));
  }
  v.rho_chol = s / dn;
  return v;
}

Matrix equicorrelation(int n, double rho) {
  Matrix C = Matrix::Constant(n, n, rho);
  C.diagonal().setOnes();
  return C;
}

DownscaleDecomposition eigen_downscale_decomposition(const Matrix& A, const CovMatrix& sigma) {
  require_feasible(A, sigma);
  const CorrStructure cs = corr_from_cov(sigma);
  const IdentificationResult star = oasis(sigma);
  const Matrix R = rotation_between(star.A, A).values();
  DownscaleDecomposition out;
  out.M = cs.eigvectors.transpose() * R.transpose() * cs.eigvectors;
  out.sqrt_lambda = cs.eigvalues.cwiseSqrt();
  out.reconstruction = out.M.diagonal().dot(out.sqrt_lambda);
  return out;
}

}  // namespace oasis
