#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "oasis/ident.hpp"
#include "support/random_matrices.hpp"

using namespace oasis;
using namespace oasis::testing;

namespace {

// corr(u_i, ε_i) computed straight from the definition u = A'ε.
Vector corr_by_definition(const Matrix& A, const Matrix& S) {
  const Matrix cov_u_eps = A.transpose() * S;
  Vector out(S.rows());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    out(i) = cov_u_eps(i, i) / std::sqrt((A.col(i).transpose() * S * A.col(i))(0, 0) * S(i, i));
  }
  return out;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

Matrix planar(Eigen::Index n, Eigen::Index i, Eigen::Index j, double theta) {
  Matrix R = Matrix::Identity(n, n);
  R(i, i) = R(j, j) = std::cos(theta);
  R(i, j) = -std::sin(theta);
  R(j, i) = std::sin(theta);
  return R;
}

Matrix perm_matrix(const std::vector<int>& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Matrix P = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) P(p[static_cast<std::size_t>(k)], k) = 1.0;
  return P;
}

const double kRhoStarHalf = (std::sqrt(1.5) + std::sqrt(0.5)) / 2.0;
const double kRhoCholHalf = (1.0 + std::sqrt(0.75)) / 2.0;

}  // namespace

TEST_CASE("oasis examples") {
  const IdentificationResult id = oasis::oasis(CovMatrix(Matrix::Identity(3, 3)));
  CHECK(id.A.isApprox(Matrix::Identity(3, 3)));
  CHECK(id.avg_corr == doctest::Approx(1.0).epsilon(1e-15));

  const Matrix C = equicorrelation(2, 0.5);
  const IdentificationResult star = oasis::oasis(CovMatrix(C));
  CHECK(star.avg_corr == doctest::Approx(kRhoStarHalf).epsilon(1e-14));
  CHECK(star.avg_corr == doctest::Approx(0.96593).epsilon(1e-5));

  const Matrix D = Eigen::Vector2d(4, 9).asDiagonal();
  const IdentificationResult scaled = oasis::oasis(CovMatrix(D * C * D));
  CHECK(scaled.avg_corr == doctest::Approx(star.avg_corr).epsilon(1e-14));
  CHECK((scaled.A - D.inverse() * star.A).norm() < 1e-12);
  CHECK((scaled.B * scaled.A.transpose() - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("weighted_oasis examples") {
  Rng rng(21);
  const Matrix S = random_cov(rng, 5, 5);
  const CovMatrix cov(S);
  CHECK((weighted_oasis(cov, Weights::equal(5)).A - oasis::oasis(cov).A).norm() < 1e-12);

  const IdentificationResult w = weighted_oasis(CovMatrix(Matrix::Identity(2, 2)), Weights(Eigen::Vector2d(2, 1)));
  CHECK((w.A - Matrix::Identity(2, 2)).norm() < 1e-15);
  CHECK(w.objective == doctest::Approx(3.0).epsilon(1e-15));

  for (int rep = 0; rep < 50; ++rep) {
    const CovMatrix s4(wishart_cov(rng, 4, 6));
    const IdentificationResult eq = oasis::oasis(s4);
    const IdentificationResult heavy = weighted_oasis(s4, Weights(Eigen::Vector4d(4, 1, 1, 1)));
    CHECK(heavy.per_shock_corr(0) >= eq.per_shock_corr(0) - 1e-12);
    CHECK((heavy.per_shock_corr - corr_by_definition(heavy.A, s4.values())).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(feasibility_gap(heavy.A, s4.values()) < 1e-10);
  }
}

TEST_CASE("property: weighted optimum dominates rotations") {
  Rng rng(22);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix S = random_cov(rng, 2, 8);
    const auto n = S.rows();
    Vector wv(n);
    for (Eigen::Index i = 0; i < n; ++i) wv(i) = uniform(rng, 0.1, 5.0);
    const Weights w(wv);
    const CovMatrix cov(S);
    const IdentificationResult best = weighted_oasis(cov, w);
    for (int k = 0; k < 20; ++k) {
      const Matrix A = best.A * haar_rotation(rng, n);
      CHECK(wv.dot(corr_by_definition(A, S)) <= best.objective + 1e-10);
    }
  }
}

TEST_CASE("cholesky_id examples") {
  const IdentificationResult id = cholesky_id(CovMatrix(Matrix::Identity(3, 3)), Ordering({2, 0, 1}));
  CHECK(id.A.isApprox(Matrix::Identity(3, 3)));
  CHECK(id.avg_corr == 1.0);

  const IdentificationResult c = cholesky_id(CovMatrix(equicorrelation(2, 0.5)), Ordering::identity(2));
  CHECK(c.avg_corr == doctest::Approx(kRhoCholHalf).epsilon(1e-14));
  CHECK(c.avg_corr == doctest::Approx(0.93301).epsilon(1e-5));

  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const CovMatrix cov(random_cov(rng, 2, 7));
    const int n = static_cast<int>(cov.dim());
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    const Ordering ord(p);
    const IdentificationResult upper = cholesky_upper_id(cov, ord);
    const IdentificationResult rev = cholesky_id(cov, ord.reversed());
    CHECK((upper.A - rev.A).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, rev.A.cwiseAbs().maxCoeff()));

    // Oracle: factor P'ΣP with Eigen's LLT directly and map back.
    const Matrix P = perm_matrix(p);
    const Matrix L = (P.transpose() * cov.values() * P).llt().matrixL();
    const Matrix A_oracle = P * L.inverse().transpose() * P.transpose();
    const IdentificationResult chol = cholesky_id(cov, ord);
    CHECK((chol.A - A_oracle).norm() <= 1e-9 * A_oracle.norm());
    CHECK((chol.per_shock_corr - corr_by_definition(chol.A, cov.values())).cwiseAbs().maxCoeff() < 1e-10);
    // recursive structure: in the permuted labels B is lower triangular
    const Matrix Bp = P.transpose() * chol.B * P;
    CHECK((Bp - Matrix(Bp.triangularView<Eigen::Lower>())).norm() == 0.0);
  }
}

TEST_CASE("sequential_max_corr matches the Cholesky scheme") {
  CHECK(sequential_max_corr(CovMatrix(Matrix::Identity(4, 4))).A.isApprox(Matrix::Identity(4, 4)));
  const CovMatrix half(equicorrelation(2, 0.5));
  const IdentificationResult s = sequential_max_corr(half);
  CHECK((s.A - cholesky_id(half, Ordering::identity(2)).A).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.A(1, 0) == 0.0);

  Rng rng(24);
  for (int rep = 0; rep < 100; ++rep) {
    const CovMatrix cov(wishart_cov(rng, 6, uniform_int(rng, 7, 40)));
    const Matrix diff = sequential_max_corr(cov).A - cholesky_id(cov, Ordering::identity(6)).A;
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("avg_corr") {
  Rng rng(25);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix S = random_cov(rng, 2, 9);
    const CovMatrix cov(S);
    const IdentificationResult star = oasis::oasis(cov);
    const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<Matrix>(corr_from_cov(cov).C).eigenvalues();
    const double closed = lambda.cwiseMax(0.0).cwiseSqrt().mean();
    CHECK(avg_corr(star.A, cov).average == doctest::Approx(closed).epsilon(1e-12));
    for (int k = 0; k < 10; ++k) {
      const Matrix A = star.A * haar_rotation(rng, S.rows());
      CHECK(feasibility_gap(A, S) < 1e-9);
      CHECK(avg_corr(A, cov).average <= star.avg_corr + 1e-10);
    }
  }
  const CorrelationSummary unit = avg_corr(Matrix::Identity(3, 3), CovMatrix(Matrix::Identity(3, 3)));
  CHECK(unit.per_shock.isApprox(Vector::Ones(3)));
  CHECK(unit.weighted_sum == 3.0);

  CHECK(kind_of([] { avg_corr(2.0 * Matrix::Identity(2, 2), CovMatrix(Matrix::Identity(2, 2))); }) ==
        ErrorKind::NotInFeasibleSet);
  CHECK(kind_of([] { from_matrix(Matrix::Ones(2, 2), CovMatrix(Matrix::Identity(2, 2))); }) ==
        ErrorKind::NotInFeasibleSet);
}

TEST_CASE("property: oasis is order- and scale-invariant") {
  Rng rng(26);
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix S = random_cov(rng, 2, 10);
    const auto n = S.rows();
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    const Matrix P = perm_matrix(p);
    const IdentificationResult base = oasis::oasis(CovMatrix(S));
    const IdentificationResult perm = oasis::oasis(CovMatrix(P.transpose() * S * P));
    const double scale = base.A.cwiseAbs().maxCoeff();
    CHECK((perm.A - P.transpose() * base.A * P).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, scale));
    CHECK(perm.avg_corr == doctest::Approx(base.avg_corr).epsilon(1e-12));

    const Vector d = random_scales(rng, n);
    const IdentificationResult sc = oasis::oasis(CovMatrix(d.asDiagonal() * S * d.asDiagonal()));
    const Matrix expect = d.cwiseInverse().asDiagonal() * base.A;
    CHECK((sc.A - expect).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
    CHECK(sc.avg_corr == doctest::Approx(base.avg_corr).epsilon(1e-12));
  }
}

TEST_CASE("rotation_between and cross_scheme_corr") {
  Rng rng(27);
  const CovMatrix cov(wishart_cov(rng, 4, 8));
  const Matrix A = oasis::oasis(cov).A;
  CHECK((rotation_between(A, A).values() - Matrix::Identity(4, 4)).norm() < 1e-12);
  const Matrix Rp = planar(4, 0, 1, 0.3);
  CHECK((rotation_between(A, A * Rp).values() - Rp).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(cross_scheme_corr(A, A, cov) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cross_scheme_corr(A, A * Rp, cov) == doctest::Approx((4.0 - 2.0 + 2.0 * std::cos(0.3)) / 4.0).epsilon(1e-12));

  const CovMatrix id(Matrix::Identity(5, 5));
  CHECK(cross_scheme_corr(Matrix::Identity(5, 5), perm_matrix({1, 0, 2, 3, 4}), id) == doctest::Approx(3.0 / 5.0));

  // u2 = R'u1 for the Cholesky scheme relative to OASIS
  const IdentificationResult chol = cholesky_id(cov, Ordering({3, 1, 0, 2}));
  const RotationMatrix R = rotation_between(A, chol.A);
  CHECK((A * R.values() - chol.A).norm() < 1e-10 * chol.A.norm());

  CHECK(kind_of([] { rotation_between(Matrix::Zero(2, 2), Matrix::Identity(2, 2)); }) == ErrorKind::SingularMatrix);
  CHECK(kind_of([] { rotation_between(Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)); }) ==
        ErrorKind::NotOrthonormal);
}

TEST_CASE("permutation_scan") {
  const PermutationScan id = permutation_scan(CovMatrix(Matrix::Identity(4, 4)));
  CHECK(id.min_rho == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(id.max_rho == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(id.exhaustive);
  CHECK(id.evaluated == 24);
  CHECK(id.argmin == Ordering::identity(4));

  const PermutationScan eq = permutation_scan(CovMatrix(equicorrelation(3, 0.5)));
  const double chol3 = equicorr_closed_forms(3, 0.5).rho_chol;
  CHECK(eq.min_rho == doctest::Approx(chol3).epsilon(1e-12));
  CHECK(eq.max_rho == doctest::Approx(chol3).epsilon(1e-12));

  Rng rng(28);
  for (int rep = 0; rep < 10; ++rep) {
    const CovMatrix cov(wishart_cov(rng, 5, uniform_int(rng, 6, 30)));
    const PermutationScan sc = permutation_scan(cov);
    CHECK(sc.exhaustive);
    CHECK(sc.evaluated == 120);
    // brute force over every ordering with the general-purpose routine
    std::vector<int> p{0, 1, 2, 3, 4};
    double lo = 2.0, hi = -1.0;
    do {
      const double v = cholesky_id(cov, Ordering(p)).avg_corr;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK(sc.min_rho == doctest::Approx(lo).epsilon(1e-12));
    CHECK(sc.max_rho == doctest::Approx(hi).epsilon(1e-12));
    const double ident = cholesky_id(cov, Ordering::identity(5)).avg_corr;
    CHECK(sc.min_rho <= ident + 1e-15);
    CHECK(ident <= sc.max_rho + 1e-15);
    CHECK(cholesky_id(cov, sc.argmin).avg_corr == doctest::Approx(sc.min_rho).epsilon(1e-12));
    CHECK(cholesky_id(cov, sc.argmax).avg_corr == doctest::Approx(sc.max_rho).epsilon(1e-12));
    CHECK(cholesky_avg_corr(corr_from_cov(cov).C, sc.argmin) == sc.min_rho);
  }
}

TEST_CASE("permutation_scan sampling") {
  Rng rng(29);
  const CovMatrix cov(wishart_cov(rng, 9, 30));
  const PermutationScan a = permutation_scan(cov, 5000, 7);
  const PermutationScan b = permutation_scan(cov, 5000, 7);
  CHECK_FALSE(a.exhaustive);
  CHECK(a.evaluated == 5003);
  CHECK(a.min_rho == b.min_rho);
  CHECK(a.max_rho == b.max_rho);
  CHECK(a.argmin == b.argmin);
  CHECK(a.argmax == b.argmax);
  const double ident = cholesky_id(cov, Ordering::identity(9)).avg_corr;
  CHECK(a.min_rho <= ident + 1e-15);
  CHECK(ident <= a.max_rho + 1e-15);
  // larger budgets can only widen the range; chunk 0 is shared
  const PermutationScan wide = permutation_scan(cov, 200000, 7);
  CHECK(wide.min_rho <= a.min_rho);
  CHECK(wide.max_rho >= a.max_rho);
  CHECK(wide.evaluated == 200003);
}

TEST_CASE("diagnostics examples") {
  const Diagnostics id = diagnostics(CovMatrix(Matrix::Identity(3, 3)), Ordering::identity(3));
  CHECK(id.d_C == 0.0);
  CHECK(id.abs_corr_mean == 0.0);
  CHECK(id.rho_star == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(id.rho_chol == 1.0);
  CHECK_FALSE(id.proximity_ratio.has_value());

  const Diagnostics h = diagnostics(CovMatrix(equicorrelation(2, 0.5)), Ordering::identity(2));
  CHECK(h.d_C == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(h.abs_corr_mean == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(h.proximity_ratio.has_value());
  const double ratio = (1.0 - kRhoCholHalf) / (1.0 - kRhoStarHalf);
  CHECK(*h.proximity_ratio == doctest::Approx(ratio).epsilon(1e-12));
  CHECK(*h.proximity_ratio == doctest::Approx(1.966).epsilon(1e-3));
  CHECK(h.approx_star == 0.96875);
  CHECK(h.approx_chol == 0.9375);
  CHECK(h.gap_star == doctest::Approx(1.0 - kRhoStarHalf).epsilon(1e-13));
  CHECK(h.gap_chol == doctest::Approx(1.0 - kRhoCholHalf).epsilon(1e-13));
}

TEST_CASE("property: proximity ratio near two") {
  Rng rng(30);
  int inside = 0, total = 0;
  while (total < 300) {
    const int n = uniform_int(rng, 2, 10);
    const Matrix S = wishart_cov(rng, n, n + uniform_int(rng, 1, 20 * n));
    const double d = d_of_corr(S);
    if (d < 0.01 || d > 0.7) continue;
    ++total;
    const Diagnostics dg = diagnostics(CovMatrix(S), Ordering::identity(n));
    REQUIRE(dg.proximity_ratio.has_value());
    if (*dg.proximity_ratio >= 1.8 && *dg.proximity_ratio <= 2.25) ++inside;
    CHECK(dg.d_C == doctest::Approx(d).epsilon(1e-12));
    CHECK(dg.gap_star == doctest::Approx(1.0 - dg.rho_star).epsilon(1e-9));
  }
  CHECK(inside >= 285);
}

TEST_CASE("equicorr_closed_forms") {
  const EquicorrValues zero = equicorr_closed_forms(6, 0.0);
  CHECK(zero.rho_star == 1.0);
  CHECK(zero.rho_chol == 1.0);
  const EquicorrValues two = equicorr_closed_forms(2, 0.5);
  CHECK(two.rho_star == doctest::Approx(kRhoStarHalf).epsilon(1e-15));
  CHECK(two.rho_chol == doctest::Approx(kRhoCholHalf).epsilon(1e-15));
  const CovMatrix c(equicorrelation(5, 0.3));
  const EquicorrValues five = equicorr_closed_forms(5, 0.3);
  CHECK(std::abs(oasis::oasis(c).avg_corr - five.rho_star) < 1e-10);
  CHECK(std::abs(cholesky_id(c, Ordering::identity(5)).avg_corr - five.rho_chol) < 1e-10);

  CHECK(kind_of([] { equicorr_closed_forms(3, 1.0); }) == ErrorKind::RhoOutOfRange);
  CHECK(kind_of([] { equicorr_closed_forms(3, -0.5); }) == ErrorKind::RhoOutOfRange);
  CHECK(kind_of([] { equicorr_closed_forms(0, 0.1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("eigen_downscale_decomposition") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const CovMatrix cov(random_cov(rng, 2, 8));
    const auto n = cov.dim();
    const DownscaleDecomposition star = eigen_downscale_decomposition(oasis::oasis(cov).A, cov);
    CHECK((star.M - Matrix::Identity(n, n)).norm() < 1e-9);
    CHECK(star.reconstruction == doctest::Approx(star.sqrt_lambda.sum()).epsilon(1e-12));

    const IdentificationResult chol = cholesky_id(cov, Ordering::identity(static_cast<int>(n)));
    const DownscaleDecomposition dc = eigen_downscale_decomposition(chol.A, cov);
    CHECK(std::abs(dc.M.diagonal().dot(dc.sqrt_lambda) - static_cast<double>(n) * chol.avg_corr) < 1e-9);
    CHECK(std::abs(dc.reconstruction - static_cast<double>(n) * chol.avg_corr) < 1e-9);
    CHECK(dc.M.diagonal().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);

    const DownscaleDecomposition rot = eigen_downscale_decomposition(oasis::oasis(cov).A * haar_rotation(rng, n), cov);
    CHECK(rot.M.diagonal().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("value types reject invalid input") {
  CHECK(kind_of([] { Ordering({0, 0, 1}); }) == ErrorKind::InvalidPermutation);
  CHECK(kind_of([] { Ordering({0, 3}); }) == ErrorKind::InvalidPermutation);
  CHECK(kind_of([] { Ordering(std::vector<int>{}); }) == ErrorKind::InvalidPermutation);
  CHECK(kind_of([] { Weights(Eigen::Vector2d(1.0, 0.0)); }) == ErrorKind::NonpositiveWeight);
  CHECK(kind_of([] { Weights(Eigen::Vector2d(1.0, -2.0)); }) == ErrorKind::NonpositiveWeight);
  CHECK(kind_of([] { cholesky_id(CovMatrix(Matrix::Identity(3, 3)), Ordering::identity(2)); }) ==
        ErrorKind::InvalidPermutation);
  CHECK(kind_of([] { weighted_oasis(CovMatrix(Matrix::Identity(3, 3)), Weights::equal(2)); }) ==
        ErrorKind::DimensionMismatch);
  CHECK(Ordering({2, 0, 1}).to_string() == "3 1 2");
  CHECK(Scheme{SchemeKind::Cholesky, std::nullopt, Ordering({1, 0})}.label() == "cholesky(2 1)");
}
