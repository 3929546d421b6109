#include <cmath>

#include <doctest.h>

#include "oasis/var_engine.hpp"
#include "support/random_matrices.hpp"

using namespace oasis;
using namespace oasis::testing;

namespace {

TimeSeriesPanel panel_of(const Matrix& data) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < data.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  return TimeSeriesPanel(names, data, std::vector<Transform>(static_cast<std::size_t>(data.cols()), Transform::Levels));
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

}  // namespace

TEST_CASE("transforms") {
  Matrix raw(5, 3);
  for (int t = 0; t < 5; ++t) {
    raw(t, 0) = t * t;
    raw(t, 1) = std::exp(0.01 * t);
    raw(t, 2) = 7.0 + t;
  }
  const TimeSeriesPanel p = transform_panel({"a", "b", "c"}, raw, {Transform::Diff, Transform::LogDiff, Transform::Levels},
                                            {"t0", "t1", "t2", "t3", "t4"});
  REQUIRE(p.rows() == 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(p.data()(t, 0) == 2.0 * t + 1.0);
    CHECK(std::abs(p.data()(t, 1) - 0.01) < 1e-12);
    CHECK(p.data()(t, 2) == raw(t + 1, 2));
  }
  CHECK(p.periods().front() == "t1");

  const TimeSeriesPanel lv = transform_panel({"a", "b"}, raw.leftCols(2), {Transform::Levels, Transform::Levels});
  CHECK(lv.data() == raw.leftCols(2));

  Matrix neg = raw;
  neg(3, 1) = -1.0;
  try {
    transform_panel({"a", "b", "c"}, neg, {Transform::Levels, Transform::LogDiff, Transform::Levels});
    FAIL("expected NonPositiveValueUnderLog");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveValueUnderLog);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
  CHECK(parse_transform("log_diff") == Transform::LogDiff);
  CHECK(parse_transform("diff") == Transform::Diff);
  CHECK(kind_of([] { parse_transform("sqrt"); }) == ErrorKind::ConfigError);

  Matrix missing = raw;
  missing(1, 2) = std::nan("");
  CHECK(kind_of([&] { panel_of(missing); }) == ErrorKind::MissingValue);
}

TEST_CASE("ols matches the normal equations") {
  Rng rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index T = uniform_int(rng, 30, 200);
    const Eigen::Index k = uniform_int(rng, 1, 8);
    const Matrix X = gaussian(rng, T, k);
    const Matrix Y = gaussian(rng, T, 3);
    const Matrix b = ols(X, Y);
    const Matrix normal = (X.transpose() * X).ldlt().solve(X.transpose() * Y);
    CHECK((b - normal).norm() < 1e-10 * std::max(1.0, normal.norm()));
  }
  Matrix X = Matrix::Ones(20, 2);
  CHECK(kind_of([&] { ols(X, Matrix::Ones(20, 1)); }) == ErrorKind::CollinearRegressors);
  X.col(1).setZero();
  CHECK(kind_of([&] { ols(X, Matrix::Ones(20, 1)); }) == ErrorKind::CollinearRegressors);
  CHECK(kind_of([] { ols(Matrix::Ones(2, 3), Matrix::Ones(2, 1)); }) == ErrorKind::InsufficientSample);
}

TEST_CASE("estimate_var on white noise") {
  Rng rng(42);
  const TimeSeriesPanel p = panel_of(gaussian(rng, 500, 2));
  const VarModel m = estimate_var(p, 1);
  CHECK(m.phi.at(0).norm() < 0.2);
  CHECK((m.sigma.values() - Matrix::Identity(2, 2)).norm() < 0.2);
  CHECK(m.divisor == 499.0);
  CHECK(estimate_var(p, 1, VarOptions{false, true}).divisor == 499.0 - 3.0);
}

TEST_CASE("estimate_var recovers a known VAR(1)") {
  Rng rng(43);
  std::vector<Matrix> phi{Matrix(Eigen::Vector2d(0.5, 0.5).asDiagonal())};
  const auto [X, eps] = simulate_var(rng, phi, Eigen::Vector2d(1.0, -0.5), Matrix::Identity(2, 2), 10000);
  const VarModel m = estimate_var(panel_of(X), 1);
  CHECK((m.phi[0] - phi[0]).cwiseAbs().maxCoeff() < 0.05);
  CHECK((m.mu - Eigen::Vector2d(1.0, -0.5)).cwiseAbs().maxCoeff() < 0.1);

  const VarModel tr = estimate_var(panel_of(X), 1, VarOptions{true, false});
  REQUIRE(tr.trend.has_value());
  CHECK(tr.trend->cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("estimate_var sample-size boundary") {
  Rng rng(44);
  const int n = 3, p = 2;
  CHECK(kind_of([&] { estimate_var(panel_of(gaussian(rng, n * p + n, n)), p); }) == ErrorKind::InsufficientSample);
  CHECK_NOTHROW(estimate_var(panel_of(gaussian(rng, n * p + n + 3, n)), p));
  CHECK(kind_of([&] { estimate_var(panel_of(gaussian(rng, 50, n)), 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("property: joint and equation-by-equation OLS agree") {
  Rng rng(45);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = uniform_int(rng, 2, 5);
    const int p = uniform_int(rng, 1, 3);
    const auto phi = stable_var(rng, n, p, 0.9);
    const auto [X, eps] = simulate_var(rng, phi, Vector::Zero(n), wishart_cov(rng, n, 3 * n), 300);
    const VarModel m = estimate_var(panel_of(X), p);
    const Matrix Z = var_design(X, p, false);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Matrix y = X.col(j).tail(X.rows() - p);
      const Matrix b = ols(Z, y);
      const Matrix e = y - Z * b;
      CHECK((e.col(0) - m.residuals.col(j)).cwiseAbs().maxCoeff() < 1e-10);
    }
    // residuals are orthogonal to every regressor
    CHECK((Z.transpose() * m.residuals).cwiseAbs().maxCoeff() < 1e-8 * Z.norm() * m.residuals.norm());
  }
}

TEST_CASE("ma_coefficients") {
  const std::vector<Matrix> phi{Matrix(Eigen::Vector2d(0.5, 0.2).asDiagonal())};
  const MaCoefficients ma = ma_coefficients(phi, 3);
  REQUIRE(ma.psi.size() == 4);
  for (int h = 0; h <= 3; ++h) {
    CHECK(ma.psi[static_cast<std::size_t>(h)](0, 0) == doctest::Approx(std::pow(0.5, h)).epsilon(1e-15));
    CHECK(ma.psi[static_cast<std::size_t>(h)](1, 1) == doctest::Approx(std::pow(0.2, h)).epsilon(1e-15));
    CHECK(ma.psi[static_cast<std::size_t>(h)](0, 1) == 0.0);
  }
  const MaCoefficients zero_h = ma_coefficients(phi, 0);
  CHECK(zero_h.psi.size() == 1);
  CHECK(zero_h.psi[0] == Matrix::Identity(2, 2));

  Rng rng(46);
  const Matrix P1 = gaussian(rng, 3, 3) * 0.3;
  const MaCoefficients one = ma_coefficients({P1}, 12);
  const MaCoefficients two = ma_coefficients({P1, Matrix::Zero(3, 3)}, 12);
  for (int h = 0; h <= 12; ++h) CHECK(one.psi[static_cast<std::size_t>(h)] == two.psi[static_cast<std::size_t>(h)]);

  const MaCoefficients z = ma_coefficients({Matrix::Zero(3, 3), Matrix::Zero(3, 3)}, 5);
  for (int h = 1; h <= 5; ++h) CHECK(z.psi[static_cast<std::size_t>(h)].norm() == 0.0);

  // Oracle: Ψ_h is the top-left block of the companion matrix power.
  const auto phis = stable_var(rng, 3, 3, 0.95);
  Matrix F = Matrix::Zero(9, 9);
  for (int l = 0; l < 3; ++l) F.block(0, 3 * l, 3, 3) = phis[static_cast<std::size_t>(l)];
  F.bottomLeftCorner(6, 6).setIdentity();
  const MaCoefficients mc = ma_coefficients(phis, 20);
  Matrix Fh = Matrix::Identity(9, 9);
  for (int h = 0; h <= 20; ++h) {
    CHECK((mc.psi[static_cast<std::size_t>(h)] - Fh.topLeftCorner(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    Fh = F * Fh;
  }
  CHECK(kind_of([&] { ma_coefficients(phis, -1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("local_projection") {
  Rng rng(47);
  const std::vector<Matrix> phi{Matrix(Eigen::Vector2d(0.5, 0.2).asDiagonal())};
  Matrix S(2, 2);
  S << 1.0, 0.3, 0.3, 0.5;
  const auto [X, eps] = simulate_var(rng, phi, Vector::Zero(2), S, 10000);
  const TimeSeriesPanel p = panel_of(X);
  const VarModel m = estimate_var(p, 1);
  const LpResult lp = local_projection(p, m, 6);
  CHECK((lp.theta[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  const MaCoefficients ma = ma_coefficients(m, 6);
  for (int h = 0; h <= 6; ++h) {
    CHECK((lp.theta[static_cast<std::size_t>(h)] - ma.psi[static_cast<std::size_t>(h)]).cwiseAbs().maxCoeff() < 0.1);
  }
  CHECK(lp.residuals[3].rows() == m.residuals.rows() - 3);

  const TimeSeriesPanel small = panel_of(X.topRows(20));
  const VarModel ms = estimate_var(small, 1);
  CHECK(kind_of([&] { local_projection(small, ms, 40); }) == ErrorKind::InsufficientSample);
  CHECK_NOTHROW(local_projection(small, ms, 10));
}
