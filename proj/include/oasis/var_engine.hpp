#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oasis/matprim.hpp"

namespace oasis {

enum class Transform { Levels, Diff, LogDiff };

const char* to_string(Transform t) noexcept;
/// Accepts "levels", "diff", "log_diff" (also "log-diff", "logdiff").
Transform parse_transform(const std::string& text);

/// Observed series after transformation. Immutable once built.
class TimeSeriesPanel {
 public:
  /// Validates shapes and that every value is finite.
  TimeSeriesPanel(std::vector<std::string> names, Matrix data, std::vector<Transform> transforms,
                  std::vector<std::string> periods = {});

  const std::vector<std::string>& names() const noexcept { return names_; }
  const Matrix& data() const noexcept { return data_; }
  const std::vector<Transform>& transforms() const noexcept { return transforms_; }
  const std::vector<std::string>& periods() const noexcept { return periods_; }
  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index vars() const noexcept { return data_.cols(); }

 private:
  std::vector<std::string> names_;
  Matrix data_;
  std::vector<Transform> transforms_;
  std::vector<std::string> periods_;
};

/// Applies per-column transforms to raw levels. Differencing drops the first
/// row of the whole panel. Throws NonPositiveValueUnderLog naming the row
/// (0-based, raw) and the column.
TimeSeriesPanel transform_panel(const std::vector<std::string>& names, const Matrix& raw,
                                const std::vector<Transform>& transforms,
                                const std::vector<std::string>& periods = {});

struct VarOptions {
  bool linear_trend = false;
  /// Divide the residual cross-product by T−p−k (k regressors per equation)
  /// instead of T−p.
  bool dof_adjust = false;
};

struct VarModel {
  int p = 0;
  Vector mu;                 // intercepts
  std::vector<Matrix> phi;   // Φ_1..Φ_p
  std::optional<Vector> trend;
  Matrix residuals;          // (T−p)×n, row r ↔ panel row r+p
  CovMatrix sigma;
  std::vector<std::string> names;
  double divisor = 0.0;
};

struct MaCoefficients {
  std::vector<Matrix> psi;  // Ψ_0..Ψ_H
};

struct LpResult {
  std::vector<Matrix> theta;      // Θ_0..Θ_H
  std::vector<Matrix> residuals;  // e_{t,t+h}, one matrix per horizon
};

/// Least-squares coefficients of Y on X (columns of the result index the
/// columns of Y). Throws CollinearRegressors when cond(X'X) > 1e12.
Matrix ols(const Matrix& X, const Matrix& Y);

/// Condition-number ceiling on the regressor cross-product matrix.
inline constexpr double kMaxRegressorCondition = 1e12;

/// Design matrix with rows Z_{t−1}' = (1, [t], X_{t−1}', …, X_{t−p}') for t = p..T−1.
Matrix var_design(const Matrix& data, int p, bool linear_trend);

VarModel estimate_var(const TimeSeriesPanel& panel, int p, const VarOptions& options = {});

MaCoefficients ma_coefficients(const std::vector<Matrix>& phi, int H);
MaCoefficients ma_coefficients(const VarModel& model, int H);

/// Per-horizon OLS of X_{t+h} on (1, ε_t). `first_row` is the panel row that
/// residual row 0 belongs to.
LpResult local_projection(const TimeSeriesPanel& panel, const Matrix& residuals, Eigen::Index first_row, int H);
LpResult local_projection(const TimeSeriesPanel& panel, const VarModel& model, int H);

}  // namespace oasis
