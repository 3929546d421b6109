#include "oasis/var_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace oasis {

const char* to_string(Transform t) noexcept {
  switch (t) {
    case Transform::Levels: return "levels";
    case Transform::Diff: return "diff";
    case Transform::LogDiff: return "log_diff";
  }
  return "levels";
}

Transform parse_transform(const std::string& text) {
  std::string key;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "levels" || key == "level") return Transform::Levels;
  if (key == "diff") return Transform::Diff;
  if (key == "logdiff") return Transform::LogDiff;
  throw Error(ErrorKind::ConfigError, "unknown transform '" + text + "'");
}

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::string> names, Matrix data, std::vector<Transform> transforms,
                                 std::vector<std::string> periods)
    : names_(std::move(names)), data_(std::move(data)), transforms_(std::move(transforms)), periods_(std::move(periods)) {
  const auto n = static_cast<std::size_t>(data_.cols());
  if (names_.size() != n || transforms_.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "panel names/transforms do not match the number of columns");
  }
  if (!periods_.empty() && periods_.size() != static_cast<std::size_t>(data_.rows())) {
    throw Error(ErrorKind::DimensionMismatch, "panel period labels do not match the number of rows");
  }
  for (Eigen::Index t = 0; t < data_.rows(); ++t) {
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      if (!std::isfinite(data_(t, j))) {
        std::ostringstream msg;
        msg << "non-finite value at row " << t << ", column '" << names_[static_cast<std::size_t>(j)] << "'";
        throw Error(ErrorKind::MissingValue, msg.str());
      }
    }
  }
}

TimeSeriesPanel transform_panel(const std::vector<std::string>& names, const Matrix& raw,
                                const std::vector<Transform>& transforms, const std::vector<std::string>& periods) {
  if (names.size() != static_cast<std::size_t>(raw.cols()) || transforms.size() != names.size()) {
    throw Error(ErrorKind::DimensionMismatch, "transform list does not match the number of columns");
  }
  const bool differenced = std::any_of(transforms.begin(), transforms.end(),
                                       [](Transform t) { return t != Transform::Levels; });
  const Eigen::Index drop = differenced ? 1 : 0;
  if (raw.rows() <= drop) throw Error(ErrorKind::InsufficientSample, "not enough rows to difference");

  Matrix out(raw.rows() - drop, raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const Transform tr = transforms[static_cast<std::size_t>(j)];
    if (tr == Transform::LogDiff) {
      for (Eigen::Index t = 0; t < raw.rows(); ++t) {
        if (!(raw(t, j) > 0.0)) {
          std::ostringstream msg;
          msg << "value " << raw(t, j) << " at row " << t << ", column '" << names[static_cast<std::size_t>(j)]
              << "' cannot be logged";
          throw Error(ErrorKind::NonPositiveValueUnderLog, msg.str());
        }
      }
    }
    for (Eigen::Index t = drop; t < raw.rows(); ++t) {
      double v = raw(t, j);
      switch (tr) {
        case Transform::Levels: break;
        case Transform::Diff: v = raw(t, j) - raw(t - 1, j); break;
        case Transform::LogDiff: v = std::log(raw(t, j)) - std::log(raw(t - 1, j)); break;
      }
      out(t - drop, j) = v;
    }
  }
  std::vector<std::string> labels;
  if (!periods.empty()) labels.assign(periods.begin() + drop, periods.end());
  return TimeSeriesPanel(names, std::move(out), transforms, std::move(labels));
}

Matrix ols(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) throw Error(ErrorKind::DimensionMismatch, "regressor and response row counts differ");
  if (X.rows() < X.cols()) throw Error(ErrorKind::InsufficientSample, "fewer observations than regressors");
  // Condition number judged on the column-equilibrated cross-product so that
  // units of measurement do not trigger the check.
  Vector norms = X.colwise().norm().transpose();
  if ((norms.array() == 0.0).any()) throw Error(ErrorKind::CollinearRegressors, "a regressor column is identically zero");
  const Matrix Xs = X * norms.cwiseInverse().asDiagonal();
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(Xs.transpose() * Xs, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev(0) <= 0.0 || ev(ev.size() - 1) / ev(0) > kMaxRegressorCondition) {
    throw Error(ErrorKind::CollinearRegressors, "regressor cross-product matrix is ill-conditioned");
  }
  return X.colPivHouseholderQr().solve(Y);
}

Matrix var_design(const Matrix& data, int p, bool linear_trend) {
  const Eigen::Index T = data.rows();
  const Eigen::Index n = data.cols();
  const Eigen::Index lead = linear_trend ? 2 : 1;
  Matrix Z(T - p, lead + n * p);
  for (Eigen::Index t = p; t < T; ++t) {
    const Eigen::Index r = t - p;
    Z(r, 0) = 1.0;
    if (linear_trend) Z(r, 1) = static_cast<double>(t + 1);
    for (int lag = 1; lag <= p; ++lag) {
      Z.block(r, lead + (lag - 1) * n, 1, n) = data.row(t - lag);
    }
  }
  return Z;
}

VarModel estimate_var(const TimeSeriesPanel& panel, int p, const VarOptions& options) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "lag order must be at least 1");
  const Eigen::Index T = panel.rows();
  const Eigen::Index n = panel.vars();
  const Eigen::Index k = (options.linear_trend ? 2 : 1) + n * p;
  if (T <= n * p + n + 1 || T - p <= k) {
    std::ostringstream msg;
    msg << "T=" << T << " is too small for a VAR(" << p << ") in " << n << " variables";
    throw Error(ErrorKind::InsufficientSample, msg.str());
  }
  const Matrix Z = var_design(panel.data(), p, options.linear_trend);
  const Matrix Y = panel.data().bottomRows(T - p);
  const Matrix gamma = ols(Z, Y);  // k×n, column j = equation j

  const Matrix resid = Y - Z * gamma;
  const double divisor = static_cast<double>(options.dof_adjust ? (T - p - k) : (T - p));
  const Matrix S = resid.transpose() * resid / divisor;

  VarModel m{p, gamma.row(0).transpose(), {}, std::nullopt, resid, CovMatrix(S), panel.names(), divisor};
  const Eigen::Index lead = options.linear_trend ? 2 : 1;
  if (options.linear_trend) m.trend = gamma.row(1).transpose();
  for (int lag = 1; lag <= p; ++lag) {
    m.phi.push_back(gamma.block(lead + (lag - 1) * n, 0, n, n).transpose());
  }
  return m;
}

MaCoefficients ma_coefficients(const std::vector<Matrix>& phi, int H) {
  if (H < 0) throw Error(ErrorKind::InvalidArgument, "horizon must be non-negative");
  if (phi.empty()) throw Error(ErrorKind::InvalidArgument, "at least one coefficient matrix is required");
  const Eigen::Index n = phi.front().rows();
  MaCoefficients out;
  out.psi.reserve(static_cast<std::size_t>(H) + 1);
  out.psi.push_back(Matrix::Identity(n, n));
  const int p = static_cast<int>(phi.size());
  for (int h = 1; h <= H; ++h) {
    Matrix acc = Matrix::Zero(n, n);
    for (int i = 1; i <= std::min(h, p); ++i) {
      acc.noalias() += phi[static_cast<std::size_t>(i - 1)] * out.psi[static_cast<std::size_t>(h - i)];
    }
    out.psi.push_back(std::move(acc));
  }
  return out;
}

MaCoefficients ma_coefficients(const VarModel& model, int H) { return ma_coefficients(model.phi, H); }

LpResult local_projection(const TimeSeriesPanel& panel, const Matrix& residuals, Eigen::Index first_row, int H) {
  if (H < 0) throw Error(ErrorKind::InvalidArgument, "horizon must be non-negative");
  const Eigen::Index T = panel.rows();
  const Eigen::Index n = panel.vars();
  const Eigen::Index R = residuals.rows();
  if (residuals.cols() != n || first_row < 0 || first_row + R > T) {
    throw Error(ErrorKind::DimensionMismatch, "residuals are not aligned with the panel");
  }
  LpResult out;
  for (int h = 0; h <= H; ++h) {
    // Residual rows r with first_row + r + h ≤ T − 1.
    const Eigen::Index usable = std::min(R, T - first_row - h);
    if (usable < n + 2) {
      std::ostringstream msg;
      msg << "horizon " << h << " leaves " << std::max<Eigen::Index>(usable, 0) << " usable rows";
      throw Error(ErrorKind::InsufficientSample, msg.str());
    }
    Matrix X(usable, n + 1);
    X.col(0).setOnes();
    X.rightCols(n) = residuals.topRows(usable);
    const Matrix Y = panel.data().middleRows(first_row + h, usable);
    const Matrix coef = ols(X, Y);
    out.theta.push_back(coef.bottomRows(n).transpose());
    out.residuals.push_back(Y - X * coef);
  }
  return out;
}

LpResult local_projection(const TimeSeriesPanel& panel, const VarModel& model, int H) {
  return local_projection(panel, model.residuals, model.p, H);
}

}  // namespace oasis
