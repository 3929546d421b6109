#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "internal.hpp"

namespace oasis {

namespace {

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, ErrorKind::IoError, e.what());
  }
}

int position_of(const Ordering& ord, int variable) {
  const auto& idx = ord.indices();
  return static_cast<int>(std::find(idx.begin(), idx.end(), variable) - idx.begin()) + 1;
}

bool wants(const StudyConfig& c, const char* scheme) {
  return std::find(c.schemes.begin(), c.schemes.end(), scheme) != c.schemes.end();
}

// Residual rows paired with instrument rows, dropping periods where any
// instrument is missing.
std::pair<Matrix, Matrix> align_instruments(const StudyResult& r, const InstrumentSpec& spec) {
  auto [labels, z] = detail::read_instruments(spec);
  const Matrix& eps = r.model.residuals;
  const auto& periods = r.panel.periods();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (residual row, instrument row)
  if (!labels.empty() && !periods.empty()) {
    std::map<std::string, Eigen::Index> where;
    for (std::size_t i = 0; i < labels.size(); ++i) where.emplace(labels[i], static_cast<Eigen::Index>(i));
    for (Eigen::Index t = 0; t < eps.rows(); ++t) {
      const auto it = where.find(periods[static_cast<std::size_t>(t + r.model.p)]);
      if (it != where.end()) pairs.emplace_back(t, it->second);
    }
  } else {
    if (z.rows() != eps.rows()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "instrument file without period labels must have one row per residual (" +
                      std::to_string(eps.rows()) + "), found " + std::to_string(z.rows()));
    }
    for (Eigen::Index t = 0; t < eps.rows(); ++t) pairs.emplace_back(t, t);
  }
  std::erase_if(pairs, [&](const auto& p) { return !z.row(p.second).allFinite(); });
  if (static_cast<Eigen::Index>(pairs.size()) <= eps.cols() + 1) {
    throw Error(ErrorKind::InsufficientSample, "too few periods with both residuals and instruments");
  }
  Matrix e(static_cast<Eigen::Index>(pairs.size()), eps.cols());
  Matrix zz(static_cast<Eigen::Index>(pairs.size()), z.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    e.row(static_cast<Eigen::Index>(k)) = eps.row(pairs[k].first);
    zz.row(static_cast<Eigen::Index>(k)) = z.row(pairs[k].second);
  }
  return {e, zz};
}

ProxyResult run_proxy(const StudyResult& r) {
  const ProxySpec& spec = *r.config.proxy;
  if (spec.instruments) {
    const auto [eps, z] = align_instruments(r, *spec.instruments);
    const Weights w = spec.weights ? Weights(Eigen::Map<const Vector>(spec.weights->data(), z.cols()))
                                   : Weights::equal(z.cols());
    return proxy_oasis(ProxyInputs::from_samples(eps, z, w));
  }
  std::vector<int> subset;
  for (const auto& name : spec.subset) {
    const auto& names = r.panel.names();
    subset.push_back(static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin()));
  }
  if (spec.weights) {
    const CovMatrix& sigma = r.model.sigma;
    const Matrix C = corr_from_cov(sigma).C;
    Matrix c_eps_z(C.rows(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t j = 0; j < subset.size(); ++j) c_eps_z.col(static_cast<Eigen::Index>(j)) = C.col(subset[j]);
    // validates the subset the same way as the unweighted path
    subset_oasis(sigma, subset);
    return proxy_oasis(ProxyInputs(
        sigma, c_eps_z, Weights(Eigen::Map<const Vector>(spec.weights->data(), static_cast<Eigen::Index>(subset.size())))));
  }
  return subset_oasis(r.model.sigma, subset);
}

}  // namespace

StudyResult run_study(const StudyConfig& config, const StudyStages& stages) {
  const Ordering ordering = in_stage("config", [&] {
    validate_config(config);
    return resolve_ordering(config);
  });
  TimeSeriesPanel panel = in_stage("ingest", [&] { return ingest_csv(config.data_path, config); });
  VarModel model = in_stage("estimate", [&] { return estimate_var(panel, config.lags, config.var_options); });
  StudyResult r{config, std::move(panel), std::move(model), ordering, {}, {}, {}, {}, {}, {}};
  const CovMatrix& sigma = r.model.sigma;

  if (stages.identify || stages.irf) {
    r.ident = in_stage("identify", [&] {
      IdentificationResult star = oasis(sigma);
      IdentificationResult chol = cholesky_id(sigma, ordering);
      IdentificationResult upper = cholesky_upper_id(sigma, ordering);
      std::optional<IdentificationResult> weighted;
      if (config.weights) {
        weighted = weighted_oasis(
            sigma, Weights(Eigen::Map<const Vector>(config.weights->data(), static_cast<Eigen::Index>(config.weights->size()))));
      }
      RotationMatrix R = rotation_between(star.A, chol.A);
      DownscaleDecomposition dd = eigen_downscale_decomposition(chol.A, sigma);
      Diagnostics diag = diagnostics(sigma, ordering);
      const double cross = cross_scheme_corr(star.A, chol.A, sigma);
      return IdentifyOutputs{std::move(star), std::move(chol), std::move(upper), std::move(weighted),
                             std::move(R),    std::move(dd),   diag,            cross};
    });
  }

  if (stages.scan) {
    r.scan = in_stage("scan", [&] { return permutation_scan(sigma, config.scan_budget, config.seed); });
  }

  if (stages.irf) {
    r.irf = in_stage("irf", [&] {
      const MaCoefficients ma = ma_coefficients(r.model, config.horizon);
      IrfOutputs out{structural_irf(ma, r.ident->oasis), structural_irf(ma, r.ident->cholesky), {}, {}, {}};
      if (r.ident->weighted && wants(config, "weighted_oasis")) out.weighted = structural_irf(ma, *r.ident->weighted);
      if (config.local_projection) {
        const LpResult lp = local_projection(r.panel, r.model, config.horizon);
        out.lp_oasis = lp_structural_irf(lp, r.ident->oasis);
        out.lp_cholesky = lp_structural_irf(lp, r.ident->cholesky);
      }
      return out;
    });
  }

  if (stages.proxy && config.proxy) {
    r.proxy = in_stage("proxy", [&] { return run_proxy(r); });
  }

  if (r.ident) {
    const auto n = static_cast<int>(r.panel.vars());
    const Matrix cross = r.ident->oasis.A.transpose() * sigma.values() * r.ident->cholesky.A;
    for (int i = 0; i < n; ++i) {
      ShockCorrelationRow row;
      row.variable = r.panel.names()[static_cast<std::size_t>(i)];
      row.corr_oasis = r.ident->oasis.per_shock_corr(i);
      row.corr_chol_lower = r.ident->cholesky.per_shock_corr(i);
      row.corr_chol_upper = r.ident->cholesky_upper.per_shock_corr(i);
      if (r.scan) {
        row.position_in_min = position_of(r.scan->argmin, i);
        row.position_in_max = position_of(r.scan->argmax, i);
      }
      row.corr_oasis_chol = cross(i, i);
      r.shock_rows.push_back(std::move(row));
    }
  }

  if (r.ident && r.scan) {
    const Diagnostics& d = r.ident->diagnostics;
    StudyReportRow row;
    row.label = config.label;
    row.n = static_cast<int>(r.panel.vars());
    row.rho_star = d.rho_star;
    row.rho_chol = d.rho_chol;
    row.rho_chol_min = r.scan->min_rho;
    row.rho_chol_max = r.scan->max_rho;
    row.rho_star_chol = r.ident->rho_star_chol;
    row.abs_corr_mean = d.abs_corr_mean;
    row.ratio = d.proximity_ratio;
    row.d_C = d.d_C;
    row.exhaustive = r.scan->exhaustive;
    r.row = row;
  }
  return r;
}

namespace {

std::vector<std::string> shock_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back("u_" + n);
  return out;
}

std::string irf_csv(const IrfSet& irf, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "horizon,response,shock,value\n";
  for (std::size_t h = 0; h < irf.values.size(); ++h) {
    const Matrix& m = irf.values[h];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out << h << "," << names[static_cast<std::size_t>(i)] << "," << names[static_cast<std::size_t>(j)] << ","
            << format_full(m(i, j)) << "\n";
      }
    }
  }
  return out.str();
}

std::string shock_rows_csv(const std::vector<ShockCorrelationRow>& rows) {
  std::ostringstream out;
  out << "variable,corr_oasis,corr_cholesky_lower,corr_cholesky_upper,position_in_min,position_in_max,corr_oasis_cholesky\n";
  for (const auto& r : rows) {
    out << r.variable << "," << format_full(r.corr_oasis) << "," << format_full(r.corr_chol_lower) << ","
        << format_full(r.corr_chol_upper) << "," << r.position_in_min << "," << r.position_in_max << ","
        << format_full(r.corr_oasis_chol) << "\n";
  }
  return out.str();
}

void write_ident(const fs::path& dir, const IdentificationResult& id, const std::string& tag,
                 const std::vector<std::string>& names) {
  const auto shocks = shock_names(names);
  write_file_atomic(dir / ("A_" + tag + ".csv"), matrix_csv(id.A, names, shocks));
  write_file_atomic(dir / ("B_" + tag + ".csv"), matrix_csv(id.B, names, shocks));
}

std::vector<std::string> coefficient_names(const VarModel& m) {
  std::vector<std::string> cols{"const"};
  if (m.trend) cols.push_back("trend");
  for (int l = 1; l <= m.p; ++l) {
    for (const auto& n : m.names) cols.push_back(n + ".L" + std::to_string(l));
  }
  return cols;
}

Matrix coefficient_matrix(const VarModel& m) {
  const auto n = m.mu.size();
  const Eigen::Index k = 1 + (m.trend ? 1 : 0) + n * m.p;
  Matrix out(n, k);
  out.col(0) = m.mu;
  Eigen::Index c = 1;
  if (m.trend) out.col(c++) = *m.trend;
  for (const Matrix& phi : m.phi) {
    out.middleCols(c, n) = phi;
    c += n;
  }
  return out;
}

}  // namespace

void write_study(const StudyResult& r, const fs::path& dir, Artifacts what) {
  const auto& names = r.panel.names();
  nlohmann::ordered_json meta;
  meta["label"] = r.config.label;
  meta["variables"] = names;
  std::vector<std::string> transforms;
  for (Transform t : r.panel.transforms()) transforms.emplace_back(to_string(t));
  meta["transforms"] = transforms;
  meta["lags"] = r.model.p;
  meta["trend"] = r.config.var_options.linear_trend;
  meta["observations"] = r.panel.rows();
  meta["residual_rows"] = r.model.residuals.rows();
  meta["sigma_divisor"] = r.model.divisor;
  meta["ordering"] = r.ordering.to_string();
  meta["horizon"] = r.config.horizon;
  meta["scan_budget"] = r.config.scan_budget;
  meta["seed"] = r.config.seed;
  std::vector<std::string> files;
  auto put = [&](const std::string& file, const std::string& contents) {
    write_file_atomic(dir / file, contents);
    files.push_back(file);
  };

  if (has(what, Artifacts::Estimate)) {
    put("var_coefficients.csv", matrix_csv(coefficient_matrix(r.model), names, coefficient_names(r.model)));
    std::vector<std::string> rows;
    for (Eigen::Index t = 0; t < r.model.residuals.rows(); ++t) {
      rows.push_back(r.panel.periods().empty() ? std::to_string(t + r.model.p)
                                               : r.panel.periods()[static_cast<std::size_t>(t + r.model.p)]);
    }
    put("residuals.csv", matrix_csv(r.model.residuals, rows, names));
    put("sigma.csv", matrix_csv(r.model.sigma.values(), names, names));
  }

  if (has(what, Artifacts::Identify) && r.ident) {
    const IdentifyOutputs& id = *r.ident;
    for (const auto& [res, tag] : {std::pair{&id.oasis, "oasis"}, std::pair{&id.cholesky, "cholesky"},
                                   std::pair{&id.cholesky_upper, "cholesky_upper"}}) {
      write_ident(dir, *res, tag, names);
      files.push_back(std::string("A_") + tag + ".csv");
      files.push_back(std::string("B_") + tag + ".csv");
    }
    if (id.weighted) {
      write_ident(dir, *id.weighted, "weighted_oasis", names);
      files.push_back("A_weighted_oasis.csv");
      files.push_back("B_weighted_oasis.csv");
    }
    const auto shocks = shock_names(names);
    put("R_oasis_cholesky.csv", matrix_csv(id.rotation.values(), shocks, shocks));
    put("M_decomposition.csv", matrix_csv(id.downscale.M, {}, {}));
    put("shock_correlations.csv", shock_rows_csv(r.shock_rows));
    const Diagnostics& d = id.diagnostics;
    std::ostringstream diag;
    diag << "quantity,value\n"
         << "d_C," << format_full(d.d_C) << "\n"
         << "abs_corr_mean," << format_full(d.abs_corr_mean) << "\n"
         << "rho_star," << format_full(d.rho_star) << "\n"
         << "rho_chol," << format_full(d.rho_chol) << "\n"
         << "rho_star_chol," << format_full(id.rho_star_chol) << "\n"
         << "proximity_ratio," << (d.proximity_ratio ? format_full(*d.proximity_ratio) : kUndefinedSentinel) << "\n"
         << "approx_star," << format_full(d.approx_star) << "\n"
         << "approx_chol," << format_full(d.approx_chol) << "\n"
         << "gap_star," << format_full(d.gap_star) << "\n"
         << "gap_chol," << format_full(d.gap_chol) << "\n"
         << "downscale_reconstruction," << format_full(id.downscale.reconstruction) << "\n";
    put("diagnostics.csv", diag.str());
    meta["schemes"] = {id.oasis.scheme.label(), id.cholesky.scheme.label(), id.cholesky_upper.scheme.label()};
    if (id.weighted) meta["schemes"].push_back(id.weighted->scheme.label());
  }

  if (has(what, Artifacts::Scan) && r.scan) {
    std::ostringstream s;
    s << "min_rho,max_rho,argmin,argmax,exhaustive,evaluated\n"
      << format_full(r.scan->min_rho) << "," << format_full(r.scan->max_rho) << "," << r.scan->argmin.to_string()
      << "," << r.scan->argmax.to_string() << "," << (r.scan->exhaustive ? "true" : "false") << ","
      << r.scan->evaluated << "\n";
    put("scan.csv", s.str());
  }

  if (has(what, Artifacts::Irf) && r.irf) {
    put("irf_oasis.csv", irf_csv(r.irf->oasis, names));
    put("irf_cholesky.csv", irf_csv(r.irf->cholesky, names));
    if (r.irf->weighted) put("irf_weighted_oasis.csv", irf_csv(*r.irf->weighted, names));
    if (r.irf->lp_oasis) put("irf_lp_oasis.csv", irf_csv(*r.irf->lp_oasis, names));
    if (r.irf->lp_cholesky) put("irf_lp_cholesky.csv", irf_csv(*r.irf->lp_cholesky, names));
  }

  if (has(what, Artifacts::Proxy) && r.proxy) {
    std::vector<std::string> cols;
    for (Eigen::Index j = 0; j < r.proxy->a_star.cols(); ++j) cols.push_back("shock" + std::to_string(j + 1));
    put("proxy_a.csv", matrix_csv(r.proxy->a_star, names, cols));
    std::ostringstream s;
    s << "index,xi\n";
    for (Eigen::Index j = 0; j < r.proxy->xi.size(); ++j) s << j + 1 << "," << format_full(r.proxy->xi(j)) << "\n";
    put("proxy_xi.csv", s.str());
    meta["proxy_objective"] = r.proxy->objective;
    meta["proxy_full_rank"] = r.proxy->full_rank;
    meta["proxy_warnings"] = r.proxy->warnings;
  }

  if (has(what, Artifacts::Report) && r.row) {
    put("report_row.csv", report_csv({*r.row}));
    put("report_table.txt", report_table({*r.row}));
  }

  meta["files"] = files;
  write_file_atomic(dir / "metadata.json", meta.dump(2) + "\n");
}

std::string report_csv(const std::vector<StudyReportRow>& rows) {
  std::ostringstream out;
  out << "study,n,rho_star,rho_chol,rho_chol_min,rho_chol_max,rho_star_chol,abs_corr_mean,ratio,d_C,exhaustive\n";
  for (const auto& r : rows) {
    out << r.label << "," << r.n << "," << format_full(r.rho_star) << "," << format_full(r.rho_chol) << ","
        << format_full(r.rho_chol_min) << "," << format_full(r.rho_chol_max) << "," << format_full(r.rho_star_chol)
        << "," << format_full(r.abs_corr_mean) << "," << (r.ratio ? format_full(*r.ratio) : kUndefinedSentinel)
        << "," << format_full(r.d_C) << "," << (r.exhaustive ? "true" : "false") << "\n";
  }
  return out.str();
}

std::string report_table(const std::vector<StudyReportRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"study", "n", "rho*", "rho_c", "min rho_c", "max rho_c", "rho*,c", "|C|1*", "ratio", "d(C)"}};
  bool any_sampled = false;
  for (const auto& r : rows) {
    any_sampled |= !r.exhaustive;
    cells.push_back({r.label + (r.exhaustive ? "" : " +"), std::to_string(r.n), format_fixed(r.rho_star, 4),
                     format_fixed(r.rho_chol, 4), format_fixed(r.rho_chol_min, 4), format_fixed(r.rho_chol_max, 4),
                     format_fixed(r.rho_star_chol, 4), format_fixed(r.abs_corr_mean, 2),
                     r.ratio ? format_fixed(*r.ratio, 2) : kUndefinedSentinel, format_fixed(r.d_C, 2)});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == 0) {
        out << row[j] << std::string(width[j] - row[j].size(), ' ');
      } else {
        out << "  " << std::string(width[j] - row[j].size(), ' ') << row[j];
      }
    }
    out << "\n";
  }
  if (any_sampled) out << "+ min/max over a random sample of orderings\n";
  return out.str();
}

ScatterDataset emit_scatter(const std::vector<StudyReportRow>& rows) {
  ScatterDataset data;
  data.lines = {ReferenceLine{"oasis", -1.0, std::log(8.0)}, ReferenceLine{"cholesky", -1.0, std::log(4.0)}};
  for (const auto& r : rows) {
    if (!(r.d_C > 0.0) || !std::isfinite(r.d_C)) {
      data.warnings.push_back("skipped '" + r.label + "': d(C) is not positive");
      continue;
    }
    for (const auto& [scheme, rho] : {std::pair{"oasis", r.rho_star}, std::pair{"cholesky", r.rho_chol}}) {
      if (!(rho < 1.0) || !std::isfinite(rho)) {
        data.warnings.push_back("skipped '" + r.label + "' (" + scheme + "): average correlation is 1");
        continue;
      }
      data.points.push_back(ScatterPoint{r.label, scheme, r.d_C, rho, std::log(r.d_C), -std::log1p(-rho)});
    }
  }
  return data;
}

std::string scatter_points_csv(const ScatterDataset& data) {
  std::ostringstream out;
  out << "study,scheme,d_C,rho,log_d_C,neg_log_one_minus_rho\n";
  for (const auto& p : data.points) {
    out << p.study << "," << p.scheme << "," << format_full(p.d_C) << "," << format_full(p.rho) << ","
        << format_full(p.x) << "," << format_full(p.y) << "\n";
  }
  return out.str();
}

std::string scatter_lines_csv(const ScatterDataset& data) {
  std::ostringstream out;
  out << "line,slope,intercept\n";
  for (const auto& l : data.lines) out << l.name << "," << format_full(l.slope) << "," << format_full(l.intercept) << "\n";
  return out.str();
}

}  // namespace oasis
