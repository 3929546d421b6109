#pragma once

// Study pipeline used by the command-line tool: configuration, CSV ingestion,
// orchestration of estimation/identification/IRFs, and report emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oasis/ident.hpp"
#include "oasis/irf.hpp"
#include "oasis/proxy.hpp"
#include "oasis/var_engine.hpp"

namespace oasis {

namespace fs = std::filesystem;

/// Error raised by the pipeline, tagged with the stage that failed.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)), kind_(kind) {}

  const std::string& stage() const noexcept { return stage_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

struct VariableSpec {
  std::string name;
  Transform transform = Transform::Levels;
};

struct InstrumentSpec {
  fs::path path;
  std::vector<std::string> columns;
};

struct ProxySpec {
  std::vector<std::string> subset;           // reduced-form shocks used as instruments
  std::optional<InstrumentSpec> instruments;  // external instrument series
  std::optional<std::vector<double>> weights;
};

struct StudyConfig {
  std::string label = "study";
  fs::path data_path;
  std::vector<VariableSpec> variables;
  int lags = 1;
  VarOptions var_options;
  std::vector<std::string> schemes{"oasis", "cholesky"};
  std::vector<std::string> ordering;  // variable names; empty means file order
  std::optional<std::vector<double>> weights;
  int horizon = kDefaultHorizon;
  bool local_projection = true;
  std::uint64_t scan_budget = kDefaultScanBudget;
  std::uint64_t seed = 0;
  std::optional<ProxySpec> proxy;
  fs::path out_dir = "out";
};

/// Parses a JSON study configuration. Relative paths resolve against base_dir.
StudyConfig parse_config(const std::string& text, const fs::path& base_dir);
StudyConfig load_config(const fs::path& path);

/// A manifest is a JSON object with a "studies" array of config paths.
struct Manifest {
  std::vector<fs::path> studies;
  std::optional<fs::path> out_dir;
};
bool is_manifest(const fs::path& path);
Manifest load_manifest(const fs::path& path);

/// Throws InvalidPermutation / NonpositiveWeight / ConfigError.
void validate_config(const StudyConfig& config);
Ordering resolve_ordering(const StudyConfig& config);

/// Reads a comma-separated file with a header row. A first column whose header
/// is not a configured variable holds period labels.
TimeSeriesPanel ingest_csv(const fs::path& path, const StudyConfig& config);

struct StudyReportRow {
  std::string label;
  int n = 0;
  double rho_star = 1.0;
  double rho_chol = 1.0;
  double rho_chol_min = 1.0;
  double rho_chol_max = 1.0;
  double rho_star_chol = 1.0;
  double abs_corr_mean = 0.0;
  std::optional<double> ratio;
  double d_C = 0.0;
  bool exhaustive = true;
};

struct ShockCorrelationRow {
  std::string variable;
  double corr_oasis = 1.0;
  double corr_chol_lower = 1.0;
  double corr_chol_upper = 1.0;
  int position_in_min = 0;  // 1-based position in the ordering minimizing ρ̄_c
  int position_in_max = 0;
  double corr_oasis_chol = 1.0;  // corr(u*_i, u_c,i)
};

struct IdentifyOutputs {
  IdentificationResult oasis;
  IdentificationResult cholesky;
  IdentificationResult cholesky_upper;
  std::optional<IdentificationResult> weighted;
  RotationMatrix rotation;  // A*⁻¹ A_c, so u_c = R'u*
  DownscaleDecomposition downscale;
  Diagnostics diagnostics;
  double rho_star_chol = 1.0;
};

struct IrfOutputs {
  IrfSet oasis;
  IrfSet cholesky;
  std::optional<IrfSet> weighted;
  std::optional<IrfSet> lp_oasis;
  std::optional<IrfSet> lp_cholesky;
};

struct StudyResult {
  StudyConfig config;
  TimeSeriesPanel panel;
  VarModel model;
  Ordering ordering;
  std::optional<IdentifyOutputs> ident;
  std::optional<PermutationScan> scan;
  std::optional<IrfOutputs> irf;
  std::optional<ProxyResult> proxy;
  std::vector<ShockCorrelationRow> shock_rows;  // needs ident; positions need scan
  std::optional<StudyReportRow> row;            // needs ident and scan
};

/// Which parts of the pipeline to run. Estimation always runs.
struct StudyStages {
  bool identify = true;
  bool scan = true;
  bool irf = true;
  bool proxy = true;
};

StudyResult run_study(const StudyConfig& config, const StudyStages& stages = {});

// Emission. Each file is written to a temporary name and renamed into place.
enum class Artifacts : unsigned {
  Estimate = 1u << 0,
  Identify = 1u << 1,
  Scan = 1u << 2,
  Irf = 1u << 3,
  Proxy = 1u << 4,
  Report = 1u << 5,
  All = 0x3Fu,
};
constexpr Artifacts operator|(Artifacts a, Artifacts b) {
  return static_cast<Artifacts>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has(Artifacts set, Artifacts flag) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(flag)) != 0;
}

void write_study(const StudyResult& result, const fs::path& dir, Artifacts what = Artifacts::All);

/// Atomic text write (temp file + rename).
void write_file_atomic(const fs::path& path, const std::string& contents);

/// %.17g, the machine-readable float format.
std::string format_full(double v);
/// Fixed-point with the given decimals, for display tables.
std::string format_fixed(double v, int decimals);

inline constexpr const char* kUndefinedSentinel = "undefined";

std::string report_csv(const std::vector<StudyReportRow>& rows);
std::string report_table(const std::vector<StudyReportRow>& rows);
std::vector<StudyReportRow> read_report_csv(const fs::path& path);

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names);
Matrix read_matrix_csv(const fs::path& path);

struct ScatterPoint {
  std::string study;
  std::string scheme;  // "oasis" or "cholesky"
  double d_C = 0.0;
  double rho = 0.0;
  double x = 0.0;  // log d(C)
  double y = 0.0;  // −log(1 − ρ̄)
};

struct ReferenceLine {
  std::string name;
  double slope = -1.0;
  double intercept = 0.0;
};

struct ScatterDataset {
  std::vector<ScatterPoint> points;
  std::vector<ReferenceLine> lines;
  std::vector<std::string> warnings;
};

ScatterDataset emit_scatter(const std::vector<StudyReportRow>& rows);
std::string scatter_points_csv(const ScatterDataset& data);
std::string scatter_lines_csv(const ScatterDataset& data);

}  // namespace oasis
