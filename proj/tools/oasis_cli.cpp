// Command-line front end: runs configured studies and writes their artifacts.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "oasis/study.hpp"

namespace {

using namespace oasis;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<int> horizon;
  std::string out;
  std::string rows;  // scatter: existing report.csv
};

template <class F>
auto tagged(const char* stage, F&& f) -> decltype(f()) {
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

StudyConfig configure(const fs::path& path, const Flags& flags) {
  StudyConfig c = tagged("config", [&] { return load_config(path); });
  if (flags.seed) c.seed = *flags.seed;
  if (flags.budget) c.scan_budget = *flags.budget;
  if (flags.horizon) c.horizon = *flags.horizon;
  return c;
}

struct Command {
  StudyStages stages;
  Artifacts artifacts;
};

Command command_for(const std::string& name) {
  if (name == "estimate") return {{false, false, false, false}, Artifacts::Estimate};
  if (name == "identify") return {{true, false, false, false}, Artifacts::Estimate | Artifacts::Identify};
  if (name == "scan") return {{false, true, false, false}, Artifacts::Scan};
  if (name == "irf") return {{true, false, true, false}, Artifacts::Identify | Artifacts::Irf};
  if (name == "proxy") return {{false, false, false, true}, Artifacts::Proxy};
  return {{true, true, true, true}, Artifacts::All};
}

void write_scatter(const std::vector<StudyReportRow>& rows, const fs::path& dir) {
  const ScatterDataset data = emit_scatter(rows);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  tagged("write", [&] {
    write_file_atomic(dir / "scatter_points.csv", scatter_points_csv(data));
    write_file_atomic(dir / "scatter_lines.csv", scatter_lines_csv(data));
  });
}

int run(const std::string& name, const Flags& flags) {
  if (name == "scatter" && !flags.rows.empty()) {
    const auto rows = tagged("read", [&] { return read_report_csv(flags.rows); });
    write_scatter(rows, flags.out.empty() ? fs::path(flags.rows).parent_path() : fs::path(flags.out));
    return 0;
  }
  if (flags.config.empty()) throw StageError("config", ErrorKind::ConfigError, "--config is required");

  const Command cmd = command_for(name);
  const bool batch = tagged("config", [&] { return is_manifest(flags.config); });
  if (!batch) {
    StudyConfig c = configure(flags.config, flags);
    if (!flags.out.empty()) c.out_dir = flags.out;
    const StudyResult r = run_study(c, cmd.stages);
    tagged("write", [&] { write_study(r, c.out_dir, cmd.artifacts); });
    if (r.proxy) {
      for (const auto& w : r.proxy->warnings) std::cerr << "warning: " << w << "\n";
    }
    if (r.row && (name == "report" || name == "scatter")) {
      if (name == "scatter") write_scatter({*r.row}, c.out_dir);
      std::cout << report_table({*r.row});
    }
    return 0;
  }

  const Manifest m = tagged("config", [&] { return load_manifest(flags.config); });
  const fs::path root = !flags.out.empty() ? fs::path(flags.out)
                        : m.out_dir       ? *m.out_dir
                                          : fs::path(flags.config).parent_path() / "out";
  std::vector<StudyReportRow> rows;
  for (const auto& path : m.studies) {
    StudyConfig c = configure(path, flags);
    c.out_dir = root / c.label;
    const StudyResult r = run_study(c, cmd.stages);
    tagged("write", [&] { write_study(r, c.out_dir, cmd.artifacts); });
    if (r.row) rows.push_back(*r.row);
  }
  if (!rows.empty()) {
    tagged("write", [&] {
      write_file_atomic(root / "report.csv", report_csv(rows));
      write_file_atomic(root / "report_table.txt", report_table(rows));
    });
    write_scatter(rows, root);
    if (name == "report" || name == "scatter") std::cout << report_table(rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural VAR identification studies"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"estimate", "Estimate the VAR and write coefficients, residuals and Sigma"},
      {"identify", "Estimate and identify (OASIS, Cholesky), with diagnostics"},
      {"scan", "Scan Cholesky orderings for the extremes of the average correlation"},
      {"proxy", "Proxy identification from instruments or a subset of shocks"},
      {"irf", "Structural impulse responses (VAR and local projection)"},
      {"report", "Run the full pipeline and write the study table"},
      {"scatter", "Scatter data of -log(1-rho) against log d(C)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    CLI::Option* cfg = sub->add_option("--config", flags.config, "Study configuration or manifest (JSON)");
    sub->add_option("--seed", flags.seed, "Seed for the sampled ordering scan");
    sub->add_option("--budget", flags.budget, "Maximum number of orderings evaluated");
    sub->add_option("--horizon", flags.horizon, "IRF horizon")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", flags.out, "Output directory");
    if (std::string(name) == "scatter") {
      sub->add_option("--rows", flags.rows, "Existing report.csv to plot")->excludes(cfg);
    } else {
      cfg->required();
    }
  }
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, flags);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << name << "] " << e.what() << "\n";
    return 1;
  }
}
