#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "possq/bench/runner.hpp"
#include "possq/bench/scenario.hpp"
#include "possq/bench/table1.hpp"
#include "possq/cli/config.hpp"
#include "possq/core/errors.hpp"

#ifndef POSSQ_VERSION
#define POSSQ_VERSION "0.0.0"
#endif

namespace possq::cli {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

namespace detail {

inline std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

/// CSV file with a leading comment line and a column header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& comment, const std::string& columns)
      : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    out_ << "# " << comment << "\n" << columns << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::string header(const Config& c, std::string_view extra = {}) {
  std::string h = "possq " POSSQ_VERSION " config=" + config_hash(c) + " seed=" + std::to_string(c.base_seed);
  if (!extra.empty()) h += " " + std::string(extra);
  return h;
}

}  // namespace detail

/// Batch of runs for one filter: rms.csv and runs.csv.
inline int cmd_run(const Config& c, std::ostream& log) {
  const auto s = bench::build_canonical_scenario(c.scenario);
  const auto crlb = bench::scenario_crlb(s);
  const auto batch = bench::run_batch(s, c.filter, c.particles, c.runs, c.base_seed, c.parallelism);

  const std::filesystem::path dir(c.output_dir);
  const std::string extra = "filter=" + std::string(bench::to_string(c.filter)) +
                            " estimator=" + std::string(bench::estimator_name(c.filter)) +
                            " rms_over=non-divergent-runs";
  detail::CsvWriter rms(dir / "rms.csv", detail::header(c, extra), "scan,time_s,rms_m,crlb_m,n_alive_runs");
  for (int k = 0; k < s.scan_count(); ++k) {
    rms.row({std::to_string(k + 1), detail::fixed(s.time_s(k), 1), detail::fixed(batch.rms[k], 3),
             detail::fixed(crlb[k].position_rms, 3), std::to_string(batch.alive_runs)});
  }
  rms.close();

  detail::CsvWriter runs(dir / "runs.csv", detail::header(c, extra), "run,seed,final_err_m,divergent");
  for (std::size_t i = 0; i < batch.runs.size(); ++i) {
    const auto& r = batch.runs[i];
    runs.row({std::to_string(i), std::to_string(r.seed), detail::fixed(r.final_error(), 3), r.divergent ? "1" : "0"});
  }
  runs.close();

  log << bench::to_string(c.filter) << ": " << batch.runs.size() << " runs, " << batch.divergent_runs
      << " divergent (" << detail::fixed(batch.divergence_pct(), 1) << "%), final RMS "
      << detail::fixed(batch.rms.back(), 1) << " m, final CRLB " << detail::fixed(crlb.back().position_rms, 1)
      << " m\n";
  return kExitOk;
}

/// Divergence grid: table1.csv.
inline int cmd_table1(const Config& c, std::ostream& log) {
  bench::Table1Config t;
  t.scenario = c.scenario;
  t.particle_counts = c.n_grid;
  t.nus = c.nu_grid;
  t.runs = c.runs;
  t.base_seed = c.base_seed;
  t.parallelism = c.parallelism;
  const auto cells = bench::table1_experiment(t);

  detail::CsvWriter csv(std::filesystem::path(c.output_dir) / "table1.csv", detail::header(c),
                        "filter,n,nu,runs,divergent_pct,wilson_lo,wilson_hi");
  for (const auto& cell : cells) {
    csv.row({std::string(bench::to_string(cell.filter)), std::to_string(cell.particles), detail::number(cell.nu),
             std::to_string(cell.runs), detail::fixed(cell.divergent_pct, 2), detail::fixed(cell.wilson_pct.lo, 2),
             detail::fixed(cell.wilson_pct.hi, 2)});
    log << bench::to_string(cell.filter) << " n=" << cell.particles << " nu=" << detail::number(cell.nu) << ": "
        << detail::fixed(cell.divergent_pct, 1) << "% [" << detail::fixed(cell.wilson_pct.lo, 1) << ", "
        << detail::fixed(cell.wilson_pct.hi, 1) << "]\n";
  }
  csv.close();
  return kExitOk;
}

/// Position bound along the nominal track: crlb.csv.
inline int cmd_crlb(const Config& c, std::ostream& log) {
  const auto s = bench::build_canonical_scenario(c.scenario);
  const auto crlb = bench::scenario_crlb(s);
  detail::CsvWriter csv(std::filesystem::path(c.output_dir) / "crlb.csv", detail::header(c, "track=nominal"),
                        "scan,time_s,pos_bound_m");
  for (int k = 0; k < s.scan_count(); ++k) {
    csv.row({std::to_string(k + 1), detail::fixed(s.time_s(k), 1), detail::fixed(crlb[k].position_rms, 3)});
  }
  csv.close();
  log << "final position bound " << detail::fixed(crlb.back().position_rms, 1) << " m\n";
  return kExitOk;
}

/// Loads the configuration and runs one command, mapping failures to exit
/// codes: 2 for configuration problems, 1 for anything raised while running.
inline int execute(std::string_view command, const std::optional<std::string>& config_path,
                   const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
  Config c;
  try {
    c = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (command == "run") return cmd_run(c, out);
    if (command == "table1") return cmd_table1(c, out);
    if (command == "crlb") return cmd_crlb(c, out);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace possq::cli
