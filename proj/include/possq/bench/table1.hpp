#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "possq/bench/runner.hpp"
#include "possq/bench/scenario.hpp"

namespace possq::bench {

struct Table1Config {
  ScenarioParams scenario;
  std::vector<std::size_t> particle_counts{2000, 5000};
  /// Student-t degrees of freedom; inf selects Gaussian noise.
  std::vector<double> nus{3.0, 5.0, 8.0, std::numeric_limits<double>::infinity()};
  std::vector<FilterKind> filters{FilterKind::Standard, FilterKind::Possibility};
  std::size_t runs = 200;
  std::uint64_t base_seed = 1;
  unsigned parallelism = 1;
};

struct Table1Cell {
  FilterKind filter = FilterKind::Standard;
  std::size_t particles = 0;
  double nu = 0.0;
  std::size_t runs = 0;
  std::size_t divergent = 0;
  double divergent_pct = 0.0;
  Interval wilson_pct;
};

/// Noise model for one table column at the scenario's noise scale.
inline NoiseModel table1_noise(double sigma, double nu) {
  return std::isinf(nu) ? NoiseModel::gaussian(sigma) : NoiseModel::student_t(sigma, nu);
}

/// Divergence grid, filter-major then N then nu. Every cell reuses the same
/// seeds, so cells in one column share truth and measurements.
inline std::vector<Table1Cell> table1_experiment(const Table1Config& cfg) {
  if (cfg.runs == 0) throw InvalidArgument("runs must be at least 1");
  std::vector<Table1Cell> cells;
  for (FilterKind kind : cfg.filters) {
    for (std::size_t n : cfg.particle_counts) {
      for (double nu : cfg.nus) {
        ScenarioParams p = cfg.scenario;
        p.true_noise = table1_noise(cfg.scenario.true_noise.sigma, nu);
        const Scenario s = build_canonical_scenario(p);
        const BatchResult b = run_batch(s, kind, n, cfg.runs, cfg.base_seed, cfg.parallelism);
        Table1Cell c;
        c.filter = kind;
        c.particles = n;
        c.nu = nu;
        c.runs = b.runs.size();
        c.divergent = b.divergent_runs;
        c.divergent_pct = b.divergence_pct();
        c.wilson_pct = b.divergence_wilson_pct();
        cells.push_back(c);
      }
    }
  }
  return cells;
}

}  // namespace possq::bench
