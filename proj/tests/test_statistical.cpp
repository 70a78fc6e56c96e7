#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "possq/possq.hpp"

using namespace possq;
using namespace possq::bench;

// Heavier tails must not give significantly fewer divergent runs: for each
// pair of neighbouring nu values the one-sided test of "more divergence at
// the larger nu" stays below the 95% critical value.
TEST(Divergence, NonIncreasingInNu) {
  const std::vector<double> nus{3.0, 5.0, 8.0, std::numeric_limits<double>::infinity()};
  const std::size_t runs = 200;
  for (auto kind : {FilterKind::Standard, FilterKind::Possibility}) {
    std::vector<std::size_t> divergent;
    for (double nu : nus) {
      ScenarioParams p;
      p.true_noise = table1_noise(p.true_noise.sigma, nu);
      divergent.push_back(run_batch(build_canonical_scenario(p), kind, 2000, runs, 1).divergent_runs);
    }
    for (std::size_t i = 0; i + 1 < nus.size(); ++i) {
      EXPECT_LT(two_proportion_z(divergent[i + 1], runs, divergent[i], runs), 1.6448536269514722)
          << to_string(kind) << " nu " << nus[i] << " -> " << nus[i + 1] << ": " << divergent[i] << " vs "
          << divergent[i + 1];
    }
  }
}
