#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "possq/core/random.hpp"
#include "possq/filters/possibility_pf.hpp"
#include "possq/filters/standard_pf.hpp"
#include "possq/filters/transition.hpp"
#include "possq/tma/models.hpp"
#include "support/oracles.hpp"

using namespace possq;
using V1 = Eigen::Matrix<double, 1, 1>;

namespace {

auto identity_transition(double q) {
  return make_additive_transition<1>([](const V1& v) { return v; }, GaussianPossibility<1>(V1::Zero(), V1::Constant(q)));
}

double max_of(const std::vector<double>& w) { return *std::max_element(w.begin(), w.end()); }

}  // namespace

TEST(PossibilityInit, SingleParticle) {
  auto rng = make_stream(1, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
  const auto ps = possibility_pf_init(prior, 1, rng);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps.weights[0], 1.0);
}

TEST(PossibilityInit, WeightsAndMean) {
  auto rng = make_stream(2, 1);
  Eigen::Vector2d z1_obs_vel(2.5, 0.0);
  const auto prior = tma::init_prior(0.0, z1_obs_vel, tma::PriorParams{});
  const std::size_t n = 10000;
  const auto ps = possibility_pf_init(prior, n, rng);
  EXPECT_EQ(max_of(ps.weights), 1.0);
  for (double w : ps.weights) {
    EXPECT_GT(w, 0.0);
    EXPECT_LE(w, 1.0);
  }
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  for (const auto& s : ps.states) mean += s;
  mean /= n;
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (const auto& s : ps.states) var += (s - mean).cwiseAbs2();
  var /= n - 1;
  for (int i : {tma::kX, tma::kY}) EXPECT_LT(std::abs(mean[i] - prior.mean()[i]), 3.0 * std::sqrt(var[i] / n));
}

TEST(PossibilityInit, RejectsConcentratedPrior) {
  auto rng = make_stream(3, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(0.01));
  EXPECT_THROW(possibility_pf_init(prior, 10, rng), TooConcentrated);
}

TEST(PossibilityStep, InvariantsOnToy) {
  auto rng = make_stream(4, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
  auto ps = possibility_pf_init(prior, 500, rng);
  const auto tr = identity_transition(1.0);
  auto loglik = [](const V1& x, double z) { return -0.5 * (z - x[0]) * (z - x[0]); };
  for (int k = 1; k <= 10; ++k) {
    const double z = 0.3 * k;
    auto step = possibility_pf_step(ps, tr, loglik, z, rng, k);
    EXPECT_EQ(step.particles.size(), 500u);
    EXPECT_EQ(max_of(step.particles.weights), 1.0);
    EXPECT_EQ(step.record.scan, k);
    // MAP membership: the estimate is the predicted particle at j_max
    EXPECT_EQ(step.record.estimate, step.predicted[step.record.particle_index]);
    EXPECT_EQ(step.predicted_weights[step.record.particle_index], 1.0);
    EXPECT_LE(step.record.peak_weight, 1.0);
    // lowest index among ties
    for (std::size_t j = 0; j < step.record.particle_index; ++j) EXPECT_LT(step.predicted_weights[j], 1.0);
    // resampling support
    for (std::size_t a : step.ancestors) EXPECT_GT(step.predicted_weights[a], 0.0);
    ps = std::move(step.particles);
  }
}

TEST(PossibilityStep, SingleParticleKeepsUnitWeight) {
  auto rng = make_stream(5, 1);
  ParticleSet<1> ps;
  ps.states = {V1::Constant(3.0)};
  ps.weights = {1.0};
  const auto tr = identity_transition(2.0);
  auto loglik = [](const V1& x, double z) { return -0.5 * (z - x[0]) * (z - x[0]) / 0.25; };
  for (int k = 0; k < 20; ++k) {
    auto step = possibility_pf_step(ps, tr, loglik, 1.0, rng, k);
    EXPECT_EQ(step.particles.weights[0], 1.0);
    EXPECT_EQ(step.record.estimate, step.particles.states[0]);
    ps = std::move(step.particles);
  }
}

TEST(PossibilityStep, NearNoiseFreePropagationTracksMean) {
  // The smallest admissible transition spread (unit mass) is negligible
  // against a long drift, so the MAP follows F x - U.
  const double q = 1.0 / (2.0 * std::numbers::pi);
  Eigen::Matrix2d f;
  f << 1, 1000, 0, 1;
  const Eigen::Vector2d u(50, 0);
  Eigen::Matrix2d qm = Eigen::Matrix2d::Identity() * q;
  auto tr = make_additive_transition<2>([f, u](const Eigen::Vector2d& x) { Eigen::Vector2d m = f * x - u; return m; },
                                        GaussianPossibility<2>(Eigen::Vector2d::Zero(), qm * 2.0));
  auto rng = make_stream(6, 1);
  ParticleSet<2> ps;
  ps.states = {Eigen::Vector2d(0, 1e4)};
  ps.weights = {1.0};
  Eigen::Vector2d expected(0, 1e4);
  auto flat = [](const Eigen::Vector2d&, int) { return 0.0; };
  for (int k = 0; k < 5; ++k) {
    auto step = possibility_pf_step(ps, tr, flat, 0, rng, k);
    expected = f * expected - u;
    const double rel = (step.record.estimate - expected).norm() / expected.norm();
    EXPECT_LT(rel, 1e-3);
    ps = std::move(step.particles);
  }
}

TEST(PossibilityStep, NonAdditiveTransitionPath) {
  // A callable without noise() goes through per-particle water pouring.
  auto heteroscedastic = [](const V1& x) { return GaussianPossibility<1>(x, V1::Constant(1.0 + 0.1 * x[0] * x[0])); };
  auto loglik = [](const V1& x, double z) { return -0.5 * (z - x[0]) * (z - x[0]); };
  auto rng = make_stream(7, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
  auto ps = possibility_pf_init(prior, 200, rng);
  for (int k = 0; k < 5; ++k) {
    auto step = possibility_pf_step(ps, heteroscedastic, loglik, 0.5, rng, k);
    EXPECT_EQ(max_of(step.particles.weights), 1.0);
    ps = std::move(step.particles);
  }
}

TEST(PossibilityStep, CollapseRaisesAllWeightsZero) {
  auto rng = make_stream(8, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
  auto ps = possibility_pf_init(prior, 50, rng);
  auto impossible = [](const V1&, double) { return -std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(possibility_pf_step(ps, identity_transition(1.0), impossible, 0.0, rng), AllWeightsZero);
}

TEST(PossibilityStep, Deterministic) {
  auto run = [] {
    auto rng = make_stream(42, 1);
    GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
    auto ps = possibility_pf_init(prior, 300, rng);
    std::vector<double> track;
    auto loglik = [](const V1& x, double z) { return -0.5 * (z - x[0]) * (z - x[0]); };
    for (int k = 0; k < 8; ++k) {
      auto step = possibility_pf_step(ps, identity_transition(1.0), loglik, 0.1 * k, rng, k);
      track.push_back(step.record.estimate[0]);
      ps = std::move(step.particles);
    }
    return track;
  };
  EXPECT_EQ(run(), run());
}

TEST(StandardStep, WeightsSumToOneAndSingleParticle) {
  auto rng = make_stream(9, 1);
  GaussianPossibility<1> prior(V1::Zero(), V1::Constant(4.0));
  auto ps = standard_pf_init(prior, 400, rng);
  auto loglik = [](const V1& x, double z) { return -0.5 * (z - x[0]) * (z - x[0]); };
  for (int k = 0; k < 5; ++k) {
    auto step = standard_pf_step(ps, identity_transition(1.0), loglik, 0.2 * k, rng, k);
    EXPECT_NEAR(std::accumulate(step.particles.weights.begin(), step.particles.weights.end(), 0.0), 1.0, 1e-12);
    ps = std::move(step.particles);
  }

  ParticleSet<1> one;
  one.states = {V1::Constant(2.0)};
  one.weights = {1.0};
  auto step = standard_pf_step(one, identity_transition(1.0), loglik, 0.0, rng, 0);
  EXPECT_EQ(step.record.estimate, step.particles.states[0]);
}

TEST(StandardStep, SystematicResampleCounts) {
  auto rng = make_stream(10, 1);
  const std::vector<double> w{0.5, 0.25, 0.125, 0.125};
  const auto idx = systematic_resample(w, rng);
  std::vector<int> counts(4, 0);
  for (auto i : idx) ++counts[i];
  EXPECT_EQ(counts[0], 2);
  EXPECT_EQ(counts[1], 1);
  for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(counts[j] - 4.0 * w[j]), 1.0);
}

TEST(KalmanOracle, StandardFilterMatchesKalman) {
  const oracle::ToyProblem toy;
  const auto s = oracle::summarize_toy(toy, oracle::ToyFilter::Standard, 10000, 20, 500);
  for (int k = 0; k < toy.steps; ++k) {
    EXPECT_LE(std::abs(s.mean_error[k]), s.tolerance[k]) << "step " << k + 1;
  }
}

TEST(KalmanOracle, PossibilityMapErrorDoesNotGrowWithSampleDensity) {
  // Mean absolute MAP error over 50 seeds at n and 2n: the 2n interval
  // does not sit above the n interval.
  const oracle::ToyProblem toy;
  auto stats = [&](std::size_t n) {
    std::vector<double> e;
    for (int i = 0; i < 50; ++i) {
      const auto t = oracle::run_toy(toy, oracle::ToyFilter::Possibility, n, 700 + i);
      double s = 0.0;
      for (int k = 0; k < toy.steps; ++k) s += std::abs(t.estimate[k] - t.kalman_mean[k]);
      e.push_back(s / toy.steps);
    }
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
    double var = 0.0;
    for (double x : e) var += (x - mean) * (x - mean);
    var /= e.size() - 1;
    const double half = 1.96 * std::sqrt(var / e.size());
    return std::pair{mean - half, mean + half};
  };
  const auto a = stats(1000);
  const auto b = stats(2000);
  EXPECT_LE(b.first, a.second) << "n: [" << a.first << ", " << a.second << "] 2n: [" << b.first << ", " << b.second << "]";
}
