#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "possq/bench/scenario.hpp"
#include "possq/bench/stats.hpp"
#include "possq/core/errors.hpp"
#include "possq/core/random.hpp"
#include "possq/filters/possibility_pf.hpp"
#include "possq/filters/standard_pf.hpp"
#include "possq/tma/models.hpp"

namespace possq::bench {

enum class FilterKind { Standard, Possibility };

inline std::string_view to_string(FilterKind k) { return k == FilterKind::Standard ? "standard" : "possibility"; }

inline std::optional<FilterKind> parse_filter_kind(std::string_view s) {
  if (s == "standard") return FilterKind::Standard;
  if (s == "possibility") return FilterKind::Possibility;
  return std::nullopt;
}

/// Point-estimate convention of each filter: MAP for the possibility PF,
/// weighted mean for the standard PF.
inline std::string_view estimator_name(FilterKind k) { return k == FilterKind::Standard ? "mmse" : "map"; }

/// Random streams derived from a run seed.
enum Stream : std::uint64_t { kMeasurementStream = 0, kFilterStream = 1, kPriorStream = 2, kTruthStream = 3 };

struct RunReport {
  std::uint64_t seed = 0;
  FilterKind filter = FilterKind::Possibility;
  /// Estimated relative position (x, y) per completed scan.
  std::vector<Eigen::Vector2d> estimates;
  std::vector<double> position_errors;
  bool divergent = false;
  /// The filter collapsed (all weights zero) before the last scan.
  bool collapsed = false;

  double final_error() const {
    return collapsed || position_errors.empty() ? std::numeric_limits<double>::infinity() : position_errors.back();
  }
};

/// Divergence rule: final position error strictly larger than the threshold.
inline bool is_divergent(double final_error_m, double threshold_m) { return !(final_error_m <= threshold_m); }

/// Prior range for one run. With jitter enabled the range is drawn from
/// N(range, range_sigma^2), floored at a tenth of the nominal range.
inline double run_prior_range(const ScenarioParams& p, std::uint64_t seed) {
  if (!p.prior_range_jitter) return p.prior.range_m;
  auto rng = make_stream(seed, kPriorStream);
  const double r = p.prior.range_m + p.prior.range_sigma_m * std::normal_distribution<double>(0.0, 1.0)(rng);
  return std::max(r, 0.1 * p.prior.range_m);
}

/// Truth and measurements of one run.
struct Engagement {
  std::vector<State> truth;
  std::vector<double> measurements;
};

inline Engagement make_engagement(const Scenario& s, std::uint64_t seed) {
  Engagement e;
  auto truth_rng = make_stream(seed, kTruthStream);
  e.truth = realize_relative_track(s, truth_rng);
  auto meas_rng = make_stream(seed, kMeasurementStream);
  e.measurements = synthesize_measurements(s, std::span<const State>(e.truth), meas_rng);
  return e;
}

/// Filters one engagement. Both filter kinds see identical truth,
/// measurements and prior for a given seed.
inline RunReport run_single(const Scenario& s, FilterKind kind, std::size_t particles, std::uint64_t seed,
                            const Engagement* engagement = nullptr) {
  RunReport report;
  report.seed = seed;
  report.filter = kind;

  const Engagement local = engagement ? Engagement{} : make_engagement(s, seed);
  const Engagement& eng = engagement ? *engagement : local;
  if (static_cast<int>(eng.truth.size()) != s.scan_count() || eng.measurements.size() != eng.truth.size()) {
    throw DimensionMismatch("engagement length does not match the scenario");
  }
  const auto& z = eng.measurements;
  auto rng = make_stream(seed, kFilterStream);

  tma::PriorParams prior_params = s.params.prior;
  prior_params.range_m = run_prior_range(s.params, seed);
  const auto prior = tma::init_prior(z[0], s.observer_velocity(0), prior_params);
  const tma::BearingLikelihood likelihood{s.params.filter_sigma};

  auto record = [&](int k, const State& estimate) {
    const State& truth = eng.truth[k];
    report.estimates.emplace_back(estimate[tma::kX], estimate[tma::kY]);
    report.position_errors.push_back(std::hypot(estimate[tma::kX] - truth[tma::kX], estimate[tma::kY] - truth[tma::kY]));
  };

  try {
    if (kind == FilterKind::Possibility) {
      auto ps = possibility_pf_init(prior, particles, rng);
      record(0, map_estimate(ps));
      for (int k = 1; k < s.scan_count(); ++k) {
        const tma::CvTransition transition(s.transition, s.input(k), s.process_noise);
        auto step = possibility_pf_step(ps, transition, likelihood, z[k], rng, k);
        record(k, step.record.estimate);
        ps = std::move(step.particles);
      }
    } else {
      auto ps = standard_pf_init(prior, particles, rng);
      record(0, weighted_mean(ps));
      for (int k = 1; k < s.scan_count(); ++k) {
        const tma::CvTransition transition(s.transition, s.input(k), s.process_noise);
        auto step = standard_pf_step(ps, transition, likelihood, z[k], rng, k);
        record(k, step.record.estimate);
        ps = std::move(step.particles);
      }
    }
  } catch (const AllWeightsZero&) {
    report.collapsed = true;
  }
  report.divergent = report.collapsed || is_divergent(report.final_error(), s.params.divergence_threshold_m);
  return report;
}

struct BatchResult {
  FilterKind filter = FilterKind::Possibility;
  std::size_t particles = 0;
  std::uint64_t base_seed = 0;
  std::vector<RunReport> runs;
  /// Per-scan RMS position error over non-divergent runs (NaN if none).
  std::vector<double> rms;
  std::size_t alive_runs = 0;
  std::size_t divergent_runs = 0;

  double divergence_pct() const { return runs.empty() ? 0.0 : 100.0 * divergent_runs / runs.size(); }
  Interval divergence_wilson_pct() const {
    const auto w = wilson_interval(divergent_runs, runs.size());
    return {100.0 * w.lo, 100.0 * w.hi};
  }
};

/// Aggregates run reports in run order.
inline BatchResult aggregate(std::vector<RunReport> runs, FilterKind kind, std::size_t particles,
                             std::uint64_t base_seed, int scan_count) {
  BatchResult out;
  out.filter = kind;
  out.particles = particles;
  out.base_seed = base_seed;
  std::vector<double> sum_sq(scan_count, 0.0);
  for (const auto& r : runs) {
    if (r.divergent) {
      ++out.divergent_runs;
      continue;
    }
    ++out.alive_runs;
    for (int k = 0; k < scan_count; ++k) sum_sq[k] += r.position_errors[k] * r.position_errors[k];
  }
  out.rms.resize(scan_count);
  for (int k = 0; k < scan_count; ++k) {
    out.rms[k] = out.alive_runs ? std::sqrt(sum_sq[k] / out.alive_runs) : std::numeric_limits<double>::quiet_NaN();
  }
  out.runs = std::move(runs);
  return out;
}

/// Runs `runs` independent engagements with seeds base_seed + i on up to
/// `parallelism` threads. Results do not depend on the thread count.
inline BatchResult run_batch(const Scenario& s, FilterKind kind, std::size_t particles, std::size_t runs,
                             std::uint64_t base_seed, unsigned parallelism = 1) {
  if (runs == 0) throw InvalidArgument("runs must be at least 1");
  std::vector<RunReport> reports(runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        reports[i] = run_single(s, kind, particles, base_seed + i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate(std::move(reports), kind, particles, base_seed, s.scan_count());
}

}  // namespace possq::bench
