#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topoqst/analysis.hpp"
#include "topoqst/lattice.hpp"

namespace topo {

struct CircularStats {
  double mean_direction = 0.0;   ///< arg of the resultant; 0 when the resultant vanishes
  double resultant_length = 0.0; ///< |sum exp(i gamma)| / K in [0, 1]
  double circular_std = 0.0;     ///< sqrt(-2 ln R); +infinity when R = 0
};

/// Throws ConfigError on an empty list.
CircularStats circular_stats(std::span<const double> phases);

struct EnsembleSpec {
  ChainModel model;
  std::vector<double> strengths;   ///< non-negative, strictly increasing
  std::size_t realizations = 200;  ///< R per strength
  std::uint64_t master_seed = 0;
  EvolutionConfig evolution;
  /// Compare h with h/2 per realization and halve until converged.
  bool verify_convergence = true;
  double z4_tolerance = kDefaultZ4Tolerance;

  /// Throws ConfigError.
  void validate() const;
};

/// Spec at the model's transfer time with the default step.
EnsembleSpec make_ensemble_spec(const ChainModel& model, std::vector<double> strengths,
                                std::size_t realizations, std::uint64_t master_seed);

struct TransferRecord {
  double delta = 0.0;
  std::size_t delta_index = 0;
  std::size_t k = 0;  ///< 1-based realization index
  std::uint64_t sub_seed = 0;
  Complex amplitude;
  double magnitude = 0.0;
  double phase = 0.0;  ///< (-pi, pi]
  double fidelity = 0.0;
  double step_size = 0.0;
  double convergence_delta = 0.0;  ///< |A_h - A_{h/2}|, 0 when not checked
  bool converged = true;
  double max_norm_drift = 0.0;
  bool failed = false;
  std::string failure;
};

struct StrengthSummary {
  double delta = 0.0;
  std::size_t realizations = 0;
  std::size_t failures = 0;
  double mean_abs = 0.0;
  double min_abs = 0.0;
  double max_abs = 0.0;
  CircularStats phase;
  /// Indexed by Z4Class; together with `unclassified` and `failures` sums to R.
  std::array<std::size_t, 4> class_counts{};
  std::size_t unclassified = 0;
  double expected_phase = 0.0;
  /// Successful records within the z4 tolerance of expected_phase, and their share.
  std::size_t expected_count = 0;
  double fraction_expected = 0.0;
  std::size_t unconverged = 0;
  double max_convergence_delta = 0.0;
  double max_norm_drift = 0.0;
};

struct EnsembleSummary {
  std::vector<StrengthSummary> per_strength;
};

struct EnsembleResult {
  std::vector<TransferRecord> records;  ///< (delta ascending, k ascending)
  EnsembleSummary summary;
};

/// One transfer per (strength, realization) with disorder drawn from
/// split_seed(master_seed, delta_index, k). Realizations run on up to
/// `threads` workers; output is identical for any thread count. A numerical
/// failure marks its record and the run continues.
EnsembleResult run_ensemble(const EnsembleSpec& spec, unsigned threads = 1);

/// Aggregates records of a single strength. Failed records count only as failures.
StrengthSummary summarize(double delta, std::span<const TransferRecord> records, int n_sites,
                          double z4_tolerance);

/// Smallest grid strength at which some record is unclassified or lands off
/// the expected phase; negative if none.
double critical_disorder(const EnsembleSummary& summary);

/// Runs `count` independent jobs on up to `threads` workers. job(i) must only
/// write to slot i of its own output.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

}  // namespace topo
