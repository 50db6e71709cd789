#pragma once

#include <cstddef>
#include <vector>

#include "topoqst/ensemble.hpp"

namespace topo {

struct PeriodSample {
  double total_time = 0.0;
  double probability = 0.0;  ///< |A(T)|^2 of the clean run
};

struct PeriodPeak {
  std::size_t index = 0;           ///< sample index of the bracketed maximum
  double total_time = 0.0;         ///< vertex of the three-point parabola
  double probability = 0.0;        ///< parabola value at the vertex
  double simulated_probability = 0.0;  ///< clean run re-evaluated at the vertex
};

struct PeriodSweep {
  std::vector<PeriodSample> samples;
  std::vector<PeriodPeak> peaks;
};

struct SweepRange {
  double t_min = 30.0;
  double t_max = 80.0;
  double t_step = 1.0;
};

/// Clean transfer probability of `prototype` retimed to every T in the range
/// (t_min + i t_step <= t_max), with interior local maxima refined by parabolic
/// interpolation. The evolution step and tolerance come from `cfg`; its
/// total_time is ignored. Throws ConfigError on an empty or inverted range.
PeriodSweep critical_period_sweep(const ChainModel& prototype, const SweepRange& range,
                                  const EvolutionConfig& cfg, unsigned threads = 1);

/// Vertex (x, y) of the parabola through three equally spaced samples.
std::pair<double, double> parabolic_vertex(double x0, double step, double y_left, double y_mid,
                                           double y_right);

struct BandRow {
  double time = 0.0;
  std::vector<double> energies;  ///< ascending
};

/// Clean instantaneous spectrum at K equally spaced times t_k = k T/(K-1).
/// Throws ConfigError if K < 2.
std::vector<BandRow> band_table(const ChainModel& model, std::size_t samples);

/// max_k max_i |lambda_i(t_k) - lambda_i(0)| over the band table.
double band_flatness(const ChainModel& model, std::size_t samples);

struct ComparisonRow {
  double delta = 0.0;
  double mean_abs_a = 0.0;
  double mean_abs_b = 0.0;
  double difference = 0.0;  ///< a - b
};

/// Per-strength mean |A| difference of two summaries. Throws ConfigError when
/// the strength grids differ.
std::vector<ComparisonRow> compare_summaries(const EnsembleSummary& a, const EnsembleSummary& b);

/// Runs both ensembles and compares them.
std::vector<ComparisonRow> compare_protocols(const EnsembleSpec& a, const EnsembleSpec& b,
                                             unsigned threads = 1);

}  // namespace topo
