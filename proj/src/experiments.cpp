#include "topoqst/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topoqst/errors.hpp"

namespace topo {
namespace {

double clean_probability(const ChainModel& prototype, double total_time, const EvolutionConfig& cfg) {
  const auto model = prototype.with_total_time(total_time);
  EvolutionConfig run = cfg;
  run.total_time = total_time;
  const auto t = converged_transfer(model, DisorderRealization::clean(model.n_bonds()), run);
  return std::norm(t.amplitude);
}

}  // namespace

std::pair<double, double> parabolic_vertex(double x0, double step, double y_left, double y_mid,
                                           double y_right) {
  const double x_mid = x0 + step;
  const double slope = (y_right - y_left) / (2.0 * step);
  const double curv = (y_right - 2.0 * y_mid + y_left) / (2.0 * step * step);
  if (!(curv < 0.0)) return {x_mid, y_mid};
  const double dx = std::clamp(-slope / (2.0 * curv), -step, step);
  return {x_mid + dx, y_mid + slope * dx + curv * dx * dx};
}

PeriodSweep critical_period_sweep(const ChainModel& prototype, const SweepRange& range,
                                  const EvolutionConfig& cfg, unsigned threads) {
  if (!(range.t_min > 0.0) || !(range.t_step > 0.0) || !(range.t_max >= range.t_min) ||
      !std::isfinite(range.t_max)) {
    throw ConfigError("period sweep needs 0 < t_min <= t_max and t_step > 0");
  }
  const auto count =
      static_cast<std::size_t>(std::floor((range.t_max - range.t_min) / range.t_step + 1e-9)) + 1;
  PeriodSweep out;
  out.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const double T = range.t_min + static_cast<double>(i) * range.t_step;
    out.samples[i] = PeriodSample{T, clean_probability(prototype, T, cfg)};
  });

  for (std::size_t i = 1; i + 1 < count; ++i) {
    const double l = out.samples[i - 1].probability;
    const double m = out.samples[i].probability;
    const double r = out.samples[i + 1].probability;
    if (m > l && m >= r) {
      const auto [x, y] = parabolic_vertex(out.samples[i - 1].total_time, range.t_step, l, m, r);
      out.peaks.push_back(PeriodPeak{i, x, y, 0.0});
    }
  }
  parallel_for(out.peaks.size(), threads, [&](std::size_t j) {
    out.peaks[j].simulated_probability = clean_probability(prototype, out.peaks[j].total_time, cfg);
  });
  return out;
}

std::vector<BandRow> band_table(const ChainModel& model, std::size_t samples) {
  if (samples < 2) throw ConfigError("band table needs at least 2 time samples");
  const auto clean = DisorderRealization::clean(model.n_bonds());
  std::vector<BandRow> rows(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = model.total_time() * static_cast<double>(k) / static_cast<double>(samples - 1);
    rows[k] = BandRow{t, instantaneous_spectrum(model, clean, t)};
  }
  return rows;
}

double band_flatness(const ChainModel& model, std::size_t samples) {
  const auto rows = band_table(model, samples);
  double worst = 0.0;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.energies.size(); ++i) {
      worst = std::max(worst, std::abs(row.energies[i] - rows.front().energies[i]));
    }
  }
  return worst;
}

std::vector<ComparisonRow> compare_summaries(const EnsembleSummary& a, const EnsembleSummary& b) {
  if (a.per_strength.size() != b.per_strength.size()) {
    throw ConfigError("disorder grids differ in length");
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(a.per_strength.size());
  for (std::size_t i = 0; i < a.per_strength.size(); ++i) {
    const auto& sa = a.per_strength[i];
    const auto& sb = b.per_strength[i];
    if (sa.delta != sb.delta) {
      throw ConfigError("disorder grids differ at index " + std::to_string(i));
    }
    rows.push_back(ComparisonRow{sa.delta, sa.mean_abs, sb.mean_abs, sa.mean_abs - sb.mean_abs});
  }
  return rows;
}

std::vector<ComparisonRow> compare_protocols(const EnsembleSpec& a, const EnsembleSpec& b,
                                             unsigned threads) {
  if (a.strengths != b.strengths) throw ConfigError("disorder grids differ");
  return compare_summaries(run_ensemble(a, threads).summary, run_ensemble(b, threads).summary);
}

}  // namespace topo
