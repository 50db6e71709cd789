#include "topoqst/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <mutex>
#include <thread>

#include "topoqst/errors.hpp"

namespace topo {

CircularStats circular_stats(std::span<const double> phases) {
  if (phases.empty()) throw ConfigError("circular statistics need at least one phase");
  double c = 0.0, s = 0.0;
  for (double g : phases) {
    c += std::cos(g);
    s += std::sin(g);
  }
  const double k = static_cast<double>(phases.size());
  CircularStats out;
  out.resultant_length = std::min(1.0, std::hypot(c, s) / k);
  // Below this the direction is rounding noise.
  if (out.resultant_length < 1e-12) {
    out.resultant_length = 0.0;
    out.mean_direction = 0.0;
    out.circular_std = std::numeric_limits<double>::infinity();
    return out;
  }
  out.mean_direction = principal_arg(Complex(c, s));
  out.circular_std = std::sqrt(std::max(0.0, -2.0 * std::log(out.resultant_length)));
  return out;
}

void EnsembleSpec::validate() const {
  if (realizations < 1) throw ConfigError("realizations per strength must be at least 1");
  if (strengths.empty()) throw ConfigError("at least one disorder strength is required");
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (!(std::isfinite(strengths[i]) && strengths[i] >= 0.0)) {
      throw ConfigError("disorder strengths must be finite and non-negative");
    }
    if (i > 0 && !(strengths[i] > strengths[i - 1])) {
      throw ConfigError("disorder strengths must be strictly increasing");
    }
  }
  evolution.validate();
  if (!(z4_tolerance > 0.0 && z4_tolerance < std::numbers::pi / 4)) {
    throw ConfigError("z4 tolerance must lie in (0, pi/4)");
  }
}

EnsembleSpec make_ensemble_spec(const ChainModel& model, std::vector<double> strengths,
                                std::size_t realizations, std::uint64_t master_seed) {
  return EnsembleSpec{model, std::move(strengths), realizations, master_seed, default_config(model)};
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

void run_one(const EnsembleSpec& spec, TransferRecord& rec) {
  const auto disorder = sample_disorder(spec.model.n_bonds(), rec.delta, rec.sub_seed);
  try {
    if (spec.verify_convergence) {
      const auto t = converged_transfer(spec.model, disorder, spec.evolution);
      rec.amplitude = t.amplitude;
      rec.step_size = t.step_size;
      rec.convergence_delta = t.delta;
      rec.converged = t.converged;
      rec.max_norm_drift = t.max_norm_drift;
    } else {
      rec.amplitude = transfer_amplitude(spec.model, disorder, spec.evolution, &rec.max_norm_drift);
      rec.step_size = spec.evolution.step_size;
    }
    rec.magnitude = std::abs(rec.amplitude);
    rec.phase = principal_arg(rec.amplitude);
    rec.fidelity = average_fidelity(rec.amplitude);
  } catch (const NumericalError& e) {
    rec.failed = true;
    rec.failure = e.what();
  } catch (const ValidationError& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
}

}  // namespace

StrengthSummary summarize(double delta, std::span<const TransferRecord> records, int n_sites,
                          double z4_tolerance) {
  StrengthSummary s;
  s.delta = delta;
  s.realizations = records.size();
  s.expected_phase = universal_phase(n_sites);
  s.min_abs = std::numeric_limits<double>::infinity();
  s.max_abs = -std::numeric_limits<double>::infinity();
  std::vector<double> phases;
  phases.reserve(records.size());
  double sum_abs = 0.0;
  for (const auto& r : records) {
    if (r.failed) {
      ++s.failures;
      continue;
    }
    phases.push_back(r.phase);
    sum_abs += r.magnitude;
    s.min_abs = std::min(s.min_abs, r.magnitude);
    s.max_abs = std::max(s.max_abs, r.magnitude);
    if (const auto c = z4_classify(r.phase, z4_tolerance)) {
      ++s.class_counts[static_cast<std::size_t>(*c)];
    } else {
      ++s.unclassified;
    }
    if (circular_distance(r.phase, s.expected_phase) < z4_tolerance) ++s.expected_count;
    if (!r.converged) ++s.unconverged;
    s.max_convergence_delta = std::max(s.max_convergence_delta, r.convergence_delta);
    s.max_norm_drift = std::max(s.max_norm_drift, r.max_norm_drift);
  }
  if (phases.empty()) {
    s.min_abs = s.max_abs = 0.0;
    s.phase = CircularStats{0.0, 0.0, std::numeric_limits<double>::infinity()};
    return s;
  }
  const double n_ok = static_cast<double>(phases.size());
  s.mean_abs = sum_abs / n_ok;
  s.phase = circular_stats(phases);
  s.fraction_expected = static_cast<double>(s.expected_count) / n_ok;
  return s;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec, unsigned threads) {
  spec.validate();
  const std::size_t per = spec.realizations;
  EnsembleResult out;
  out.records.resize(spec.strengths.size() * per);
  for (std::size_t d = 0; d < spec.strengths.size(); ++d) {
    for (std::size_t k = 1; k <= per; ++k) {
      auto& r = out.records[d * per + (k - 1)];
      r.delta = spec.strengths[d];
      r.delta_index = d;
      r.k = k;
      r.sub_seed = split_seed(spec.master_seed, d, k);
    }
  }
  parallel_for(out.records.size(), threads, [&](std::size_t i) { run_one(spec, out.records[i]); });

  for (std::size_t d = 0; d < spec.strengths.size(); ++d) {
    const std::span<const TransferRecord> slice(out.records.data() + d * per, per);
    out.summary.per_strength.push_back(
        summarize(spec.strengths[d], slice, spec.model.n_sites(), spec.z4_tolerance));
  }
  return out;
}

double critical_disorder(const EnsembleSummary& summary) {
  for (const auto& s : summary.per_strength) {
    const std::size_t ok = s.realizations - s.failures;
    if (s.unclassified > 0 || s.expected_count < ok) return s.delta;
  }
  return -1.0;
}

}  // namespace topo
