#include "topoqst/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "topoqst/errors.hpp"

namespace topo {
namespace {

constexpr double kNormTolerance = 1e-10;

double squared_norm(std::span<const Complex> v) noexcept {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

}  // namespace

StateVector::StateVector(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() < 2) throw ValidationError("state vector needs at least 2 sites");
  const double n = std::sqrt(squared_norm(amps_));
  if (!std::isfinite(n) || std::abs(n - 1.0) > kNormTolerance) {
    throw ValidationError("state vector is not normalized (norm " + std::to_string(n) + ")");
  }
}

StateVector StateVector::localized(int n_sites, int site) {
  if (n_sites < 2) throw ValidationError("state vector needs at least 2 sites");
  if (site < 1 || site > n_sites) {
    throw ValidationError("site " + std::to_string(site) + " outside 1.." + std::to_string(n_sites));
  }
  std::vector<Complex> v(static_cast<std::size_t>(n_sites));
  v[static_cast<std::size_t>(site - 1)] = 1.0;
  return StateVector(std::move(v), Unchecked{});
}

double StateVector::norm() const noexcept { return std::sqrt(squared_norm(amps_)); }

std::vector<double> StateVector::populations() const {
  std::vector<double> p(amps_.size());
  std::transform(amps_.begin(), amps_.end(), p.begin(), [](Complex z) { return std::norm(z); });
  return p;
}

void EvolutionConfig::validate() const {
  if (!(std::isfinite(total_time) && total_time > 0.0)) {
    throw ConfigError("total time must be finite and positive");
  }
  if (!(std::isfinite(step_size) && step_size > 0.0)) {
    throw ConfigError("step size must be finite and positive");
  }
  if (!(convergence_tol > 0.0)) throw ConfigError("convergence tolerance must be positive");
  if (max_halvings < 0) throw ConfigError("max_halvings must be non-negative");
}

std::size_t EvolutionConfig::steps() const {
  validate();
  const double ratio = total_time / step_size;
  // Guard against ratio landing a rounding error above an integer.
  const double nearest = std::round(ratio);
  const double n = (std::abs(ratio - nearest) < 1e-9 * std::max(1.0, ratio)) ? nearest : std::ceil(ratio);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

double EvolutionConfig::effective_step() const {
  return total_time / static_cast<double>(steps());
}

EvolutionConfig default_config(const ChainModel& model) {
  EvolutionConfig cfg;
  cfg.total_time = model.total_time();
  return cfg;
}

InstantaneousHamiltonian assemble_hamiltonian(const ChainModel& model,
                                              const DisorderRealization& disorder, double t) {
  if (disorder.offsets.size() != model.n_bonds()) {
    throw ConfigError("disorder has " + std::to_string(disorder.offsets.size()) +
                      " bond offsets, model has " + std::to_string(model.n_bonds()) + " bonds");
  }
  Couplings c = model.couplings_at(t);
  for (std::size_t b = 0; b < c.bonds.size(); ++b) c.bonds[b] += disorder.offsets[b];
  return InstantaneousHamiltonian{std::move(c.bonds), std::move(c.onsite)};
}

std::vector<double> instantaneous_spectrum(const ChainModel& model,
                                           const DisorderRealization& disorder, double t) {
  const auto h = assemble_hamiltonian(model, disorder, t);
  return tridiagonal_eigenvalues(h.onsite, h.bonds);
}

void Propagator::step(const InstantaneousHamiltonian& h, double dt, StateVector& psi) {
  step(h.onsite, h.bonds, dt, psi.amps_);
}

void Propagator::step(std::span<const double> onsite, std::span<const double> bonds, double dt,
                      StateVector& psi) {
  step(onsite, bonds, dt, std::span<Complex>(psi.amps_));
}

void Propagator::step(std::span<const double> onsite, std::span<const double> bonds, double dt,
                      std::span<Complex> psi) {
  const std::size_t n = psi.size();
  if (onsite.size() != n) throw ConfigError("Hamiltonian and state sizes differ");
  tridiagonal_eigensystem(onsite, bonds, eig_);
  coeff_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = &eig_.vectors[j * n];
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      re += row[k] * psi[k].real();
      im += row[k] * psi[k].imag();
    }
    const double phase = -eig_.values[j] * dt;
    coeff_[j] = Complex(re, im) * Complex(std::cos(phase), std::sin(phase));
  }
  std::fill(psi.begin(), psi.end(), Complex(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = &eig_.vectors[j * n];
    const Complex c = coeff_[j];
    for (std::size_t k = 0; k < n; ++k) psi[k] += row[k] * c;
  }
}

EvolutionResult evolve(const ChainModel& model, const DisorderRealization& disorder,
                       const StateVector& initial, const EvolutionConfig& cfg,
                       std::span<const double> sample_times) {
  cfg.validate();
  if (initial.size() != static_cast<std::size_t>(model.n_sites())) {
    throw ValidationError("initial state has " + std::to_string(initial.size()) +
                          " sites, model has " + std::to_string(model.n_sites()));
  }
  if (disorder.offsets.size() != model.n_bonds()) {
    throw ConfigError("disorder has " + std::to_string(disorder.offsets.size()) +
                      " bond offsets, model has " + std::to_string(model.n_bonds()) + " bonds");
  }

  const std::size_t steps = cfg.steps();
  const double dt = cfg.effective_step();

  // Requested sample -> step boundary index, processed in ascending order.
  std::vector<std::pair<std::size_t, std::size_t>> wanted;  // (step index, request slot)
  wanted.reserve(sample_times.size());
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double k = std::round(std::clamp(sample_times[i], 0.0, cfg.total_time) / dt);
    wanted.emplace_back(std::min(steps, static_cast<std::size_t>(k)), i);
  }
  std::sort(wanted.begin(), wanted.end());

  EvolutionResult result{initial, {}, 0.0, steps, dt};
  result.trace.resize(sample_times.size());
  auto& psi = result.final_state;
  std::size_t next = 0;
  auto record = [&](std::size_t k) {
    while (next < wanted.size() && wanted[next].first == k) {
      result.trace[wanted[next].second] =
          PopulationSample{static_cast<double>(k) * dt, psi.populations()};
      ++next;
    }
  };
  record(0);

  Propagator prop;
  Couplings c;
  // Static schedules are assembled once.
  const bool fixed = model.is_static();
  auto assemble = [&](double t) {
    model.couplings_at(t, c);
    for (std::size_t b = 0; b < c.bonds.size(); ++b) c.bonds[b] += disorder.offsets[b];
  };
  if (fixed) assemble(0.0);

  for (std::size_t k = 0; k < steps; ++k) {
    if (!fixed || k == 0) {
      if (!fixed) assemble((static_cast<double>(k) + 0.5) * dt);
      const auto finite = [](double x) { return std::isfinite(x); };
      if (!std::all_of(c.bonds.begin(), c.bonds.end(), finite) ||
          !std::all_of(c.onsite.begin(), c.onsite.end(), finite)) {
        throw NumericalError("non-finite Hamiltonian entries", k + 1);
      }
    }
    try {
      prop.step(c.onsite, c.bonds, dt, psi);
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), k + 1);
    }
    const double norm = psi.norm();
    if (!std::isfinite(norm)) throw NumericalError("non-finite amplitudes", k + 1);
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(norm - 1.0));
    record(k + 1);
  }
  return result;
}

Complex transition_amplitude(const StateVector& final_state) {
  return final_state.amplitudes().back();
}

double principal_arg(Complex z) noexcept {
  const double a = std::arg(z);
  // std::arg returns [-pi, pi]; -pi maps onto pi.
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

double wrap_angle(double a) noexcept {
  return principal_arg(Complex(std::cos(a), std::sin(a)));
}

double circular_distance(double a, double b) noexcept { return std::abs(wrap_angle(a - b)); }

Complex transfer_amplitude(const ChainModel& model, const DisorderRealization& disorder,
                           const EvolutionConfig& cfg, double* max_norm_drift) {
  const auto [sender, receiver] = sender_receiver(model);
  (void)receiver;
  const auto r = evolve(model, disorder, StateVector::localized(model.n_sites(), sender), cfg);
  if (max_norm_drift) *max_norm_drift = r.max_norm_drift;
  return transition_amplitude(r.final_state);
}

ConvergenceReport convergence_check(const ChainModel& model, const DisorderRealization& disorder,
                                    const StateVector& initial, const EvolutionConfig& cfg) {
  EvolutionConfig half = cfg;
  half.step_size = cfg.step_size / 2.0;
  const Complex a = transition_amplitude(evolve(model, disorder, initial, cfg).final_state);
  const Complex b = transition_amplitude(evolve(model, disorder, initial, half).final_state);
  return ConvergenceReport{a, b, std::abs(a - b)};
}

ConvergedTransfer converged_transfer(const ChainModel& model, const DisorderRealization& disorder,
                                     const EvolutionConfig& cfg) {
  cfg.validate();
  ConvergedTransfer out;
  EvolutionConfig run = cfg;
  double drift = 0.0;
  Complex coarse = transfer_amplitude(model, disorder, run, &drift);
  out.max_norm_drift = drift;
  for (int halvings = 0;; ++halvings) {
    EvolutionConfig fine = run;
    fine.step_size = run.step_size / 2.0;
    const Complex refined = transfer_amplitude(model, disorder, fine, &drift);
    out.max_norm_drift = std::max(out.max_norm_drift, drift);
    out.amplitude = refined;
    out.step_size = run.step_size;
    out.delta = std::abs(refined - coarse);
    out.halvings = halvings;
    if (out.delta <= cfg.convergence_tol) {
      out.converged = true;
      return out;
    }
    if (halvings >= cfg.max_halvings) return out;
    run = fine;
    coarse = refined;
  }
}

}  // namespace topo
