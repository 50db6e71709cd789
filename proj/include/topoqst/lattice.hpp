#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "topoqst/disorder.hpp"
#include "topoqst/protocols.hpp"
#include "topoqst/tridiagonal.hpp"

namespace topo {

using Complex = std::complex<double>;

/// Normalized single-excitation amplitudes over N >= 2 sites.
class StateVector {
 public:
  /// Throws ValidationError unless size >= 2 and the norm is 1 within 1e-10.
  explicit StateVector(std::vector<Complex> amplitudes);

  /// Excitation localized on `site` (1-based).
  static StateVector localized(int n_sites, int site);

  std::size_t size() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  /// 1-based site access.
  Complex at_site(int site) const { return amps_.at(static_cast<std::size_t>(site - 1)); }
  double norm() const noexcept;
  std::vector<double> populations() const;

 private:
  friend class Propagator;
  struct Unchecked {};
  StateVector(std::vector<Complex> amplitudes, Unchecked) : amps_(std::move(amplitudes)) {}

  std::vector<Complex> amps_;
};

/// Real symmetric tridiagonal hopping matrix: H[n][n+1] = bonds[n], H[n][n] = onsite[n].
struct InstantaneousHamiltonian {
  std::vector<double> bonds;
  std::vector<double> onsite;

  std::size_t n_sites() const noexcept { return onsite.size(); }
};

struct EvolutionConfig {
  double total_time = 0.0;
  double step_size = 0.05;
  double convergence_tol = 1e-6;
  int max_halvings = 6;

  /// Throws ConfigError on T <= 0 or h <= 0.
  void validate() const;
  /// ceil(T / h), at least 1.
  std::size_t steps() const;
  /// Uniform step actually used so that steps() * dt == T.
  double effective_step() const;
};

/// Evolution settings for a model at its own transfer time.
EvolutionConfig default_config(const ChainModel& model);

/// Clean schedule plus additive bond offsets. Offsets are not clamped.
/// Throws ConfigError if the offset count differs from N - 1.
InstantaneousHamiltonian assemble_hamiltonian(const ChainModel& model,
                                              const DisorderRealization& disorder, double t);

/// Ascending eigenvalues of the instantaneous Hamiltonian.
std::vector<double> instantaneous_spectrum(const ChainModel& model,
                                           const DisorderRealization& disorder, double t);

/// Applies exact exponentials exp(-i H dt) of tridiagonal Hamiltonians via
/// eigen-decomposition. Holds scratch buffers, so use one instance per thread.
class Propagator {
 public:
  /// psi <- exp(-i H dt) psi. Negative dt propagates backwards.
  void step(const InstantaneousHamiltonian& h, double dt, StateVector& psi);
  void step(std::span<const double> onsite, std::span<const double> bonds, double dt,
            StateVector& psi);
  void step(std::span<const double> onsite, std::span<const double> bonds, double dt,
            std::span<Complex> psi);

 private:
  TridiagonalEigensystem eig_;
  std::vector<Complex> coeff_;
};

struct PopulationSample {
  double time = 0.0;
  std::vector<double> populations;
};

struct EvolutionResult {
  StateVector final_state;
  std::vector<PopulationSample> trace;  ///< one entry per requested sample time
  double max_norm_drift = 0.0;          ///< max |norm - 1| over all steps
  std::size_t steps = 0;
  double step_size = 0.0;
};

/// Midpoint piecewise-constant propagation: step k applies
/// exp(-i H(t_k + dt/2) dt) with dt = T / ceil(T/h). Sample times are mapped to
/// the nearest step boundary.
///
/// Throws ValidationError for a non-normalized or mis-sized initial state,
/// NumericalError (carrying the step index) on non-finite amplitudes.
EvolutionResult evolve(const ChainModel& model, const DisorderRealization& disorder,
                       const StateVector& initial, const EvolutionConfig& cfg,
                       std::span<const double> sample_times = {});

/// A = psi_N, the receiver amplitude.
Complex transition_amplitude(const StateVector& final_state);

/// Principal argument in (-pi, pi].
double principal_arg(Complex z) noexcept;
/// Wraps an angle into (-pi, pi].
double wrap_angle(double a) noexcept;
/// |arg(exp(i (a - b)))|, in [0, pi].
double circular_distance(double a, double b) noexcept;

struct ConvergenceReport {
  Complex amplitude_h;
  Complex amplitude_half;
  double delta = 0.0;
};

/// Runs `evolve` from the sender at h and h/2 and reports |A_h - A_{h/2}|.
ConvergenceReport convergence_check(const ChainModel& model, const DisorderRealization& disorder,
                                    const StateVector& initial, const EvolutionConfig& cfg);

struct ConvergedTransfer {
  Complex amplitude;      ///< from the finer of the two compared runs
  double step_size = 0.0; ///< the h whose halving met the tolerance
  double delta = 0.0;
  double max_norm_drift = 0.0;
  int halvings = 0;
  bool converged = false;
};

/// Sender-to-receiver transfer with automatic step halving: compare h with
/// h/2 and halve h until |A_h - A_{h/2}| <= tol or max_halvings is reached.
ConvergedTransfer converged_transfer(const ChainModel& model, const DisorderRealization& disorder,
                                     const EvolutionConfig& cfg);

/// Single sender-to-receiver run at the configured step (no convergence loop).
Complex transfer_amplitude(const ChainModel& model, const DisorderRealization& disorder,
                           const EvolutionConfig& cfg, double* max_norm_drift = nullptr);

}  // namespace topo
