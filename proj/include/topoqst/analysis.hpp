#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string_view>

#include "topoqst/protocols.hpp"

namespace topo {

/// Closed-form phase law families. Chosen explicitly per protocol, never from N alone.
enum class PhaseFamily { even_ssh, odd_topological };

/// The four phases a chiral chain can accumulate at the receiver.
enum class Z4Class { zero, plus_half_pi, pi, minus_half_pi };

double angle_of(Z4Class c) noexcept;
/// "0", "+pi/2", "pi", "-pi/2".
std::string_view to_string(Z4Class c) noexcept;

/// Average transfer fidelity over the Bloch sphere:
/// F = 1/2 + |A|^2/6 + |A| cos(arg A)/3. Throws ValidationError if |A| > 1 + 1e-10.
double average_fidelity(std::complex<double> amplitude);

/// Receiver phase predicted by the site-number law. Even chains:
/// +pi/2 for N = 0 mod 4, -pi/2 for N = 2 mod 4. Odd chains: 0 for N = 1 mod 4,
/// pi for N = 3 mod 4. Throws ConfigError on a parity mismatch or N < 2.
double expected_phase(int n_sites, PhaseFamily family);

/// Family exercised by a protocol; nullopt for protocols outside both laws
/// (rice_mele, christandl).
std::optional<PhaseFamily> phase_family(ProtocolId id) noexcept;

/// -(N-1) pi/2 reduced to (-pi, pi]: the phase the compensating gate removes.
/// Coincides with expected_phase for either family and also covers the mirror chain.
double universal_phase(int n_sites) noexcept;

/// Compensating single-qubit gate diag(1, exp(i phi0)), phi0 = (N-1) pi/2 reduced to (-pi, pi].
struct PhaseCorrection {
  int n_sites = 0;
  Z4Class phi0_class = Z4Class::zero;
  double phi0 = 0.0;
  std::array<std::complex<double>, 2> diagonal{1.0, 1.0};

  /// Dense 2x2 form, row-major.
  std::array<std::complex<double>, 4> gate() const noexcept {
    return {diagonal[0], 0.0, 0.0, diagonal[1]};
  }
};

/// diag entries are exact ({1, i, -1, -i}); throws ConfigError if N < 2.
PhaseCorrection phase_correction(int n_sites);

/// Qubit state cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>.
struct BlochState {
  double theta = 0.0;  ///< [0, pi]
  double phi = 0.0;    ///< (-pi, pi]
};

/// Multiplies the excited component of a received state by exp(i phi0).
/// States without an excited component (theta = 0) are returned unchanged.
BlochState apply_correction(BlochState received, int n_sites);

/// Nearest group element if it lies within `tolerance` (circular distance),
/// otherwise nullopt. Throws ConfigError unless 0 < tolerance < pi/4.
std::optional<Z4Class> z4_classify(double phase, double tolerance);

inline constexpr double kDefaultZ4Tolerance = 0.15;

}  // namespace topo
