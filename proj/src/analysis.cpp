#include "topoqst/analysis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "topoqst/errors.hpp"
#include "topoqst/lattice.hpp"

namespace topo {
namespace {

using std::numbers::pi;

// Element g^r of {1, i, -1, -i}, r taken mod 4.
Z4Class class_of_quarter_turns(int r) noexcept {
  switch (((r % 4) + 4) % 4) {
    case 0: return Z4Class::zero;
    case 1: return Z4Class::plus_half_pi;
    case 2: return Z4Class::pi;
    default: return Z4Class::minus_half_pi;
  }
}

std::complex<double> unit_of(Z4Class c) noexcept {
  switch (c) {
    case Z4Class::zero: return {1.0, 0.0};
    case Z4Class::plus_half_pi: return {0.0, 1.0};
    case Z4Class::pi: return {-1.0, 0.0};
    case Z4Class::minus_half_pi: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

}  // namespace

double angle_of(Z4Class c) noexcept {
  switch (c) {
    case Z4Class::zero: return 0.0;
    case Z4Class::plus_half_pi: return pi / 2;
    case Z4Class::pi: return pi;
    case Z4Class::minus_half_pi: return -pi / 2;
  }
  return 0.0;
}

std::string_view to_string(Z4Class c) noexcept {
  switch (c) {
    case Z4Class::zero: return "0";
    case Z4Class::plus_half_pi: return "+pi/2";
    case Z4Class::pi: return "pi";
    case Z4Class::minus_half_pi: return "-pi/2";
  }
  return "?";
}

double average_fidelity(std::complex<double> amplitude) {
  const double mag = std::abs(amplitude);
  if (!(mag <= 1.0 + 1e-10)) {
    throw ValidationError("transition amplitude magnitude exceeds 1: " + std::to_string(mag));
  }
  // |A| cos(arg A) = Re A.
  return 0.5 + mag * mag / 6.0 + amplitude.real() / 3.0;
}

double expected_phase(int n_sites, PhaseFamily family) {
  if (n_sites < 2) throw ConfigError("N must be at least 2");
  const bool even = n_sites % 2 == 0;
  switch (family) {
    case PhaseFamily::even_ssh:
      if (!even) throw ConfigError("even-chain phase law needs even N, got " + std::to_string(n_sites));
      return n_sites % 4 == 0 ? pi / 2 : -pi / 2;
    case PhaseFamily::odd_topological:
      if (even) throw ConfigError("odd-chain phase law needs odd N, got " + std::to_string(n_sites));
      return n_sites % 4 == 1 ? 0.0 : pi;
  }
  throw ConfigError("unknown phase family");
}

std::optional<PhaseFamily> phase_family(ProtocolId id) noexcept {
  switch (id) {
    case ProtocolId::normal_ssh: return PhaseFamily::even_ssh;
    case ProtocolId::edge_cosine:
    case ProtocolId::edge_exponential:
    case ProtocolId::sqrt_interface:
    case ProtocolId::gaussian_interface: return PhaseFamily::odd_topological;
    case ProtocolId::rice_mele:
    case ProtocolId::christandl: return std::nullopt;
  }
  return std::nullopt;
}

double universal_phase(int n_sites) noexcept {
  return angle_of(class_of_quarter_turns(-(n_sites - 1)));
}

PhaseCorrection phase_correction(int n_sites) {
  if (n_sites < 2) throw ConfigError("N must be at least 2, got " + std::to_string(n_sites));
  PhaseCorrection g;
  g.n_sites = n_sites;
  g.phi0_class = class_of_quarter_turns(n_sites - 1);
  g.phi0 = angle_of(g.phi0_class);
  g.diagonal = {std::complex<double>(1.0, 0.0), unit_of(g.phi0_class)};
  return g;
}

BlochState apply_correction(BlochState received, int n_sites) {
  if (received.theta == 0.0) return received;
  const auto g = phase_correction(n_sites);
  return BlochState{received.theta, wrap_angle(received.phi + g.phi0)};
}

std::optional<Z4Class> z4_classify(double phase, double tolerance) {
  if (!(tolerance > 0.0 && tolerance < pi / 4)) {
    throw ConfigError("z4 tolerance must lie in (0, pi/4), got " + std::to_string(tolerance));
  }
  if (!std::isfinite(phase)) return std::nullopt;
  for (Z4Class c : {Z4Class::zero, Z4Class::plus_half_pi, Z4Class::pi, Z4Class::minus_half_pi}) {
    if (circular_distance(phase, angle_of(c)) < tolerance) return c;
  }
  return std::nullopt;
}

}  // namespace topo
