#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace topo {

enum class ProtocolId {
  normal_ssh,
  edge_cosine,
  edge_exponential,
  sqrt_interface,
  gaussian_interface,
  rice_mele,
  christandl,
};

/// Canonical protocol names as used on the command line and in manifests.
std::string_view to_string(ProtocolId id) noexcept;
std::optional<ProtocolId> parse_protocol(std::string_view name) noexcept;
const std::vector<ProtocolId>& all_protocols();

/// Even-length SSH chain: odd (intra-cell) bonds (1-epsilon) sin^2(pi t/T), even bonds 1.
struct NormalSshParams {
  double epsilon = 0.2;
};

/// Odd-length edge-defect chain: odd bonds (1 - cos(pi t/T))/2, even bonds (1 + cos(pi t/T))/2.
struct EdgeCosineParams {};

/// Odd-length edge-defect chain with exponential ramps of rate alpha.
struct EdgeExponentialParams {
  double alpha = 6.0;
};

/// Odd-length interface chain with square-root cell couplings; flat instantaneous spectrum.
struct SqrtInterfaceParams {};

/// Two SSH blocks of M sites each sharing the middle site, N = 2M - 1 with M even.
/// Intra-cell bonds follow Gaussians of width `width` separated by `delay`.
struct GaussianInterfaceParams {
  double delay = 50.0;
  double width = 70.0;
};

/// Three-stage Rice-Mele pump: ramp up for tau, sweep the staggered on-site
/// field from +lambda0 to -lambda0 over tau_z = T - 2 tau, ramp down for tau.
struct RiceMeleParams {
  double epsilon = 0.1;
  double tau = 200.0;
  double lambda0 = 0.2;
};

/// Static mirror chain J_n = (lambda_c/2) sqrt(n (N - n)); perfect transfer at T = pi/lambda_c.
struct ChristandlParams {
  double lambda_c = 1.0;
};

/// Alternative order matches ProtocolId.
using ProtocolParams =
    std::variant<NormalSshParams, EdgeCosineParams, EdgeExponentialParams, SqrtInterfaceParams,
                 GaussianInterfaceParams, RiceMeleParams, ChristandlParams>;

ProtocolId protocol_of(const ProtocolParams& params) noexcept;
ProtocolParams default_params(ProtocolId id);

/// Default transfer time: 1000 for the adiabatic odd chains and Rice-Mele,
/// pi/lambda_c for the mirror chain, and for normal SSH a length-dependent
/// value tuned to the first full edge-to-edge transfer (200 for N = 20,
/// 260 for N = 22).
double default_total_time(ProtocolId id, int n_sites, const ProtocolParams& params);

/// Transfer time of the normal SSH pump at which the two edge modes, split by
/// +-delta(t), accumulate a relative angle of pi: integral of delta over [0, T] = pi/2.
double estimate_ssh_transfer_time(int n_sites, double epsilon);

/// Returns every violated constraint; empty means valid. Never throws.
std::vector<std::string> validate(int n_sites, double total_time, const ProtocolParams& params);

struct Couplings {
  std::vector<double> bonds;   ///< bond n (0-based here) joins sites n and n+1
  std::vector<double> onsite;  ///< per-site energies
};

/// A validated chain: size, transfer time and a coupling schedule on [0, T].
/// Immutable after construction.
class ChainModel {
 public:
  /// Throws ConfigError listing all violations.
  ChainModel(int n_sites, double total_time, ProtocolParams params);

  /// Default parameters and transfer time for the protocol.
  static ChainModel with_defaults(ProtocolId id, int n_sites);

  ProtocolId protocol() const noexcept { return protocol_of(params_); }
  int n_sites() const noexcept { return n_sites_; }
  std::size_t n_bonds() const noexcept { return static_cast<std::size_t>(n_sites_ - 1); }
  double total_time() const noexcept { return total_time_; }
  const ProtocolParams& params() const noexcept { return params_; }

  /// Same protocol and parameters with a different transfer time.
  ChainModel with_total_time(double total_time) const;

  /// Clean schedule at time t (clamped to [0, T]).
  Couplings couplings_at(double t) const;
  void couplings_at(double t, Couplings& out) const;

  /// True if the schedule never changes in time.
  bool is_static() const noexcept { return protocol() == ProtocolId::christandl; }
  /// True if every on-site energy is identically zero.
  bool has_zero_onsite() const noexcept { return protocol() != ProtocolId::rice_mele; }

 private:
  int n_sites_;
  double total_time_;
  ProtocolParams params_;
};

/// Sender and receiver sites (1-based): always (1, N).
std::pair<int, int> sender_receiver(const ChainModel& model) noexcept;

/// Rice-Mele intra-cell hopping and staggered field, exposed for tests and band plots.
double rice_mele_hopping(const RiceMeleParams& p, double total_time, double t) noexcept;
double rice_mele_field(const RiceMeleParams& p, double total_time, double t) noexcept;

}  // namespace topo
