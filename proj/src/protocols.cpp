#include "topoqst/protocols.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "topoqst/errors.hpp"
#include "topoqst/tridiagonal.hpp"

namespace topo {
namespace {

using std::numbers::pi;

constexpr std::array<std::string_view, 7> kProtocolNames = {
    "normal_ssh",         "edge_cosine", "edge_exponential", "sqrt_interface",
    "gaussian_interface", "rice_mele",   "christandl",
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

double gaussian_pulse(double t, double center, double width) {
  const double u = (t - center) / width;
  return std::exp(-u * u);
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::string_view to_string(ProtocolId id) noexcept { return kProtocolNames[static_cast<int>(id)]; }

std::optional<ProtocolId> parse_protocol(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kProtocolNames.size(); ++i) {
    if (kProtocolNames[i] == name) return static_cast<ProtocolId>(i);
  }
  return std::nullopt;
}

const std::vector<ProtocolId>& all_protocols() {
  static const std::vector<ProtocolId> ids = {
      ProtocolId::normal_ssh,         ProtocolId::edge_cosine, ProtocolId::edge_exponential,
      ProtocolId::sqrt_interface,     ProtocolId::gaussian_interface,
      ProtocolId::rice_mele,          ProtocolId::christandl,
  };
  return ids;
}

ProtocolId protocol_of(const ProtocolParams& params) noexcept {
  return static_cast<ProtocolId>(params.index());
}

ProtocolParams default_params(ProtocolId id) {
  switch (id) {
    case ProtocolId::normal_ssh: return NormalSshParams{};
    case ProtocolId::edge_cosine: return EdgeCosineParams{};
    case ProtocolId::edge_exponential: return EdgeExponentialParams{};
    case ProtocolId::sqrt_interface: return SqrtInterfaceParams{};
    case ProtocolId::gaussian_interface: return GaussianInterfaceParams{};
    case ProtocolId::rice_mele: return RiceMeleParams{};
    case ProtocolId::christandl: return ChristandlParams{};
  }
  throw ConfigError("unknown protocol");
}

double rice_mele_hopping(const RiceMeleParams& p, double total_time, double t) noexcept {
  const double peak = 1.0 - p.epsilon;
  const double tau_z = total_time - 2.0 * p.tau;
  if (t <= p.tau) return 0.5 * peak * (1.0 - std::cos(pi * t / p.tau));
  if (t <= p.tau + tau_z) return peak;
  // Mirror image of the ramp-up, so the hopping is continuous at t = tau + tau_z.
  return 0.5 * peak * (1.0 - std::cos(pi * (total_time - t) / p.tau));
}

double rice_mele_field(const RiceMeleParams& p, double total_time, double t) noexcept {
  const double tau_z = total_time - 2.0 * p.tau;
  if (t <= p.tau) return p.lambda0;
  if (t <= p.tau + tau_z) {
    const double rate = 4.0 * p.lambda0 / tau_z;
    return p.lambda0 - rate * (t - p.tau) / 2.0;
  }
  return -p.lambda0;
}

std::vector<std::string> validate(int n_sites, double total_time, const ProtocolParams& params) {
  std::vector<std::string> v;
  if (n_sites < 2) v.push_back("N must be at least 2, got " + std::to_string(n_sites));
  if (!is_finite_positive(total_time)) v.push_back("T must be finite and positive, got " + fmt(total_time));
  const bool odd = n_sites % 2 != 0;

  std::visit(
      overloaded{
          [&](const NormalSshParams& p) {
            if (odd) v.push_back("N must be even for normal_ssh, got " + std::to_string(n_sites));
            if (!(p.epsilon >= 0.0 && p.epsilon < 1.0)) {
              v.push_back("epsilon must lie in [0, 1), got " + fmt(p.epsilon));
            }
          },
          [&](const EdgeCosineParams&) {
            if (!odd) v.push_back("N must be odd for edge_cosine, got " + std::to_string(n_sites));
          },
          [&](const EdgeExponentialParams& p) {
            if (!odd) {
              v.push_back("N must be odd for edge_exponential, got " + std::to_string(n_sites));
            }
            if (!is_finite_positive(p.alpha)) v.push_back("alpha must be positive, got " + fmt(p.alpha));
          },
          [&](const SqrtInterfaceParams&) {
            if (!odd) v.push_back("N must be odd for sqrt_interface, got " + std::to_string(n_sites));
          },
          [&](const GaussianInterfaceParams& p) {
            if (n_sites % 4 != 3) {
              v.push_back("N must equal 2M-1 with M even (N = 3 mod 4) for gaussian_interface, got " +
                          std::to_string(n_sites));
            }
            if (!is_finite_positive(p.width)) v.push_back("width must be positive, got " + fmt(p.width));
            if (!(std::isfinite(p.delay) && p.delay >= 0.0 && p.delay < total_time)) {
              v.push_back("delay must satisfy 0 <= delay < T, got " + fmt(p.delay));
            }
          },
          [&](const RiceMeleParams& p) {
            if (odd) v.push_back("N must be even for rice_mele, got " + std::to_string(n_sites));
            if (!(p.epsilon >= 0.0 && p.epsilon < 1.0)) {
              v.push_back("epsilon must lie in [0, 1), got " + fmt(p.epsilon));
            }
            if (!is_finite_positive(p.tau)) v.push_back("tau must be positive, got " + fmt(p.tau));
            if (!std::isfinite(p.lambda0)) v.push_back("lambda0 must be finite");
            const double tau_z = total_time - 2.0 * p.tau;
            if (!(tau_z > 0.0)) {
              v.push_back("tau_z <= 0: T must exceed 2 tau (T = " + fmt(total_time) +
                          ", tau = " + fmt(p.tau) + ")");
              return;
            }
            if (!is_finite_positive(p.tau)) return;
            // Stage junctions, approached from both sides.
            for (double tj : {p.tau, p.tau + tau_z}) {
              const double step = 1e-9 * std::max(1.0, tj);
              const double jl = rice_mele_hopping(p, total_time, tj - step);
              const double jr = rice_mele_hopping(p, total_time, tj + step);
              const double ll = rice_mele_field(p, total_time, tj - step);
              const double lr = rice_mele_field(p, total_time, tj + step);
              // Smooth parts change by O(step) across the probe; a jump would be O(1).
              if (std::abs(jl - jr) > 1e-12 + 10.0 * step || std::abs(ll - lr) > 1e-12 + 10.0 * step) {
                v.push_back("rice_mele schedule is discontinuous at t = " + fmt(tj));
              }
            }
          },
          [&](const ChristandlParams& p) {
            if (!is_finite_positive(p.lambda_c)) {
              v.push_back("lambda_c must be positive, got " + fmt(p.lambda_c));
            }
          },
      },
      params);
  return v;
}

double estimate_ssh_transfer_time(int n_sites, double epsilon) {
  if (n_sites < 2 || n_sites % 2 != 0) {
    throw ConfigError("normal_ssh transfer time needs an even N >= 2, got " + std::to_string(n_sites));
  }
  // Midpoint rule over s = t/T of the smallest non-negative eigenvalue.
  constexpr int kNodes = 2000;
  const std::size_t n = static_cast<std::size_t>(n_sites);
  std::vector<double> diag(n, 0.0), bonds(n - 1, 1.0);
  double integral = 0.0;
  for (int i = 0; i < kNodes; ++i) {
    const double s = std::sin(pi * (i + 0.5) / kNodes);
    const double intra = (1.0 - epsilon) * s * s;
    for (std::size_t b = 0; b < n - 1; b += 2) bonds[b] = intra;
    integral += tridiagonal_eigenvalues(diag, bonds)[n / 2];
  }
  integral /= kNodes;
  if (!(integral > 0.0)) throw ConfigError("edge-mode splitting vanishes; no finite transfer time");
  return 0.5 * pi / integral;
}

double default_total_time(ProtocolId id, int n_sites, const ProtocolParams& params) {
  switch (id) {
    case ProtocolId::normal_ssh: {
      if (n_sites == 20) return 200.0;
      if (n_sites == 22) return 260.0;
      return estimate_ssh_transfer_time(n_sites, std::get<NormalSshParams>(params).epsilon);
    }
    case ProtocolId::christandl: return pi / std::get<ChristandlParams>(params).lambda_c;
    default: return 1000.0;
  }
}

ChainModel::ChainModel(int n_sites, double total_time, ProtocolParams params)
    : n_sites_(n_sites), total_time_(total_time), params_(std::move(params)) {
  const auto violations = validate(n_sites_, total_time_, params_);
  if (!violations.empty()) {
    std::string msg = "invalid " + std::string(to_string(protocol())) + " model:";
    for (const auto& s : violations) msg += " " + s + ";";
    msg.pop_back();
    throw ConfigError(msg);
  }
}

ChainModel ChainModel::with_defaults(ProtocolId id, int n_sites) {
  auto params = default_params(id);
  return ChainModel(n_sites, default_total_time(id, n_sites, params), std::move(params));
}

ChainModel ChainModel::with_total_time(double total_time) const {
  return ChainModel(n_sites_, total_time, params_);
}

Couplings ChainModel::couplings_at(double t) const {
  Couplings c;
  couplings_at(t, c);
  return c;
}

void ChainModel::couplings_at(double t, Couplings& out) const {
  const int n = n_sites_;
  const double T = total_time_;
  t = std::clamp(t, 0.0, T);
  out.bonds.assign(static_cast<std::size_t>(n - 1), 0.0);
  out.onsite.assign(static_cast<std::size_t>(n), 0.0);
  auto& bonds = out.bonds;

  // Loops below use the 1-based bond label b; bonds[b - 1] joins sites b and b+1.
  std::visit(
      overloaded{
          [&](const NormalSshParams& p) {
            const double s = std::sin(pi * t / T);
            const double intra = (1.0 - p.epsilon) * s * s;
            for (int b = 1; b < n; ++b) bonds[b - 1] = (b % 2 == 1) ? intra : 1.0;
          },
          [&](const EdgeCosineParams&) {
            const double c = std::cos(pi * t / T);
            const double intra = 0.5 * (1.0 - c);
            const double inter = 0.5 * (1.0 + c);
            for (int b = 1; b < n; ++b) bonds[b - 1] = (b % 2 == 1) ? intra : inter;
          },
          [&](const EdgeExponentialParams& p) {
            const double norm = -std::expm1(-p.alpha);
            const double intra = -std::expm1(-p.alpha * t / T) / norm;
            const double inter = -std::expm1(-p.alpha * (1.0 - t / T)) / norm;
            for (int b = 1; b < n; ++b) bonds[b - 1] = (b % 2 == 1) ? intra : inter;
          },
          [&](const SqrtInterfaceParams&) {
            // Complete two-site cells; the receiver is the unpaired last site.
            // This normalization makes the spectrum exactly time independent.
            const double cells = (n - 1) / 2;
            const double s = std::sin(pi * t / (2.0 * T));
            const double c = std::cos(pi * t / (2.0 * T));
            for (int b = 1; b < n; ++b) {
              const int m = (b + 1) / 2;
              bonds[b - 1] = (b % 2 == 1) ? s * std::sqrt((cells - m + 1) / cells)
                                          : c * std::sqrt(m / cells);
            }
          },
          [&](const GaussianInterfaceParams& p) {
            const int m_block = (n + 1) / 2;
            // Sender-side block peaks later than the receiver-side block.
            const double left = gaussian_pulse(t, 0.5 * T + 0.5 * p.delay, p.width);
            const double right = gaussian_pulse(t, 0.5 * T - 0.5 * p.delay, p.width);
            for (int b = 1; b < n; ++b) {
              if (b < m_block && b % 2 == 1) {
                bonds[b - 1] = left;
              } else if (b >= m_block && b % 2 == 0) {
                bonds[b - 1] = right;
              } else {
                bonds[b - 1] = 1.0;
              }
            }
          },
          [&](const RiceMeleParams& p) {
            const double intra = rice_mele_hopping(p, T, t);
            const double field = rice_mele_field(p, T, t);
            for (int b = 1; b < n; ++b) bonds[b - 1] = (b % 2 == 1) ? intra : 1.0;
            for (int s = 1; s <= n; ++s) out.onsite[s - 1] = (s % 2 == 1) ? field : -field;
          },
          [&](const ChristandlParams& p) {
            for (int b = 1; b < n; ++b) {
              bonds[b - 1] = 0.5 * p.lambda_c * std::sqrt(static_cast<double>(b) * (n - b));
            }
          },
      },
      params_);
}

std::pair<int, int> sender_receiver(const ChainModel& model) noexcept { return {1, model.n_sites()}; }

}  // namespace topo
