#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "topoqst/analysis.hpp"
#include "topoqst/ensemble.hpp"
#include "topoqst/errors.hpp"
#include "topoqst/experiments.hpp"
#include "topoqst/lattice.hpp"
#include "topoqst/protocols.hpp"

#ifndef TOPOQST_VERSION
#define TOPOQST_VERSION "0.0.0"
#endif

namespace topo::cli {
namespace {

using json = nlohmann::json;

struct Options {
  std::string command;
  std::optional<std::string> protocol;
  std::optional<int> n;
  std::optional<double> t_total;
  std::optional<double> epsilon, alpha, delta_time, width, tau, lambda0, lambda_c;
  double h = 0.05;
  double tol = 1e-6;
  int max_halvings = 6;
  bool no_check = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  std::string format = "csv";
  std::optional<std::size_t> samples;
  std::string delta_list;
  std::optional<double> delta_max;
  std::optional<int> delta_steps;
  std::size_t realizations = 200;
  double t_min = 30.0, t_max = 80.0, t_step = 1.0;
  double z4_tol = kDefaultZ4Tolerance;
  std::string manifest;
};

// Manifest key, flag, and storage for every protocol parameter.
struct ParamKey {
  const char* key;
  const char* flag;
  std::optional<double> Options::*field;
};

constexpr ParamKey kParamKeys[] = {
    {"epsilon", "--epsilon", &Options::epsilon},     {"alpha", "--alpha", &Options::alpha},
    {"delta_time", "--delta-time", &Options::delta_time}, {"width", "--width", &Options::width},
    {"tau", "--tau", &Options::tau},                 {"lambda0", "--lambda0", &Options::lambda0},
    {"lambda_c", "--lambda-c", &Options::lambda_c},
};

double* param_field(ProtocolParams& p, std::string_view key) {
  if (auto* q = std::get_if<NormalSshParams>(&p); q && key == "epsilon") return &q->epsilon;
  if (auto* q = std::get_if<EdgeExponentialParams>(&p); q && key == "alpha") return &q->alpha;
  if (auto* q = std::get_if<GaussianInterfaceParams>(&p)) {
    if (key == "delta_time") return &q->delay;
    if (key == "width") return &q->width;
  }
  if (auto* q = std::get_if<RiceMeleParams>(&p)) {
    if (key == "epsilon") return &q->epsilon;
    if (key == "tau") return &q->tau;
    if (key == "lambda0") return &q->lambda0;
  }
  if (auto* q = std::get_if<ChristandlParams>(&p); q && key == "lambda_c") return &q->lambda_c;
  return nullptr;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ProtocolId protocol_id(const Options& o) {
  const std::string name = o.protocol.value_or(o.command == "sweep-period" ? "sqrt_interface" : "normal_ssh");
  const auto id = parse_protocol(name);
  if (!id) throw ConfigError("unknown protocol '" + name + "'");
  return *id;
}

int default_sites(ProtocolId id) {
  switch (id) {
    case ProtocolId::edge_cosine:
    case ProtocolId::edge_exponential:
    case ProtocolId::sqrt_interface:
    case ProtocolId::gaussian_interface: return 19;
    default: return 20;
  }
}

ChainModel build_model(const Options& o) {
  const ProtocolId id = protocol_id(o);
  ProtocolParams params = default_params(id);
  for (const auto& k : kParamKeys) {
    const auto& value = o.*(k.field);
    if (!value) continue;
    double* field = param_field(params, k.key);
    if (!field) {
      throw ConfigError(std::string(k.flag) + " does not apply to " + std::string(to_string(id)));
    }
    *field = *value;
  }
  const int n = o.n.value_or(default_sites(id));
  double T = 1.0;
  if (o.t_total) {
    T = *o.t_total;
  } else if (id != ProtocolId::normal_ssh || validate(n, 1.0, params).empty()) {
    // Otherwise the model constructor below reports the violations.
    T = default_total_time(id, n, params);
  }
  return ChainModel(n, T, std::move(params));
}

EvolutionConfig evolution_config(const Options& o, const ChainModel& model) {
  EvolutionConfig cfg{model.total_time(), o.h, o.tol, o.max_halvings};
  cfg.validate();
  if (o.max_halvings < 0) throw ConfigError("--max-halvings must be non-negative");
  if (!(o.tol > 0.0)) throw ConfigError("--tol must be positive");
  return cfg;
}

std::vector<double> strengths(const Options& o) {
  const bool list = !o.delta_list.empty();
  const bool grid = o.delta_max.has_value() || o.delta_steps.has_value();
  if (list == grid) throw ConfigError("give exactly one of --delta-list or --delta-max/--delta-steps");
  std::vector<double> out;
  if (list) {
    std::stringstream ss(o.delta_list);
    for (std::string item; std::getline(ss, item, ',');) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) throw ConfigError("bad --delta-list entry '" + item + "'");
      out.push_back(v);
    }
    return out;
  }
  if (!o.delta_max || !o.delta_steps) throw ConfigError("--delta-max and --delta-steps go together");
  if (*o.delta_steps < 1) throw ConfigError("--delta-steps must be at least 1");
  for (int i = 0; i <= *o.delta_steps; ++i) out.push_back(*o.delta_max * i / *o.delta_steps);
  return out;
}

json params_json(const ProtocolParams& p) {
  json j = json::object();
  ProtocolParams copy = p;
  for (const auto& k : kParamKeys) {
    if (const double* f = param_field(copy, k.key)) j[k.key] = *f;
  }
  return j;
}

json model_json(const ChainModel& m, const EvolutionConfig& cfg, const Options& o) {
  return json{{"protocol", std::string(to_string(m.protocol()))},
              {"n_sites", m.n_sites()},
              {"total_time", m.total_time()},
              {"params", params_json(m.params())},
              {"step_size", cfg.step_size},
              {"convergence_tol", cfg.convergence_tol},
              {"max_halvings", cfg.max_halvings},
              {"convergence_check", !o.no_check}};
}

json manifest(const Options& o, json config, const std::string& started) {
  return json{{"tool", "topoqst"},
              {"version", TOPOQST_VERSION},
              {"command", o.command},
              {"config", std::move(config)},
              {"started_at", started},
              {"finished_at", utc_now()}};
}

void load_manifest(const std::string& path, Options& o) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest '" + path + "'");
  json m;
  try {
    in >> m;
    if (m.contains("manifest")) m = json(m["manifest"]);
    const std::string cmd = m.at("command").get<std::string>();
    if (cmd != o.command) {
      throw ConfigError("manifest is for '" + cmd + "', not '" + o.command + "'");
    }
    const json& c = m.at("config");
    if (c.contains("protocol")) o.protocol = c["protocol"].get<std::string>();
    if (c.contains("n_sites")) o.n = c["n_sites"].get<int>();
    if (c.contains("total_time")) o.t_total = c["total_time"].get<double>();
    if (c.contains("params")) {
      for (const auto& k : kParamKeys) {
        if (c["params"].contains(k.key)) o.*(k.field) = c["params"][k.key].get<double>();
      }
    }
    if (c.contains("step_size")) o.h = c["step_size"].get<double>();
    if (c.contains("convergence_tol")) o.tol = c["convergence_tol"].get<double>();
    if (c.contains("max_halvings")) o.max_halvings = c["max_halvings"].get<int>();
    if (c.contains("convergence_check")) o.no_check = !c["convergence_check"].get<bool>();
    if (c.contains("samples")) o.samples = c["samples"].get<std::size_t>();
    if (c.contains("seed")) o.seed = c["seed"].get<std::uint64_t>();
    if (c.contains("realizations")) o.realizations = c["realizations"].get<std::size_t>();
    if (c.contains("z4_tolerance")) o.z4_tol = c["z4_tolerance"].get<double>();
    if (c.contains("strengths")) {
      o.delta_list.clear();
      for (const auto& d : c["strengths"]) {
        if (!o.delta_list.empty()) o.delta_list += ",";
        o.delta_list += num(d.get<double>());
      }
    }
    if (c.contains("t_min")) o.t_min = c["t_min"].get<double>();
    if (c.contains("t_max")) o.t_max = c["t_max"].get<double>();
    if (c.contains("t_step")) o.t_step = c["t_step"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest '" + path + "': " + e.what());
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    f << content;
    f.close();
    if (!f) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void emit(const Options& o, const std::string& csv, const json& summary, std::ostream& out) {
  const std::string text = summary.dump(2) + "\n";
  const bool as_csv = o.format == "csv" && !csv.empty();
  if (o.out.empty()) {
    out << (as_csv ? csv : text);
    return;
  }
  if (as_csv) {
    write_atomic(o.out, csv);
    write_atomic(o.out + ".json", text);
  } else {
    write_atomic(o.out, text);
  }
}

std::vector<double> linspace(double a, double b, std::size_t k) {
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) {
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1);
  }
  v.back() = b;
  return v;
}

void cmd_evolve(const Options& o, std::ostream& out, const std::string& started) {
  const ChainModel model = build_model(o);
  const EvolutionConfig cfg = evolution_config(o, model);
  const std::size_t k = o.samples.value_or(201);
  if (k < 2) throw ConfigError("--samples must be at least 2");
  const auto clean = DisorderRealization::clean(model.n_bonds());
  const int n = model.n_sites();
  const auto trace = evolve(model, clean, StateVector::localized(n, 1), cfg, linspace(0.0, cfg.total_time, k));

  ConvergedTransfer t;
  if (o.no_check) {
    t.amplitude = transition_amplitude(trace.final_state);
    t.step_size = cfg.effective_step();
    t.max_norm_drift = trace.max_norm_drift;
  } else {
    t = converged_transfer(model, clean, cfg);
  }

  std::string csv = "t";
  for (int i = 1; i <= n; ++i) csv += ",site_" + std::to_string(i);
  csv += "\n";
  for (const auto& s : trace.trace) {
    csv += num(s.time);
    for (double p : s.populations) csv += "," + num(p);
    csv += "\n";
  }

  json config = model_json(model, cfg, o);
  config["samples"] = k;
  json result{{"A", {{"re", t.amplitude.real()}, {"im", t.amplitude.imag()}}},
              {"abs_A", std::abs(t.amplitude)},
              {"probability", std::norm(t.amplitude)},
              {"phase", principal_arg(t.amplitude)},
              {"fidelity", average_fidelity(t.amplitude)},
              {"step_size", t.step_size},
              {"convergence_delta", t.delta},
              {"converged", o.no_check ? json(nullptr) : json(t.converged)},
              {"halvings", t.halvings},
              {"max_norm_drift", std::max(t.max_norm_drift, trace.max_norm_drift)}};
  if (const auto cls = z4_classify(principal_arg(t.amplitude), o.z4_tol)) {
    result["z4_class"] = std::string(to_string(*cls));
  } else {
    result["z4_class"] = nullptr;
  }
  emit(o, csv, json{{"manifest", manifest(o, config, started)}, {"result", result}}, out);
}

json summary_json(const StrengthSummary& s) {
  json classes = json::object();
  for (Z4Class c : {Z4Class::zero, Z4Class::plus_half_pi, Z4Class::pi, Z4Class::minus_half_pi}) {
    classes[std::string(to_string(c))] = s.class_counts[static_cast<std::size_t>(c)];
  }
  return json{{"delta", s.delta},
              {"realizations", s.realizations},
              {"failures", s.failures},
              {"mean_abs", s.mean_abs},
              {"min_abs", s.min_abs},
              {"max_abs", s.max_abs},
              {"mean_phase", s.phase.mean_direction},
              {"resultant_length", s.phase.resultant_length},
              {"circular_std", s.phase.circular_std},
              {"class_counts", classes},
              {"unclassified", s.unclassified},
              {"expected_phase", s.expected_phase},
              {"expected_count", s.expected_count},
              {"fraction_expected", s.fraction_expected},
              {"unconverged", s.unconverged},
              {"max_convergence_delta", s.max_convergence_delta},
              {"max_norm_drift", s.max_norm_drift}};
}

void cmd_ensemble(const Options& o, std::ostream& out, const std::string& started) {
  const ChainModel model = build_model(o);
  EnsembleSpec spec = make_ensemble_spec(model, strengths(o), o.realizations, o.seed);
  spec.evolution = evolution_config(o, model);
  spec.verify_convergence = !o.no_check;
  spec.z4_tolerance = o.z4_tol;
  const auto res = run_ensemble(spec, o.threads);

  std::string csv = "delta,k,sub_seed,abs_A,phase,fidelity\n";
  json failed = json::array();
  for (const auto& r : res.records) {
    csv += num(r.delta) + "," + std::to_string(r.k) + "," + std::to_string(r.sub_seed) + ",";
    if (r.failed) {
      csv += "nan,nan,nan\n";
      failed.push_back({{"delta", r.delta}, {"k", r.k}, {"sub_seed", r.sub_seed}, {"failure", r.failure}});
    } else {
      csv += num(r.magnitude) + "," + num(r.phase) + "," + num(r.fidelity) + "\n";
    }
  }

  json config = model_json(model, spec.evolution, o);
  config["seed"] = o.seed;
  config["realizations"] = o.realizations;
  config["strengths"] = spec.strengths;
  config["z4_tolerance"] = o.z4_tol;
  json per = json::array();
  for (const auto& s : res.summary.per_strength) per.push_back(summary_json(s));
  const double dc = critical_disorder(res.summary);
  emit(o, csv,
       json{{"manifest", manifest(o, config, started)},
            {"summary", per},
            {"critical_disorder", dc < 0.0 ? json(nullptr) : json(dc)},
            {"failed_records", failed}},
       out);
}

void cmd_bands(const Options& o, std::ostream& out, const std::string& started) {
  const ChainModel model = build_model(o);
  const std::size_t k = o.samples.value_or(201);
  if (k < 2) throw ConfigError("--samples must be at least 2");
  const auto rows = band_table(model, k);

  std::string csv = "t";
  for (int i = 1; i <= model.n_sites(); ++i) csv += ",lambda_" + std::to_string(i);
  csv += "\n";
  json jrows = json::array();
  double drift = 0.0;
  for (const auto& r : rows) {
    csv += num(r.time);
    for (std::size_t i = 0; i < r.energies.size(); ++i) {
      csv += "," + num(r.energies[i]);
      drift = std::max(drift, std::abs(r.energies[i] - rows.front().energies[i]));
    }
    csv += "\n";
    jrows.push_back({{"t", r.time}, {"energies", r.energies}});
  }
  json config{{"protocol", std::string(to_string(model.protocol()))},
              {"n_sites", model.n_sites()},
              {"total_time", model.total_time()},
              {"params", params_json(model.params())},
              {"samples", k}};
  emit(o, csv, json{{"manifest", manifest(o, config, started)}, {"max_drift", drift}, {"rows", jrows}}, out);
}

void cmd_sweep(const Options& o, std::ostream& out, const std::string& started) {
  const ChainModel proto = build_model(o);
  const EvolutionConfig cfg = evolution_config(o, proto);
  if (!(o.t_min < o.t_max)) throw ConfigError("--t-min must be below --t-max");
  const auto sweep = critical_period_sweep(proto, SweepRange{o.t_min, o.t_max, o.t_step}, cfg, o.threads);

  std::string csv = "T,P\n";
  for (const auto& s : sweep.samples) csv += num(s.total_time) + "," + num(s.probability) + "\n";
  json peaks = json::array();
  for (const auto& p : sweep.peaks) {
    peaks.push_back({{"T", p.total_time},
                     {"P_interpolated", p.probability},
                     {"P", p.simulated_probability},
                     {"sample_index", p.index}});
  }
  json config = model_json(proto, cfg, o);
  config.erase("total_time");
  config["t_min"] = o.t_min;
  config["t_max"] = o.t_max;
  config["t_step"] = o.t_step;
  emit(o, csv, json{{"manifest", manifest(o, config, started)}, {"peaks", peaks}}, out);
}

void cmd_phase_gate(const Options& o, std::ostream& out, const std::string& started) {
  if (!o.n) throw ConfigError("--n is required");
  const auto g = phase_correction(*o.n);
  json gate = json::array();
  for (const auto& z : g.gate()) gate.push_back({z.real(), z.imag()});
  Options as_json = o;
  as_json.format = "json";
  emit(as_json, "",
       json{{"manifest", manifest(o, json{{"n_sites", *o.n}}, started)},
            {"N", g.n_sites},
            {"phi0", g.phi0},
            {"z4_class", std::string(to_string(g.phi0_class))},
            {"gate", gate}},
       out);
}

void add_output_flags(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output file (CSV gets a .json summary alongside); stdout if omitted");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--manifest", o.manifest, "Rerun from a manifest; explicit flags override it");
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->set_help_flag("--help", "Print this help message and exit");
  sub->add_option("--protocol", o.protocol, "Protocol name");
  sub->add_option("--n", o.n, "Number of sites");
  sub->add_option("--t-total", o.t_total, "Transfer time T");
  sub->add_option("--epsilon", o.epsilon, "normal_ssh / rice_mele epsilon");
  sub->add_option("--alpha", o.alpha, "edge_exponential ramp rate");
  sub->add_option("--delta-time", o.delta_time, "gaussian_interface pulse delay");
  sub->add_option("--width", o.width, "gaussian_interface pulse width");
  sub->add_option("--tau", o.tau, "rice_mele ramp duration");
  sub->add_option("--lambda0", o.lambda0, "rice_mele field amplitude");
  sub->add_option("--lambda-c", o.lambda_c, "christandl coupling scale");
}

void add_evolution_flags(CLI::App* sub, Options& o) {
  sub->add_option("--h", o.h, "Time step");
  sub->add_option("--tol", o.tol, "Step-halving tolerance on |A|");
  sub->add_option("--max-halvings", o.max_halvings, "Maximum step halvings");
  sub->add_flag("--no-convergence-check", o.no_check, "Skip the h vs h/2 comparison");
  sub->add_option("--z4-tol", o.z4_tol, "z4 classification tolerance (rad)");
}

std::string prescan_manifest(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--manifest=", 0) == 0) return args[i].substr(11);
  }
  return {};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological quantum state transfer in single-excitation spin chains", "topoqst"};
  // -h would clash with the time-step flag --h.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", TOPOQST_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;

  auto* evolve_cmd = app.add_subcommand("evolve", "Clean run: population trace and transfer summary");
  add_model_flags(evolve_cmd, o);
  add_evolution_flags(evolve_cmd, o);
  evolve_cmd->add_option("--samples", o.samples, "Trace sample count (default 201)");
  add_output_flags(evolve_cmd, o);

  auto* ensemble_cmd = app.add_subcommand("ensemble", "Disorder ensemble of transfer amplitudes");
  add_model_flags(ensemble_cmd, o);
  add_evolution_flags(ensemble_cmd, o);
  ensemble_cmd->add_option("--delta-list", o.delta_list, "Comma-separated disorder strengths");
  ensemble_cmd->add_option("--delta-max", o.delta_max, "Largest strength of an even grid from 0");
  ensemble_cmd->add_option("--delta-steps", o.delta_steps, "Grid intervals (steps + 1 strengths)");
  ensemble_cmd->add_option("--realizations", o.realizations, "Realizations per strength");
  ensemble_cmd->add_option("--seed", o.seed, "Master seed");
  ensemble_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  add_output_flags(ensemble_cmd, o);

  auto* bands_cmd = app.add_subcommand("bands", "Instantaneous spectrum versus time");
  add_model_flags(bands_cmd, o);
  bands_cmd->add_option("--samples", o.samples, "Time samples K >= 2 (default 201)");
  add_output_flags(bands_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep-period", "Transfer probability versus T with peak refinement");
  add_model_flags(sweep_cmd, o);
  add_evolution_flags(sweep_cmd, o);
  sweep_cmd->add_option("--t-min", o.t_min, "Smallest T");
  sweep_cmd->add_option("--t-max", o.t_max, "Largest T");
  sweep_cmd->add_option("--t-step", o.t_step, "T increment");
  sweep_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  add_output_flags(sweep_cmd, o);

  auto* gate_cmd = app.add_subcommand("phase-gate", "Compensating phase gate for N sites");
  gate_cmd->set_help_flag("--help", "Print this help message and exit");
  gate_cmd->add_option("--n", o.n, "Number of sites")->required();
  add_output_flags(gate_cmd, o);

  // Subcommand name is needed before parsing to validate a manifest.
  for (const auto& a : args) {
    if (app.get_subcommands([&](CLI::App* s) { return s->get_name() == a; }).size() == 1) {
      o.command = a;
      break;
    }
  }

  try {
    if (const auto path = prescan_manifest(args); !path.empty()) load_manifest(path, o);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  const std::string started = utc_now();
  try {
    if (o.command == "evolve") cmd_evolve(o, out, started);
    if (o.command == "ensemble") cmd_ensemble(o, out, started);
    if (o.command == "bands") cmd_bands(o, out, started);
    if (o.command == "sweep-period") cmd_sweep(o, out, started);
    if (o.command == "phase-gate") cmd_phase_gate(o, out, started);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure at step " << e.step() << ": " << e.what() << "\n";
    return kNumericalError;
  } catch (const ValidationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

}  // namespace topo::cli
