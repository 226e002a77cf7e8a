// Command-line front end: binds model files to the analysis commands with
// reproducible seeds and machine-readable CSV/JSON outputs.
//
// Exit status: 0 on success, 2 on validation errors (malformed files, axiom
// violations), 3 when a solver gave up (non-converged or budget-exceeded
// results still write partial outputs).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainkit/chainkit.hpp"
#include "chainkit/model_io.hpp"

namespace {

using namespace chainkit;

constexpr int kStatusOk = 0;
constexpr int kStatusValidation = 2;
constexpr int kStatusNotConverged = 3;

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string coords_csv(const StateKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.dimension(); ++i) {
    if (i) out += ',';
    out += std::to_string(key[i]);
  }
  return out;
}

struct TruncationOptions {
  std::string box;
  std::string file;

  std::optional<Truncation> build() const {
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw ValidationError("cannot open truncation file " + file);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& err) {
        throw ValidationError("truncation file " + file + ": " + err.what());
      }
      if (!doc.is_array() || doc.empty()) {
        throw ValidationError("truncation file must be a nonempty array of state tuples");
      }
      std::vector<StateKey> states;
      for (const auto& node : doc) states.push_back(detail::parse_state(node, "truncation file"));
      return Truncation(states);
    }
    if (!box.empty()) {
      std::vector<std::pair<std::int64_t, std::int64_t>> bounds;
      std::stringstream stream(box);
      std::string part;
      while (std::getline(stream, part, ',')) {
        auto colon = part.find(':');
        if (colon == std::string::npos) {
          throw ValidationError("--trunc expects lo:hi intervals, one per coordinate");
        }
        try {
          bounds.emplace_back(std::stoll(part.substr(0, colon)), std::stoll(part.substr(colon + 1)));
        } catch (const std::exception&) {
          throw ValidationError("--trunc: cannot parse interval \"" + part + "\"");
        }
      }
      return Truncation::box(bounds);
    }
    return std::nullopt;
  }
};

Truncation support_truncation(const ChainModel& model) {
  std::vector<StateKey> states;
  for (const auto& [state, mass] : model.gamma()) states.push_back(state);
  return Truncation(states);
}

Domain load_domain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open domain file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError("domain file " + path + ": " + err.what());
  }
  if (!doc.is_array() || doc.empty()) {
    throw ValidationError("domain file must be a nonempty array of state tuples");
  }
  std::vector<StateKey> states;
  for (const auto& node : doc) states.push_back(detail::parse_state(node, "domain file"));
  return Domain::from_set(states);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
  if (!out) throw ValidationError("cannot open output file " + path);
  return out;
}

int worker_count(long paths) {
  unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHAINKIT_THREADS")) {
    long cap = std::atol(env);
    if (cap >= 1) hardware = std::min<unsigned>(hardware, static_cast<unsigned>(cap));
  }
  return static_cast<int>(std::min<long>(hardware, std::max<long>(paths, 1)));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model_path, out_path;
  std::uint64_t seed = 0;
  long paths = 1;
  long steps = -1;
  double tmax = -1.0;
  long max_jumps = 1000000;
};

int run_simulate(const SimulateArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  bool discrete = model.kind() == ChainKind::Discrete;
  if (discrete && args.steps < 0) {
    throw ValidationError("simulate: discrete models need --steps");
  }
  if (!discrete && !(args.tmax > 0.0)) {
    throw ValidationError("simulate: continuous models need --time > 0");
  }
  if (args.paths < 1) throw ValidationError("simulate: --paths must be >= 1");

  std::vector<std::string> blocks(std::size_t(args.paths));
  auto render = [&](long path_id) {
    std::string block;
    if (discrete) {
      PathDT path = sample_path_dt(model, args.steps, args.seed, std::uint64_t(path_id));
      for (std::size_t k = 0; k < path.states.size(); ++k) {
        block += std::to_string(path_id) + "," + std::to_string(k) + "," +
                 coords_csv(path.states[k]) + "\n";
      }
    } else {
      PathCT path = sample_path_ct(model, args.tmax, args.max_jumps, args.seed,
                                   std::uint64_t(path_id));
      for (std::size_t k = 0; k < path.states.size(); ++k) {
        block += std::to_string(path_id) + "," + std::to_string(k) + "," +
                 format_double(path.times[k]) + "," + coords_csv(path.states[k]) + "\n";
      }
    }
    blocks[std::size_t(path_id)] = std::move(block);
  };

  int workers = worker_count(args.paths);
  if (workers <= 1) {
    for (long p = 0; p < args.paths; ++p) render(p);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (long p = w; p < args.paths; p += workers) render(p);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::ofstream out = open_output(args.out_path);
  out << (discrete ? "trajectory_id,k,state\n" : "trajectory_id,k,t,state\n");
  for (const std::string& block : blocks) out << block;
  return kStatusOk;
}

// ---------------------------------------------------------------------------

struct LawArgs {
  std::string model_path, out_path;
  long steps = -1;
  double time = -1.0;
  double tol = -1.0;
  double series_tol = 1e-12;
  long max_states = 100000;
  TruncationOptions trunc;
};

int run_law(const LawArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  bool discrete = model.kind() == ChainKind::Discrete;
  if (discrete && args.steps < 0) throw ValidationError("law: discrete models need --steps");
  if (!discrete && !(args.time >= 0.0)) throw ValidationError("law: continuous models need --time");

  std::optional<Truncation> given = args.trunc.build();
  TruncationResult result;
  if (args.tol > 0.0) {
    Truncation initial = given.value_or(support_truncation(model));
    Horizon horizon = discrete ? Horizon::steps(args.steps) : Horizon::time(args.time);
    result = fsp_adaptive(model, horizon, args.tol, initial, args.max_states, args.series_tol);
  } else {
    if (!given) throw ValidationError("law: provide --tol for an adaptive run or a truncation");
    result = discrete ? fsp_dt(model, args.steps, *given)
                      : fsp_ct(model, args.time, *given, args.series_tol);
  }

  std::ofstream out = open_output(args.out_path);
  out << "state,mass\n";
  for (const auto& [state, mass] : result.distribution) {
    out << coords_csv(state) << "," << format_double(mass) << "\n";
  }
  out << "retained_mass," << format_double(result.retained_mass) << "\n";
  out << "epsilon," << format_double(result.error_bound) << "\n";
  out << "truncation_size," << result.truncation.size() << "\n";
  if (!result.termination.empty()) out << "termination," << result.termination << "\n";
  return result.converged ? kStatusOk : kStatusNotConverged;
}

// ---------------------------------------------------------------------------

struct ExitArgs {
  std::string model_path, out_path, domain_path;
  long steps = -1;
  double time = -1.0;
  int bins = 64;
  double series_tol = 1e-12;
  double tol = 1e-13;
  TruncationOptions trunc;
  bool marginals_only = false;
};

int run_exit(const ExitArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  Domain domain = load_domain_file(args.domain_path);
  std::optional<Truncation> given = args.trunc.build();
  if (!given) throw ValidationError("exit: a truncation (--trunc or --trunc-file) is required");
  bool discrete = model.kind() == ChainKind::Discrete;

  ExitStatistics stats;
  if (args.marginals_only) {
    stats = exit_marginals_minimal(model, domain, model.gamma(), *given, args.tol);
  } else if (discrete) {
    if (args.steps < 0) throw ValidationError("exit: discrete models need --steps");
    stats = exit_joint_dt(model, domain, args.steps, *given);
  } else {
    if (!(args.time > 0.0)) throw ValidationError("exit: continuous models need --time > 0");
    stats = exit_density_ct(model, domain, args.time, *given, args.series_tol, args.bins);
  }

  std::ofstream out = open_output(args.out_path);
  out << "block,index,state,mass\n";
  for (std::size_t k = 0; k < stats.exit_by_time.size(); ++k) {
    for (const auto& [state, mass] : stats.exit_by_time[k]) {
      out << "mu," << k << "," << coords_csv(state) << "," << format_double(mass) << "\n";
    }
  }
  for (std::size_t k = 0; k < stats.occupation_by_time.size(); ++k) {
    for (const auto& [state, mass] : stats.occupation_by_time[k]) {
      out << "nu," << k << "," << coords_csv(state) << "," << format_double(mass) << "\n";
    }
  }
  for (const auto& [state, mass] : stats.exit_marginal) {
    out << "mu_S,," << coords_csv(state) << "," << format_double(mass) << "\n";
  }
  for (const auto& [state, mass] : stats.occupation_marginal) {
    out << "nu_S,," << coords_csv(state) << "," << format_double(mass) << "\n";
  }
  if (!stats.time_edges.empty()) {
    out << "atom_at_zero,,," << format_double(stats.initial_atom) << "\n";
    out << "bin_width,,," << format_double(stats.time_edges[1] - stats.time_edges[0]) << "\n";
  }
  out << "exit_probability,,," << format_double(stats.exit_probability) << "\n";
  out << "mean_exit_time,,," << format_double(stats.mean_exit_time) << "\n";
  out << "error_bound,,," << format_double(stats.error_bound) << "\n";
  out << "converged,,," << (stats.converged ? 1 : 0) << "\n";
  if (stats.assumed_finite_exit) out << "assumed_finite_exit,,,1\n";
  return stats.converged ? kStatusOk : kStatusNotConverged;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string model_path, out_path;
  TruncationOptions trunc;
};

nlohmann::json states_to_json(const std::vector<StateKey>& states) {
  nlohmann::json out = nlohmann::json::array();
  for (const StateKey& s : states) out.push_back(detail::state_to_json(s));
  return out;
}

int run_classify(const ClassifyArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  std::optional<Truncation> given = args.trunc.build();
  if (!given) throw ValidationError("classify: a truncation (--trunc or --trunc-file) is required");
  ClassDecomposition decomposition = classify(model, *given);

  nlohmann::json doc;
  doc["classes"] = nlohmann::json::array();
  for (const StateClass& cls : decomposition.classes) {
    nlohmann::json node;
    node["members"] = states_to_json(cls.members);
    node["certified_closed"] = cls.certified_closed;
    node["period"] = cls.period;
    node["recurrence"] = cls.recurrence_label;
    doc["classes"].push_back(node);
  }
  doc["outside_certified_closed"] = states_to_json(decomposition.outside_certified_closed);
  doc["boundary_states"] = states_to_json(decomposition.boundary_states);

  std::ofstream out = open_output(args.out_path);
  out << doc.dump(2) << "\n";
  return kStatusOk;
}

// ---------------------------------------------------------------------------

struct StationaryArgs {
  std::string model_path, out_path;
  TruncationOptions trunc;
};

int run_stationary(const StationaryArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  std::optional<Truncation> given = args.trunc.build();
  if (!given) throw ValidationError("stationary: a truncation (--trunc or --trunc-file) is required");
  ClassDecomposition decomposition = classify(model, *given);
  ErgodicReport report = ergodic_distributions(model, decomposition);

  std::ofstream out = open_output(args.out_path);
  out << "class,state,mass\n";
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    for (const auto& [state, mass] : report.classes[c].pi) {
      out << c << "," << coords_csv(state) << "," << format_double(mass) << "\n";
    }
  }

  nlohmann::json summary;
  summary["classes"] = nlohmann::json::array();
  for (const ErgodicClassResult& cls : report.classes) {
    nlohmann::json node;
    node["members"] = states_to_json(cls.members);
    node["residual"] = cls.residual;
    node["method"] = cls.method;
    summary["classes"].push_back(node);
  }
  summary["notes"] = report.notes;
  summary["requires_non_explosivity"] = model.kind() == ChainKind::Continuous;
  std::ofstream json_out = open_output(args.out_path + ".summary.json");
  json_out << summary.dump(2) << "\n";
  return kStatusOk;
}

// ---------------------------------------------------------------------------

struct LyapunovArgs {
  std::string model_path, cert_path, out_path;
  TruncationOptions trunc;
};

Certificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open certificate file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError("certificate file " + path + ": " + err.what());
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "kind" && key != "v" && key != "F" && key != "b" && key != "theta" &&
        key != "alpha" && key != "c" && key != "tail_claim") {
      throw ValidationError("certificate file: unknown field \"" + key + "\"");
    }
  }
  Certificate cert;
  std::string kind = doc.value("kind", "");
  if (kind == "dt-recurrence") cert.kind = CertificateKind::DtRecurrence;
  else if (kind == "dt-foster") cert.kind = CertificateKind::DtFoster;
  else if (kind == "dt-geometric") cert.kind = CertificateKind::DtGeometric;
  else if (kind == "ct-regularity") cert.kind = CertificateKind::CtRegularity;
  else if (kind == "ct-positive") cert.kind = CertificateKind::CtPositive;
  else if (kind == "ct-exponential") cert.kind = CertificateKind::CtExponential;
  else throw ValidationError("certificate file: unknown kind \"" + kind + "\"");

  if (!doc.contains("v") || !doc["v"].is_object()) {
    throw ValidationError("certificate file: field \"v\" (object) is required");
  }
  const auto& v = doc["v"];
  std::string type = v.value("type", "");
  // Test functions are families over s = |x|_1, the l1 norm of the state.
  if (type == "polynomial") {
    if (!v.contains("coeffs") || !v["coeffs"].is_array()) {
      throw ValidationError("certificate file: polynomial v needs \"coeffs\"");
    }
    std::vector<double> coeffs = v["coeffs"].get<std::vector<double>>();
    cert.v = [coeffs](const StateKey& x) {
      double s = 0.0;
      for (std::int64_t c : x) s += std::abs(static_cast<double>(c));
      return polynomial(coeffs, s);
    };
  } else if (type == "exponential") {
    if (!v.contains("base") || !v["base"].is_number()) {
      throw ValidationError("certificate file: exponential v needs \"base\"");
    }
    double base = v["base"].get<double>();
    cert.v = [base](const StateKey& x) {
      double s = 0.0;
      for (std::int64_t c : x) s += std::abs(static_cast<double>(c));
      return std::pow(base, s);
    };
  } else {
    throw ValidationError("certificate file: v.type must be \"polynomial\" or \"exponential\"");
  }

  if (!doc.contains("F") || !doc["F"].is_array()) {
    throw ValidationError("certificate file: field \"F\" (array of states) is required");
  }
  for (const auto& node : doc["F"]) cert.focus_set.push_back(detail::parse_state(node, "F"));
  cert.b = doc.value("b", 0.0);
  cert.theta = doc.value("theta", 0.0);
  cert.alpha = doc.value("alpha", 0.0);
  cert.c = doc.value("c", 0.0);
  cert.tail_claim = doc.value("tail_claim", "");
  return cert;
}

int run_lyapunov(const LyapunovArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  Certificate cert = load_certificate(args.cert_path);
  std::optional<Truncation> given = args.trunc.build();
  if (!given) throw ValidationError("lyapunov: a truncation (--trunc or --trunc-file) is required");
  CertificateReport report = check_certificate(model, cert, *given);

  nlohmann::json doc;
  doc["verdict"] = report.holds_on_truncation ? "holds-on-truncation" : "violated";
  doc["worst_slack"] = report.worst_slack;
  doc["interior_checked"] = report.interior_checked;
  doc["boundary_unchecked"] = states_to_json(report.boundary_unchecked);
  doc["coverage_note"] = report.coverage_note;
  doc["violations"] = nlohmann::json::array();
  for (const SlackEntry& entry : report.violations) {
    doc["violations"].push_back({{"state", detail::state_to_json(entry.state)},
                                 {"slack", entry.slack}});
  }
  std::ofstream out = open_output(args.out_path);
  out << doc.dump(2) << "\n";
  return kStatusOk;
}

// ---------------------------------------------------------------------------

struct SkeletonArgs {
  std::string model_path, out_path;
  double delta = -1.0;
  double series_tol = 1e-12;
  TruncationOptions trunc;
};

int run_skeleton(const SkeletonArgs& args) {
  ChainModel model = load_model_file(args.model_path);
  std::optional<Truncation> given = args.trunc.build();
  if (!given) throw ValidationError("skeleton: a truncation (--trunc or --trunc-file) is required");
  if (!(args.delta > 0.0)) throw ValidationError("skeleton: --time (the sampling period) must be > 0");
  SkeletonMatrix skeleton = skeleton_matrix(model, args.delta, *given, args.series_tol);

  std::ofstream out = open_output(args.out_path);
  out << "from,to,prob\n";
  int n = skeleton.truncation.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double p = skeleton.rows[std::size_t(i)][std::size_t(j)];
      if (p != 0.0) {
        out << coords_csv(skeleton.truncation.state(i)) << ","
            << coords_csv(skeleton.truncation.state(j)) << "," << format_double(p) << "\n";
      }
    }
    out << coords_csv(skeleton.truncation.state(i)) << ",dead,"
        << format_double(skeleton.dead_mass(i)) << "\n";
  }
  return kStatusOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainkit: certified numerical analysis of countable-state Markov chains"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "sample chain paths to CSV");
  simulate_cmd->add_option("--model", sim.model_path, "model JSON file")->required();
  simulate_cmd->add_option("--out", sim.out_path, "output CSV")->required();
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed (default 0)");
  simulate_cmd->add_option("--paths", sim.paths, "number of trajectories");
  simulate_cmd->add_option("--steps", sim.steps, "steps per discrete trajectory");
  simulate_cmd->add_option("--time,--tmax", sim.tmax, "horizon per continuous trajectory");
  simulate_cmd->add_option("--max-jumps", sim.max_jumps, "jump budget per continuous trajectory");

  LawArgs law;
  CLI::App* law_cmd = app.add_subcommand("law", "time-varying law with certified error bound");
  law_cmd->add_option("--model", law.model_path, "model JSON file")->required();
  law_cmd->add_option("--out", law.out_path, "output CSV")->required();
  law_cmd->add_option("--steps", law.steps, "discrete horizon");
  law_cmd->add_option("--time", law.time, "continuous horizon");
  law_cmd->add_option("--tol", law.tol, "error tolerance: grow the truncation until met");
  law_cmd->add_option("--series-tol", law.series_tol, "uniformization series tolerance");
  law_cmd->add_option("--max-states", law.max_states, "truncation growth budget");
  law_cmd->add_option("--trunc", law.trunc.box, "truncation box, lo:hi per coordinate");
  law_cmd->add_option("--trunc-file", law.trunc.file, "explicit truncation state list (JSON)");

  ExitArgs exit_args;
  CLI::App* exit_cmd = app.add_subcommand("exit", "exit distribution and occupation measure");
  exit_cmd->add_option("--model", exit_args.model_path, "model JSON file")->required();
  exit_cmd->add_option("--out", exit_args.out_path, "output CSV")->required();
  exit_cmd->add_option("--domain-file", exit_args.domain_path, "domain state list (JSON)")
      ->required();
  exit_cmd->add_option("--steps", exit_args.steps, "discrete horizon");
  exit_cmd->add_option("--time", exit_args.time, "continuous horizon");
  exit_cmd->add_option("--bins", exit_args.bins, "time bins for continuous exit densities");
  exit_cmd->add_option("--series-tol", exit_args.series_tol, "uniformization series tolerance");
  exit_cmd->add_option("--tol", exit_args.tol, "value-iteration tolerance (marginals mode)");
  exit_cmd->add_flag("--marginals", exit_args.marginals_only,
                     "solve the minimal-solution marginal equations instead of the joint tables");
  exit_cmd->add_option("--trunc", exit_args.trunc.box, "truncation box, lo:hi per coordinate");
  exit_cmd->add_option("--trunc-file", exit_args.trunc.file, "explicit truncation state list");

  ClassifyArgs classify_args;
  CLI::App* classify_cmd = app.add_subcommand("classify", "communicating classes and periods");
  classify_cmd->add_option("--model", classify_args.model_path, "model JSON file")->required();
  classify_cmd->add_option("--out", classify_args.out_path, "output JSON")->required();
  classify_cmd->add_option("--trunc", classify_args.trunc.box, "truncation box");
  classify_cmd->add_option("--trunc-file", classify_args.trunc.file, "explicit truncation list");

  StationaryArgs stationary_args;
  CLI::App* stationary_cmd =
      app.add_subcommand("stationary", "ergodic distributions of certified-closed classes");
  stationary_cmd->add_option("--model", stationary_args.model_path, "model JSON file")->required();
  stationary_cmd->add_option("--out", stationary_args.out_path, "output CSV")->required();
  stationary_cmd->add_option("--trunc", stationary_args.trunc.box, "truncation box");
  stationary_cmd->add_option("--trunc-file", stationary_args.trunc.file, "explicit truncation list");

  LyapunovArgs lyapunov_args;
  CLI::App* lyapunov_cmd = app.add_subcommand("lyapunov", "check a drift certificate");
  lyapunov_cmd->add_option("--model", lyapunov_args.model_path, "model JSON file")->required();
  lyapunov_cmd->add_option("--cert", lyapunov_args.cert_path, "certificate JSON file")->required();
  lyapunov_cmd->add_option("--out", lyapunov_args.out_path, "output JSON")->required();
  lyapunov_cmd->add_option("--trunc", lyapunov_args.trunc.box, "truncation box");
  lyapunov_cmd->add_option("--trunc-file", lyapunov_args.trunc.file, "explicit truncation list");

  SkeletonArgs skeleton_args;
  CLI::App* skeleton_cmd = app.add_subcommand("skeleton", "delta-skeleton transition matrix");
  skeleton_cmd->add_option("--model", skeleton_args.model_path, "model JSON file")->required();
  skeleton_cmd->add_option("--out", skeleton_args.out_path, "output CSV")->required();
  skeleton_cmd->add_option("--time", skeleton_args.delta, "sampling period delta")->required();
  skeleton_cmd->add_option("--series-tol", skeleton_args.series_tol, "series tolerance");
  skeleton_cmd->add_option("--trunc", skeleton_args.trunc.box, "truncation box");
  skeleton_cmd->add_option("--trunc-file", skeleton_args.trunc.file, "explicit truncation list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) return run_simulate(sim);
    if (law_cmd->parsed()) return run_law(law);
    if (exit_cmd->parsed()) return run_exit(exit_args);
    if (classify_cmd->parsed()) return run_classify(classify_args);
    if (stationary_cmd->parsed()) return run_stationary(stationary_args);
    if (lyapunov_cmd->parsed()) return run_lyapunov(lyapunov_args);
    if (skeleton_cmd->parsed()) return run_skeleton(skeleton_args);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kStatusValidation;
  } catch (const SolveError& err) {
    std::cerr << "solver gave up: " << err.what() << "\n";
    return kStatusNotConverged;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 1;
  }
  return kStatusOk;
}
