#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return CHAINKIT_CLI_PATH; }

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "chainkit_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_cli(const std::string& args) {
  std::string command = std::string(cli_path()) + " " + args + " 2>" +
                        (work_dir() / "stderr.txt").string();
  int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

fs::path gambler_model() {
  fs::path path = work_dir() / "gambler.json";
  write_file(path, R"({"kind": "gambler", "params": {"a": 0.5, "K": 20}, "gamma": [[[10], 1.0]]})");
  return path;
}

fs::path two_state_model() {
  fs::path path = work_dir() / "twostate.json";
  write_file(path, R"({"kind": "two-state", "params": {"a": 1.0, "b": 1.0}, "gamma": [[[0], 1.0]]})");
  return path;
}

fs::path purebirth_model() {
  fs::path path = work_dir() / "purebirth.json";
  write_file(path, R"({"kind": "pure-birth-geometric", "params": {"base": 2.0}, "gamma": [[[0], 1.0]]})");
  return path;
}

}  // namespace

TEST_CASE("cli runs are byte-for-byte deterministic") {
  fs::path model = two_state_model();
  fs::path out1 = work_dir() / "sim1.csv";
  fs::path out2 = work_dir() / "sim2.csv";
  std::string flags = "simulate --model " + model.string() + " --paths 3 --seed 7 --tmax 1 --out ";
  REQUIRE(run_cli(flags + out1.string()) == 0);
  REQUIRE(run_cli(flags + out2.string()) == 0);
  std::string first = read_file(out1);
  REQUIRE(!first.empty());
  REQUIRE(first == read_file(out2));

  fs::path law1 = work_dir() / "law1.csv";
  fs::path law2 = work_dir() / "law2.csv";
  std::string law_flags =
      "law --model " + gambler_model().string() + " --steps 10 --tol 1e-12 --out ";
  REQUIRE(run_cli(law_flags + law1.string()) == 0);
  REQUIRE(run_cli(law_flags + law2.string()) == 0);
  REQUIRE(read_file(law1) == read_file(law2));
}

TEST_CASE("adaptive law on the gambler reaches epsilon zero") {
  fs::path out = work_dir() / "law_gambler.csv";
  int status = run_cli("law --model " + gambler_model().string() +
                       " --steps 10 --tol 1e-12 --out " + out.string());
  REQUIRE(status == 0);
  std::string contents = read_file(out);
  REQUIRE(contents.find("epsilon,0\n") != std::string::npos);
  REQUIRE(contents.find("termination,tolerance-met") != std::string::npos);
}

TEST_CASE("adaptive law on the explosive chain exits with status 3 and partial output") {
  fs::path out = work_dir() / "law_pb.csv";
  int status = run_cli("law --model " + purebirth_model().string() +
                       " --time 2 --tol 1e-3 --max-states 10000 --out " + out.string());
  REQUIRE(status == 3);
  std::string contents = read_file(out);
  REQUIRE(contents.find("epsilon,") != std::string::npos);
  REQUIRE(contents.find("truncation_size,") != std::string::npos);
  REQUIRE((contents.find("termination,stagnated") != std::string::npos ||
           contents.find("termination,budget-exceeded") != std::string::npos));
}

TEST_CASE("malformed model files yield status 2 with a diagnostic") {
  fs::path bad = work_dir() / "bad.json";
  write_file(bad, R"({"kind": "gambler", "params": {"a": 0.5)");
  fs::path out = work_dir() / "never.csv";
  REQUIRE(run_cli("law --model " + bad.string() + " --steps 1 --tol 0.5 --out " + out.string()) ==
          2);

  fs::path unknown = work_dir() / "unknown_field.json";
  write_file(unknown,
             R"({"kind": "gambler", "params": {"a": 0.5, "K": 4}, "gamma": [[[2], 1.0]], "extra": 1})");
  REQUIRE(run_cli("law --model " + unknown.string() + " --steps 1 --tol 0.5 --out " +
                  out.string()) == 2);

  fs::path bad_row = work_dir() / "bad_row.json";
  write_file(bad_row,
             R"({"kind": "explicit-dt", "gamma": [[[0], 1.0]],
                 "rows": [[[0], [[[0], 0.5], [[1], 0.6]]], [[1], [[[1], 1.0]]]]})");
  REQUIRE(run_cli("law --model " + bad_row.string() + " --steps 1 --tol 0.5 --out " +
                  out.string()) == 2);
}

TEST_CASE("classify emits parseable JSON with classes and boundary states") {
  fs::path out = work_dir() / "classes.json";
  REQUIRE(run_cli("classify --model " + gambler_model().string() + " --trunc 0:20 --out " +
                  out.string()) == 0);
  nlohmann::json doc = nlohmann::json::parse(read_file(out));
  REQUIRE(doc["classes"].size() == 3);
  int closed = 0;
  for (const auto& cls : doc["classes"]) {
    if (cls["certified_closed"].get<bool>()) ++closed;
  }
  REQUIRE(closed == 2);
}

TEST_CASE("stationary emits per-class CSV plus a JSON summary") {
  fs::path out = work_dir() / "stationary.csv";
  REQUIRE(run_cli("stationary --model " + two_state_model().string() + " --trunc 0:1 --out " +
                  out.string()) == 0);
  std::string csv = read_file(out);
  REQUIRE(csv.find("0,0,0.5") != std::string::npos);
  nlohmann::json summary = nlohmann::json::parse(read_file(out.string() + ".summary.json"));
  REQUIRE(summary["classes"].size() == 1);
  REQUIRE(summary["requires_non_explosivity"].get<bool>());
}

TEST_CASE("exit command writes marginal blocks and a summary") {
  fs::path domain = work_dir() / "domain.json";
  write_file(domain, R"([[1],[2],[3],[4],[5]])");
  fs::path out = work_dir() / "exit.csv";
  fs::path model = work_dir() / "gambler6.json";
  write_file(model, R"({"kind": "gambler", "params": {"a": 0.5, "K": 6}, "gamma": [[[3], 1.0]]})");
  REQUIRE(run_cli("exit --model " + model.string() + " --domain-file " + domain.string() +
                  " --steps 200 --trunc 0:6 --out " + out.string()) == 0);
  std::string csv = read_file(out);
  REQUIRE(csv.find("mu_S,,6,0.4999999") != std::string::npos);
  REQUIRE(csv.find("exit_probability") != std::string::npos);
  REQUIRE(csv.find("mean_exit_time") != std::string::npos);

  REQUIRE(run_cli("exit --model " + model.string() + " --domain-file " + domain.string() +
                  " --marginals --trunc 0:6 --out " + out.string()) == 0);
  REQUIRE(read_file(out).find("assumed_finite_exit") != std::string::npos);

  fs::path ct_domain = work_dir() / "ct_domain.json";
  write_file(ct_domain, R"([[0]])");
  REQUIRE(run_cli("exit --model " + two_state_model().string() + " --domain-file " +
                  ct_domain.string() + " --time 2 --bins 8 --trunc 0:1 --out " + out.string()) ==
          0);
  std::string ct_csv = read_file(out);
  REQUIRE(ct_csv.find("bin_width,,,0.25") != std::string::npos);
  REQUIRE(ct_csv.find("atom_at_zero") != std::string::npos);
}

TEST_CASE("lyapunov command checks a certificate file") {
  fs::path cert = work_dir() / "cert.json";
  write_file(cert, R"({"kind": "ct-positive",
                       "v": {"type": "polynomial", "coeffs": [0.0, 1.0]},
                       "F": [[0]], "b": 2.0,
                       "tail_claim": "v has negative drift off 0 on all of N"})");
  fs::path model = work_dir() / "bd.json";
  write_file(model, R"({"kind": "birth-death",
                        "params": {"birth_coeffs": [1.0], "death_coeffs": [2.0]},
                        "gamma": [[[0], 1.0]]})");
  fs::path out = work_dir() / "cert_report.json";
  REQUIRE(run_cli("lyapunov --model " + model.string() + " --cert " + cert.string() +
                  " --trunc 0:30 --out " + out.string()) == 0);
  nlohmann::json doc = nlohmann::json::parse(read_file(out));
  REQUIRE(doc["verdict"] == "holds-on-truncation");
  REQUIRE(doc["worst_slack"].get<double>() == 0.0);
}

TEST_CASE("skeleton command writes the sampled transition matrix") {
  fs::path out = work_dir() / "skeleton.csv";
  REQUIRE(run_cli("skeleton --model " + two_state_model().string() +
                  " --time 0.5 --trunc 0:1 --out " + out.string()) == 0);
  std::string csv = read_file(out);
  REQUIRE(csv.find("from,to,prob") != std::string::npos);
  REQUIRE(csv.find("0,0,0.68393972") != std::string::npos);  // (1+e^-1)/2
  REQUIRE(csv.find(",dead,") != std::string::npos);
}

TEST_CASE("discrete simulate honors --steps and prints integer time indices") {
  fs::path out = work_dir() / "sim_dt.csv";
  REQUIRE(run_cli("simulate --model " + gambler_model().string() +
                  " --steps 5 --paths 2 --seed 3 --out " + out.string()) == 0);
  std::string csv = read_file(out);
  REQUIRE(csv.rfind("trajectory_id,k,state\n", 0) == 0);
  REQUIRE(csv.find("0,0,10") != std::string::npos);
  REQUIRE(csv.find("1,5,") != std::string::npos);
}
