#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "purcell/commands.hpp"

namespace fs = std::filesystem;
using namespace purcell;

namespace {

const fs::path kConfigs = PURCELL_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("purcell_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "purcell_cli_test_configs";
  fs::create_directories(dir);
  const fs::path p = dir / (name + ".json");
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json report(const fs::path& out) { return nlohmann::json::parse(slurp(out / "run_report.json")); }

struct Run {
  int code;
  std::string err;
};

Run run(const std::string& command, const fs::path& config, const fs::path& out) {
  std::ostringstream err;
  const int code = cli::run(command, config, out, std::nullopt, err);
  return {code, err.str()};
}

// Rows of a headed CSV as column-name -> cell maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return cells;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

int shell(const std::string& args) {
  const int status = std::system((std::string("\"") + PURCELL_CLI_PATH + "\" " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallReadout = R"({"readout": {"seed": 3, "shots": 20000, "matrix_shots": 2000,
  "pulses": [{"label": "a", "t1_us": 20, "separation_error": 0.001},
             {"label": "b", "t1_us": 25, "separation_error": 0.0005}],
  "crosstalk": [[0, 0.02], [0.02, 0]]}})";

}  // namespace

TEST_CASE("binary exit codes") {
  const auto cfg = write_config("small_readout", kSmallReadout);
  const auto out = scratch("binary");
  CHECK(shell("--version") == 0);
  CHECK(shell("readout --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 0);
  CHECK(fs::exists(out / "run_report.json"));
  CHECK(shell("readout") == 1);
  CHECK(shell("bogus --config x --out y") == 1);
  CHECK(shell("readout --config \"" + cfg.string() + "\" --out \"" + out.string() + "\" --seed-override 5") == 0);
  CHECK(report(out)["seeds"]["readout"] == 5);

  const auto bad = write_config("bad_binary", R"({"readout": {"seed": 1, "pulses": [{"label": "q"}]}})");
  CHECK(shell("readout --config \"" + bad.string() + "\" --out \"" + scratch("binary_bad").string() + "\"") == 1);
}

TEST_CASE("config errors exit 1 without writing anything") {
  const auto bad = write_config("missing_snr", R"({"readout": {"seed": 1, "pulses": [{"label": "Q9"}]}})");
  const auto out = scratch("config_error");
  const auto r = run("readout", bad, out);
  CHECK(r.code == cli::kConfigFailure);
  CHECK(r.err.find("Q9") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  const auto no_section = write_config("no_leakage", kSmallReadout);
  CHECK(run("leakage", no_section, out).code == cli::kConfigFailure);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("numerical failure exits 2") {
  const auto cfg = write_config("unreachable", R"({"multiplex": {"variants": [{"name": "v", "variant": "variable",
    "input_coupling_ff": 80, "tap_fraction": 0.75,
    "bands": [{"label": "a", "center_ghz": 6.3, "span_mhz": 200, "count": 2, "target_linewidth_mhz": 5000}],
    "regimes": [{"name": "on", "squid_inductance_nh": 0.65, "reads_band": "a"}]}]}})");
  CHECK(run("multiplex", cfg, scratch("numerical")).code == cli::kNumericalFailure);
}

TEST_CASE("reruns are byte-identical") {
  const auto cfg = write_config("small_readout", kSmallReadout);
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  REQUIRE(run("readout", cfg, a).code == 0);
  REQUIRE(run("readout", cfg, b).code == 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    ++files;
  }
  CHECK(files >= 5);
}

TEST_CASE("zero SNR gives fidelity one half") {
  const auto cfg = write_config("zero_snr", R"({"readout": {"seed": 4, "shots": 100000,
    "pulses": [{"label": "q", "snr": 0}]}})");
  const auto out = scratch("zero_snr");
  REQUIRE(run("readout", cfg, out).code == 0);
  CHECK(std::abs(report(out)["summary"]["fidelity"]["q"].get<double>() - 0.5) < 0.006);
}

TEST_CASE("sweep skips the singular bias and tunes the linewidth") {
  const auto out = scratch("sweep");
  const auto r = run("sweep", kConfigs / "sweep.json", out);
  REQUIRE(r.code == 0);
  CHECK(r.err.find("0.5 Phi0 skipped") != std::string::npos);
  const auto rows = read_csv(out / "filter_peaks.csv");
  double k_zero = 0.0, k_on = 0.0;
  for (const auto& row : rows) {
    CHECK(row.at("phi_over_phi0") != "0.5");
    if (row.at("phi_over_phi0") == "0") k_zero = std::stod(row.at("kappa_mhz"));
    if (row.at("phi_over_phi0") == "0.4006") k_on = std::stod(row.at("kappa_mhz"));
  }
  REQUIRE(k_zero > 0.0);
  CHECK(k_on / k_zero == doctest::Approx(5.3).epsilon(0.2));
  for (const auto& row : read_csv(out / "tuning.csv")) CHECK(row.at("phi_over_phi0") != "0.5");
}

TEST_CASE("zero-rate leakage chain") {
  const auto cfg = write_config("zero_rate", R"({"leakage": {"seed": 2, "cycles": 50, "pi_qnd_shots": 500,
    "random_sequences": 20, "random_shots": 10, "repeats": 2,
    "chains": [{"label": "still", "leak_rate": 0, "seep_rate": 0}]}})");
  const auto out = scratch("zero_rate");
  REQUIRE(run("leakage", cfg, out).code == 0);
  const auto s = report(out)["summary"]["chains"]["still"];
  CHECK(s["pi_qnd"]["zero_rate"] == true);
  CHECK(s["random_circuit"]["zero_rate"] == true);
}

TEST_CASE("single-regime multiplex") {
  const auto cfg = write_config("single_regime", R"({"multiplex": {"variants": [{"name": "solo", "variant": "variable",
    "input_coupling_ff": 80, "tap_fraction": 0.75,
    "bands": [{"label": "a", "center_ghz": 6.3, "span_mhz": 200, "count": 3, "target_linewidth_mhz": 10}],
    "regimes": [{"name": "on", "squid_inductance_nh": 0.65, "reads_band": "a"}]}]}})");
  const auto out = scratch("single_regime");
  REQUIRE(run("multiplex", cfg, out).code == 0);
  CHECK(report(out)["summary"]["variants"]["solo"]["on_off_ratio"]["a"].is_null());
  CHECK(read_csv(out / "multiplex_solo.csv").size() == 3);
}

TEST_CASE("multiplex writes one report per variant") {
  const auto out = scratch("multiplex");
  REQUIRE(run("multiplex", kConfigs / "multiplex.json", out).code == 0);
  for (const char* v : {"variable", "fixed"}) {
    CAPTURE(v);
    CHECK(fs::exists(out / (std::string("multiplex_") + v + ".txt")));
    CHECK(fs::exists(out / (std::string("protection_") + v + ".csv")));
  }
  const auto ratios = report(out)["summary"]["variants"];
  CHECK(ratios["variable"]["on_off_ratio"]["ancilla"].get<double>() >
        ratios["fixed"]["on_off_ratio"]["ancilla"].get<double>());
}
