#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "purcell/commands.hpp"
#include "purcell/rng.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tunable Purcell filter readout toolkit"};
  app.set_version_flag("--version", purcell::cli::kToolVersion);
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for Monte Carlo (0: all cores)");

  const std::pair<const char*, const char*> commands[] = {
      {"sweep", "Filter tuning curve and S21 spectra over flux bias"},
      {"readout", "Monte Carlo readout fidelity, histograms and assignment matrix"},
      {"leakage", "Planted leakage/seepage rates recovered by pi-QND and random-circuit fits"},
      {"multiplex", "Per-regime resonator linewidths for multiplexed filter variants"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed-override", seed_override, "Replace every seed in the configuration");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : purcell::cli::kConfigFailure;
  }
  purcell::rng::set_thread_count(threads);
  const std::string command = app.get_subcommands().front()->get_name();
  return purcell::cli::run(command, config, out, seed_override, std::cerr);
}
