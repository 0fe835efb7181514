// rara: theory grids, Monte-Carlo sweeps and detector experiments for
// relay-aided random access.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace {

void add_value(CLI::App& app, const std::string& flags, std::optional<std::string>& target,
               const std::string& help) {
  app.add_option_function<std::string>(
         flags, [&target](const std::string& v) { target = v; }, help)
      ->type_name("TEXT");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rara::cli;

  CLI::App app{"Relay-aided random access experiments", "rara"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file mirroring the long flags");

  RawSpec raw;
  add_value(app, "--lambda", raw.lambda, "Traffic grid: 0.8 | 0.2,0.8 | 0.1:1.5:0.1");
  add_value(app, "--m", raw.m, "Relay-count grid: 10 | 1,5,10 | 1:30");
  add_value(app, "--k", raw.k, "Device-count grid for phy (default 1..M+1)");
  add_value(app, "--epsilon", raw.epsilon, "Idle session length in (0, 1] (default 0.1)");
  add_value(app, "--sessions", raw.sessions, "Simulated sessions per grid point (default 1e6)");
  add_value(app, "--trials", raw.trials, "Detector trials per phy point (default 1e4)");
  add_value(app, "--seed", raw.seed, "Base seed (default 0)");
  add_value(app, "--snr-db", raw.snr_db, "Per-observation SNR in dB (phy, --rule phy)");
  add_value(app, "--out", raw.out, "Output path (default stdout)");
  add_value(app, "--format", raw.format, "csv | json (default csv)");
  add_value(app, "--arrivals", raw.arrivals, "poisson | finite (40*M devices)");
  add_value(app, "--rule", raw.rule, "threshold | phy decoding rule for sim/compare");
  add_value(app, "--threads", raw.threads, "Worker threads (0 = all cores)");

  for (const char* mode : {"theory", "sim", "compare", "phy"}) {
    app.add_subcommand(mode)->callback([&raw, mode] { raw.mode = mode; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "rara: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  ExperimentSpec spec;
  try {
    spec = validate_spec(raw);
  } catch (const SpecError& e) {
    for (const auto& p : e.problems()) std::cerr << "rara: invalid " << p << "\n";
    return kExitValidation;
  }

  Table table;
  try {
    table = run_experiment(spec);
  } catch (const std::exception& e) {
    std::cerr << "rara: " << e.what() << "\n";
    return kExitValidation;
  }

  const std::string text = render(table, spec.format);
  if (spec.output_path.empty() || spec.output_path == "-") {
    std::cout << text;
    std::cout.flush();
    return std::cout ? kExitOk : kExitIo;
  }
  try {
    write_output(text, spec.output_path);
  } catch (const OutputError& e) {
    std::cerr << "rara: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
