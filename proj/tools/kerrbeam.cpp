#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kerrbeam/app/commands.hpp"

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::vector<std::string> overrides;
  std::string out;
  std::string input;
};

void add_common(CLI::App* sub, Args& args) {
  sub->add_option("--config", args.config, "configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "master seed (overrides run.seed)");
  sub->add_option("--threads", args.threads, "worker threads, 0 = all cores");
  sub->add_option("--set", args.overrides, "override a config entry, section.key=value")->allow_extra_args(false);
  sub->add_option("--out", args.out, "output directory (default: run.output_dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kerr squeezing in an atom-laser beam: single-mode, Wigner and beam models"};
  app.set_version_flag("--version", std::string(kerrbeam::app::kVersion));
  app.require_subcommand(1);

  Args args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"single-mode", "phase-optimised single-mode Kerr squeezing traces"},
      {"twa", "Wigner ensemble of the Raman-outcoupled beam with windowed quadratures"},
      {"analyze", "quadrature statistics from saved field snapshots"},
      {"beam3d", "falling-beam prediction with a time-dependent nonlinearity"},
      {"two-beam", "intensity noise after mixing with a weaker reference beam"},
      {"convergence", "dt and dz halving report"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, args);
    if (name == "analyze") sub->add_option("--input", args.input, "directory holding snap_*.fld (default: --out)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = kerrbeam::app::RunConfig::from_file(args.config, args.overrides, args.seed);
    const std::string out_dir = args.out.empty() ? cfg.output_dir() : args.out;
    kerrbeam::app::CommandOptions opt;
    opt.threads = args.threads;
    opt.input_dir = args.input;
    const auto status = kerrbeam::app::run_command(command, cfg, out_dir, opt);
    std::cerr << command << ": " << status.summary << " -> " << out_dir << '\n';
    return status.validated ? 0 : 2;
  } catch (const kerrbeam::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const kerrbeam::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << command << " failed: " << e.what() << '\n';
    return 3;
  }
}
