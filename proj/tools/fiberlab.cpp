#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fiberlab/config.hpp"
#include "fiberlab/flops.hpp"
#include "fiberlab/harness.hpp"
#include "fiberlab/zoo.hpp"

using namespace fiberlab;

namespace {

struct ExperimentFlags {
  std::string config;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_cache = false;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment config (overrides the profile)");
    app->add_option("--profile", profile, "Base profile")->check(CLI::IsMember({"desk", "paper"}));
    app->add_option("--seed", seed, "Experiment seed");
    app->add_option("--out", out, "Output directory");
    app->add_flag("--no-cache", no_cache, "Regenerate training datasets");
    app->add_flag("--quiet", quiet, "No progress on stderr");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? profile_config(profile) : load_config(config, profile);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();
    return cfg;
  }

  RunOptions options() const {
    RunOptions o;
    o.use_cache = !no_cache;
    o.progress = quiet ? nullptr : &std::cerr;
    return o;
  }
};

struct ArchFlags {
  std::string arch = "crnn";
  std::string arch_file;
  int rx_mode = 1;
  int memory = 0;
  std::size_t units = 0;

  void attach(CLI::App* app) {
    app->add_option("--arch", arch, "Catalog model name");
    app->add_option("--arch-file", arch_file, "Architecture text file (overrides --arch)");
    app->add_option("--rx-mode", rx_mode, "Receiver mode")->check(CLI::IsMember({1, 2}));
    app->add_option("--memory", memory, "Channel memory in symbols (0 keeps the default)");
    app->add_option("--units", units, "Recurrent width replacing the catalog value");
  }

  ArchSpec resolve() const {
    ArchSpec a = arch_file.empty() ? catalog(arch, rx_mode) : load_arch(arch_file);
    if (memory > 0) a.memory = memory;
    if (units > 0) a = with_recurrent_units(a, units);
    return a;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-optic link simulator and neural equalizer benchmark"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Launch-power sweep over all configured equalizers");
  run_flags.attach(run_cmd);

  ExperimentFlags sweep_flags;
  std::string sweep_arch = "crnn";
  std::vector<std::size_t> grid;
  CLI::App* sweep_cmd = app.add_subcommand("sweep-units", "Q gain over linear against recurrent width");
  sweep_flags.attach(sweep_cmd);
  sweep_cmd->add_option("--arch", sweep_arch, "Catalog model name or arch file");
  sweep_cmd->add_option("--grid", grid, "Recurrent widths")->required()->delimiter(',');

  ArchFlags flops_flags;
  std::size_t eta = 4;
  CLI::App* flops_cmd = app.add_subcommand("flops", "Per-layer cost table as CSV");
  flops_flags.attach(flops_cmd);
  flops_cmd->add_option("--eta", eta, "FLOPs per non-linear activation");

  ArchFlags dump_flags;
  bool shapes = false;
  CLI::App* dump_cmd = app.add_subcommand("dump-arch", "Print an architecture in the text format");
  dump_flags.attach(dump_cmd);
  dump_cmd->add_flag("--shapes", shapes, "Also print the inferred shape chain");

  ExperimentFlags show_flags;
  CLI::App* show_cmd = app.add_subcommand("show-config", "Print the resolved config as canonical JSON");
  show_flags.attach(show_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const ExperimentConfig cfg = run_flags.resolve();
      const RunReport r = run(cfg, run_flags.options());
      std::cerr << "wrote " << r.rows.size() << " rows to " << cfg.output_dir << "/results.csv\n";
    } else if (*sweep_cmd) {
      const ExperimentConfig cfg = sweep_flags.resolve();
      sweep_units(cfg, sweep_arch, grid, sweep_flags.options());
      std::cerr << "wrote " << cfg.output_dir << "/units_sweep.csv\n";
    } else if (*flops_cmd) {
      CostModel cm;
      cm.eta = eta;
      write_cost_csv(std::cout, model_cost(flops_flags.resolve(), cm));
    } else if (*dump_cmd) {
      const ArchSpec a = dump_flags.resolve();
      write_arch(std::cout, a);
      if (shapes) {
        const auto chain = infer_shapes(a, window_shape(a.memory, rx_input_sps(a.rx_mode)));
        for (std::size_t i = 0; i < chain.size(); ++i) {
          std::cout << "# " << (i + 1 == chain.size() ? std::string("head") : std::to_string(i)) << ' '
                    << chain[i].in.str() << " -> " << chain[i].out.str() << '\n';
        }
      }
    } else if (*show_cmd) {
      std::cout << config_to_json(show_flags.resolve());
    }
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
