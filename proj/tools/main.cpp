#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metagrad/runner.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_set = false;
};

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (TOML-style)")
      ->required();
  cmd->add_option("--seed", args.seed, "override the config's seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the config's output directory")
      ->each([&args](const std::string&) { args.out_set = true; });
}

int run(const std::string& verb, const CliArgs& args) {
  metagrad::ExperimentConfig cfg = metagrad::parse_config(args.config_path);
  if (std::string(metagrad::experiment_kind_name(cfg.kind)) != verb)
    throw metagrad::ConfigError("config kind '" +
                                std::string(metagrad::experiment_kind_name(cfg.kind)) +
                                "' does not match command '" + verb + "'");
  if (args.seed_set) cfg.seed = args.seed;
  if (args.out_set) cfg.out_dir = args.out_dir;

  const metagrad::RunOutputs outputs = metagrad::run_experiment(cfg);
  for (const std::string& f : outputs.files) std::cout << "wrote " << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meta-learning as unified gradient-based optimization: experiments"};
  app.require_subcommand(1);
  CliArgs args;

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"toy", "1-d two-task landscape convergence for all three algorithms"},
      {"train", "meta-train one model and save the best checkpoint"},
      {"eval", "adapt a checkpoint on meta-test episodes and report per-step metrics"},
      {"ablate-head", "compare learned vs freshly randomized output layers"},
      {"sweep-k", "vary support size at meta-training, evaluate 1-shot"},
      {"joint-acc", "non-episodic meta-test head accuracy over a frozen body"},
      {"correlate", "joint accuracy vs few-shot accuracy across settings"},
  };
  for (const auto& [name, desc] : verbs) add_common(app.add_subcommand(name, desc), args);

  CLI11_PARSE(app, argc, argv);

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, args);
  } catch (const metagrad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const metagrad::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const metagrad::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
