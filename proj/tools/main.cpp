#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cdist/config.hpp"
#include "cdist/experiment.hpp"

namespace {

struct CommandSpec {
  const char* name;
  const char* help;
};

constexpr CommandSpec kCommands[] = {
    {"gen-data", "generate the train/test datasets"},
    {"train-teacher", "train the teacher network on the training set"},
    {"cache-scores", "cache teacher logits for every training example"},
    {"distill", "train a student against the cached teacher scores"},
    {"sweep", "sweep the delegation threshold and emit the trade-off curve"},
    {"report", "tabulate all distilled students with their natural routing"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distillation-based two-stage inference toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  for (const CommandSpec& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "override out_dir from the config");
    sub->add_option("--seed", seed, "override seed from the config");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  try {
    cdist::ExperimentConfig cfg = cdist::load_config(config_path);
    if (sub->count("--out") > 0) cfg.out_dir = out_dir;
    if (sub->count("--seed") > 0) cfg.seed = seed;
    cdist::run_command(sub->get_name(), cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
