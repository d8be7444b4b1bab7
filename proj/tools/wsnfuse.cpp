// Command-line front end: wsnfuse <roc|bounds|power|aml-loop|validate> [flags]
#include <CLI11.hpp>

#include <iostream>

#include "wsnfuse/harness/commands.hpp"

int main(int argc, char** argv) {
  using namespace wsnfuse;
  CLI::App app{"Fusion-rule simulation for clustered sensor networks"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config file");
    sub->add_option("--seed", seed, "override config seed");
    sub->add_option("--trials", trials, "override trials per hypothesis")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--rules", opts.rules, "comma-separated rules (CR,CR-Z,OCR,LLR,LFR,LFR-aML,LFR-PA)");
    sub->add_option("--threads", opts.threads, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  int (*handler)(const CommandOptions&, std::ostream&) = nullptr;
  auto* roc = app.add_subcommand("roc", "ROC curve per rule");
  auto* bounds = app.add_subcommand("bounds", "empirical LFR tail against the Gaussian-tail bound");
  auto* power = app.add_subcommand("power", "optimal CH powers and saving over the D1 sweep");
  auto* aml = app.add_subcommand("aml-loop", "estimation / detection / allocation rounds");
  auto* validate = app.add_subcommand("validate", "run the property self-check");
  for (auto* s : {roc, bounds, power, aml, validate}) add_common(s);
  roc->callback([&] { handler = cmd_roc; });
  bounds->callback([&] { handler = cmd_bounds; });
  power->callback([&] { handler = cmd_power; });
  aml->callback([&] { handler = cmd_aml_loop; });
  validate->callback([&] { handler = cmd_validate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  for (auto* s : app.get_subcommands()) {
    if (s->count("--seed") > 0) opts.seed = seed;
    if (s->count("--trials") > 0) opts.trials = trials;
  }
  return guarded([&] { return handler(opts, std::cout); }, std::cerr);
}
