// Command-line front end: cylbif <subcommand> [--config file] [--out dir] [--threads n] [--seed s]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cylbif/cli/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation of one-dimensional nodal solutions on thin cylinders"};
  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  cylbif::cli::RunOptions opts;

  std::string names;
  for (const auto& s : cylbif::cli::subcommands()) names += (names.empty() ? "" : ", ") + s;
  app.add_option("subcommand", subcommand, "one of: " + names)->required();
  app.add_option("--config", config_path, "JSON config; omitted keys take their defaults");
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "seed for the randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cylbif::cli::kUsage;
  }

  cylbif::cli::RunConfig cfg;
  try {
    cfg = config_path.empty() ? cylbif::cli::parse_config(cylbif::cli::json::object())
                              : cylbif::cli::load_config(config_path);
  } catch (const cylbif::Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return cylbif::cli::kValidation;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  return cylbif::cli::run(subcommand, cfg, opts);
}
