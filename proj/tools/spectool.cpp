#include <CLI11.hpp>

#include "spectool/commands.hpp"
#include "spectool/error.hpp"

namespace {

void add_common(CLI::App* app, spectool::cli::RunOptions& opts) {
  app->add_option("--config", opts.config, "JSON configuration file")->required();
  app->add_option("--out", opts.out, "output directory")->required();
  app->add_option("--seed", opts.seed, "overrides the configuration seed");
  app->add_option("--threads", opts.threads, "OpenMP threads (default: $SPECTOOL_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral filters, FRT partitions, stability sweeps and the wireless experiment"};
  app.set_version_flag("--version", spectool::cli::kToolVersion);
  app.require_subcommand(1);
  spectool::cli::RunOptions opts;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, gamma partition and gap profile");
  add_common(spectrum, opts);
  auto* stability = app.add_subcommand("stability", "perturbation sweep against the stability bound");
  add_common(stability, opts);

  auto* wireless = app.add_subcommand("wireless", "power-allocation policy experiment");
  wireless->require_subcommand(1);
  for (const char* name : {"train", "evaluate", "robustness"}) {
    auto* sub = wireless->add_subcommand(name);
    add_common(sub, opts);
    if (std::string(name) != "train") {
      sub->add_option("--model", opts.model, "model.json written by wireless train");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(spectool::ExitCode::kUsage);
  }

  for (auto* sub : app.get_subcommands()) {
    opts.command = sub->get_name();
    for (auto* inner : sub->get_subcommands()) opts.subcommand = inner->get_name();
  }
  return spectool::cli::run_and_report(opts);
}
