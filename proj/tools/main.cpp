#include <CLI11.hpp>
#include <iostream>

#include "app.hpp"
#include "heatlaw/version.hpp"

int main(int argc, char** argv) {
  using namespace heatlaw::app;
  CLI::App cli{"Heat-variation laws for two-time measurements: exact finite models, van Hove, classical models"};
  cli.set_version_flag("--version", heatlaw::kVersion);
  cli.require_subcommand(1);

  RunOptions opt;
  std::vector<std::pair<CLI::App*, std::string>> subs;
  auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& id) {
    CLI::App* s = parent->add_subcommand(name, help);
    s->add_option("--config", opt.config_path, "experiment file (TOML)")->check(CLI::ExistingFile);
    s->add_option("--seed", opt.seed, "RNG seed, overrides the config");
    s->add_option("--threads", opt.threads, "worker thread cap")->check(CLI::PositiveNumber);
    s->add_option("--out", opt.out_dir, "output directory");
    subs.emplace_back(s, id);
    return s;
  };
  CLI::App* vh = add(&cli, "vanhove", "exact van Hove law: characteristic function, moments, equivalence scans", "vanhove");
  add(vh, "sample", "draw heat samples from the van Hove law", "vanhove-sample");
  add(&cli, "classical", "linear or harmonic classical model", "classical");
  add(&cli, "ttm", "two-time measurement law of a finite model", "ttm");
  add(&cli, "fermion-impurity", "fermionic impurity moment growth over bath size and time", "fermion-impurity");
  add(&cli, "boson-oscillator", "bosonic impurity moment growth over bath size and time", "boson-oscillator");
  add(&cli, "tl-convergence", "truncated models against the thermodynamic limit", "tl-convergence");
  add(&cli, "tails", "tail diagnostics of a sample file", "tails");
  add(&cli, "lemmas", "one-particle estimates on random instances", "lemmas");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kExitConfig;
  }
  // deepest parsed subcommand wins: "vanhove sample" before "vanhove"
  std::string command;
  for (auto it = subs.rbegin(); it != subs.rend() && command.empty(); ++it)
    if (it->first->parsed()) command = it->second;
  if (opt.config_path.empty()) {
    std::cerr << "--config is required\n";
    return kExitConfig;
  }
  return run(command, opt);
}
