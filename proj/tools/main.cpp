#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "commands.hpp"
#include "spdc/bathfit.hpp"
#include "spdc/errors.hpp"

#ifndef SPDC_DEFAULT_CONFIG
#define SPDC_DEFAULT_CONFIG "data/defaults.conf"
#endif

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, convergence_error = 3, data_error = 4 };

struct Flags {
  std::string config = SPDC_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> bootstrap;
  std::vector<double> power_sweep;
  std::optional<int> fock_dim;
  bool nondeterministic = false;
  bool quiet = false;
};

spdc::cli::Context make_context(const Flags& f) {
  auto table = spdc::config::parse_file(f.config);
  if (f.trials) table.set("tomo.conditional", std::to_string(*f.trials));
  if (f.bootstrap) table.set("tomo.bootstrap", std::to_string(*f.bootstrap));
  if (f.fock_dim) table.set("simulation.fock_dim", std::to_string(*f.fock_dim));
  if (!f.out.empty()) table.set("run.out", f.out);
  if (f.seed) table.set("run.seed", std::to_string(*f.seed));

  spdc::cli::Context ctx;
  ctx.cfg = spdc::config::build(table);
  if (ctx.cfg.seed) {
    ctx.seed = *ctx.cfg.seed;
  } else if (f.nondeterministic) {
    std::random_device rd;
    ctx.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  } else {
    throw spdc::ConfigError("no seed given: pass --seed N, set run.seed, or pass --nondeterministic");
  }
  ctx.out = ctx.cfg.out;
  ctx.power_sweep = f.power_sweep;
  ctx.quiet = f.quiet;
  std::filesystem::create_directories(ctx.out);
  return ctx;
}

int run(const Flags& flags, int (*command)(spdc::cli::Context&)) {
  try {
    auto ctx = make_context(flags);
    return command(ctx);
  } catch (const spdc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const spdc::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const spdc::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return convergence_error;
  } catch (const spdc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and heterodyne analysis of a microwave-optical SPDC transducer"};
  app.require_subcommand(1);
  Flags flags;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Seed for all randomness");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_flag("--nondeterministic", flags.nondeterministic, "Allow a random seed (recorded in the outputs)");
    sub->add_flag("-q,--quiet", flags.quiet, "Only write files");
  };

  int (*command)(spdc::cli::Context&) = nullptr;

  auto* simulate = app.add_subcommand("simulate", "Unconditional and heralded traces, g2_AC(tau_o)");
  common(simulate);
  simulate->add_option("--power-sweep", flags.power_sweep, "Peak n_a values; runs a power sweep instead")
      ->delimiter(',');
  simulate->add_option("--fock-dim", flags.fock_dim, "Fock dimension per mode")->check(CLI::Range(2, 200));
  simulate->callback([&] { command = spdc::cli::cmd_simulate; });

  auto* sweep = app.add_subcommand("sweep", "g2_AC(tau_o) versus peak pump occupation");
  common(sweep);
  sweep->add_option("--power-sweep", flags.power_sweep, "Peak n_a values")->delimiter(',');
  sweep->add_option("--fock-dim", flags.fock_dim, "Fock dimension per mode")->check(CLI::Range(2, 200));
  sweep->callback([&] { command = spdc::cli::cmd_sweep; });

  auto* tomo = app.add_subcommand("tomo", "Moment inversion and bootstrapped correlations");
  common(tomo);
  tomo->add_option("--trials", flags.trials, "Conditional (heralded) records");
  tomo->add_option("--bootstrap", flags.bootstrap, "Bootstrap resamples");
  tomo->add_option("--fock-dim", flags.fock_dim, "Fock dimension per mode")->check(CLI::Range(2, 200));
  tomo->callback([&] { command = spdc::cli::cmd_tomo; });

  auto* fit = app.add_subcommand("fit-baths", "Bath occupations from emission traces");
  common(fit);
  fit->callback([&] { command = spdc::cli::cmd_fit_baths; });

  auto* budget = app.add_subcommand("budget", "Herald click budget");
  common(budget);
  budget->callback([&] { command = spdc::cli::cmd_budget; });

  auto* gain = app.add_subcommand("calibrate-gain", "Heterodyne chain gain from a conversion measurement");
  common(gain);
  gain->callback([&] { command = spdc::cli::cmd_calibrate_gain; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }
  return run(flags, command);
}
