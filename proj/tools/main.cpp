// omlr: command-line front end for the online mixed-linear-regression library.
//
//   omlr simulate      [--config f] [--seed s] [--out dir] [--replications n]
//   omlr fit-sym       [... --whiten --input stream.csv]
//   omlr fit-asym      [... --whiten --input stream.csv]
//   omlr fit-pop-em    [... --input stream.csv]
//   omlr ode           [--config f] [--seed s] [--out dir]
//   omlr experiment fig1|fig2|bounds [...]
//
// Exit status: 0 on success, 1 when an experiment-level check fails,
// 2 on configuration or input errors.

#include "omlr/errors.hpp"
#include "omlr/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> replications;
  bool whiten = false;
  std::string input;
  std::string experiment;
};

void add_common(CLI::App* cmd, Options& o, bool fit) {
  cmd->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--replications", o.replications, "Number of replications")->check(CLI::PositiveNumber);
  cmd->add_flag("--whiten", o.whiten, "Whiten regressors with the running covariance");
  if (fit) cmd->add_option("--input", o.input, "Read observations from a stream CSV")->check(CLI::ExistingFile);
}

omlr::ExperimentConfig resolve(const Options& o, const omlr::ExperimentConfig& base) {
  omlr::ExperimentConfig c = o.config.empty() ? base : omlr::load_config(o.config, base);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.replications) c.replications = *o.replications;
  if (o.whiten) c.whiten = true;
  c.validate();
  return c;
}

std::vector<omlr::Observation> read_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw omlr::InputError("cannot open " + path);
  return omlr::read_stream_csv(is);
}

int report(const omlr::ExperimentOutcome& outcome, std::chrono::steady_clock::time_point start) {
  for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
  for (const auto& c : outcome.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ')';
    std::cout << '\n';
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::cerr << "elapsed " << elapsed.count() << " s\n";
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online EM for two-component mixed linear regression"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Generate an observation stream");
  auto* fit_sym = app.add_subcommand("fit-sym", "Online EM on the symmetric model");
  auto* fit_asym = app.add_subcommand("fit-asym", "Two-step online EM on the general model");
  auto* fit_pop = app.add_subcommand("fit-pop-em", "Batch population EM baseline");
  auto* ode = app.add_subcommand("ode", "Integrate the mean-field ODE");
  auto* experiment = app.add_subcommand("experiment", "Run a packaged experiment");
  add_common(simulate, o, false);
  add_common(fit_sym, o, true);
  add_common(fit_asym, o, true);
  add_common(fit_pop, o, true);
  add_common(ode, o, false);
  add_common(experiment, o, false);
  experiment->add_option("name", o.experiment, "fig1, fig2 or bounds")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "bounds"}));

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  try {
    if (simulate->parsed()) return report(omlr::run_simulate(resolve(o, omlr::default_config())), start);
    if (fit_sym->parsed()) {
      const auto c = resolve(o, omlr::default_symmetric_config());
      if (o.input.empty()) return report(omlr::run_fit_sym(c), start);
      const auto data = read_input(o.input);
      return report(omlr::run_fit_sym(c, &data), start);
    }
    if (fit_asym->parsed() || fit_pop->parsed()) {
      const auto c = resolve(o, omlr::default_config());
      const auto run = fit_asym->parsed() ? omlr::run_fit_asym : omlr::run_fit_pop_em;
      if (o.input.empty()) return report(run(c, nullptr), start);
      const auto data = read_input(o.input);
      return report(run(c, &data), start);
    }
    if (ode->parsed()) return report(omlr::run_ode(resolve(o, omlr::default_config())), start);
    if (o.experiment == "fig1") return report(omlr::run_fig1(resolve(o, omlr::default_config())), start);
    if (o.experiment == "fig2") {
      auto base = omlr::default_config();
      base.init.kind = omlr::InitPolicy::Kind::kappa_box;
      base.replications = 500;
      return report(omlr::run_fig2(resolve(o, base)), start);
    }
    return report(omlr::run_bounds(resolve(o, omlr::default_config())), start);
  } catch (const std::invalid_argument& e) {
    std::cerr << "omlr: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "omlr: " << e.what() << '\n';
    return 3;
  }
}
