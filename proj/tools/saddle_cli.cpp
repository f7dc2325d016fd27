// saddle: run, verify and replay experiments; evaluate closed-form bounds.
//
//   saddle run <config.json> [--out DIR]
//   saddle verify [--problems N] [--iterations N] [--seed S]
//   saddle bound <pp|ogda|eg> --D d --L l [--eta e] [--sigma s] --N n
//   saddle replay <config.json>
//
// Thread count comes from SADDLE_THREADS; everything else lives in the config.

#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "saddle/experiment.hpp"

namespace ex = saddle::experiment;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
  ex::ExperimentConfig config = ex::load_config(config_path);
  if (!out_override.empty()) config.output_dir = out_override;
  ex::RunSettings settings;
  settings.threads = ex::threads_from_environment();
  return ex::run_experiments(config, settings, std::cout);
}

int cmd_bound(const std::string& theorem_name, const saddle::BoundConstants& constants,
              bool have_eta, bool have_sigma) {
  const saddle::Theorem theorem = saddle::theorem_from_string(theorem_name);
  if (theorem == saddle::Theorem::eg && !have_sigma) {
    throw saddle::ConfigError("eg bound needs --sigma");
  }
  if (theorem != saddle::Theorem::eg && !have_eta) {
    throw saddle::ConfigError(theorem_name + " bound needs --eta");
  }
  std::cout << fmt::format("{:.15g}", saddle::bound_value(theorem, constants)) << '\n';
  return ex::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-concave saddle-point solvers with convergence certificates"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run every scenario of a config and write certificates");
  run->add_option("config", config_path, "config file (JSON)")->required();
  run->add_option("--out", out_dir, "override the output directory");

  ex::VerifyOptions verify_opt;
  auto* verify = app.add_subcommand("verify", "property battery over a seeded problem set");
  verify->add_option("--problems", verify_opt.problems, "number of problems")
      ->capture_default_str();
  verify->add_option("--iterations", verify_opt.iterations, "iterations per run")
      ->capture_default_str();
  verify->add_option("--seed", verify_opt.base_seed, "seed of the first problem")
      ->capture_default_str();
  verify->add_option("--pairs", verify_opt.operator_pairs, "sampled pairs for operator checks")
      ->capture_default_str();
  verify->add_flag("--inject-fault", verify_opt.inject_ogda_stepsize_fault)->group("");

  std::string theorem;
  saddle::BoundConstants constants;
  auto* bound = app.add_subcommand("bound", "evaluate a closed-form gap bound");
  bound->add_option("theorem", theorem, "pp, ogda or eg")->required();
  bound->add_option("--D", constants.d, "squared initial distance to the saddle point")->required();
  bound->add_option("--L", constants.l, "Lipschitz constant");
  auto* eta_opt = bound->add_option("--eta", constants.eta, "stepsize");
  auto* sigma_opt = bound->add_option("--sigma", constants.sigma, "eta * L for eg");
  bound->add_option("--N", constants.n, "iteration count")->required();

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "cross-check solvers against the naive replay");
  replay->add_option("config", replay_path, "config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ex::kExitOk : ex::kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*verify) return ex::verify_suite(verify_opt, std::cout);
    if (*bound) return cmd_bound(theorem, constants, eta_opt->count() > 0, sigma_opt->count() > 0);
    if (*replay) return ex::replay_experiments(ex::load_config(replay_path), std::cout);
  } catch (const ex::ConfigParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kExitUsage;
  } catch (const saddle::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kExitFailure;
  }
  return ex::kExitUsage;
}
