// uavrelay: experiment runner, single-scenario trace and scenario generator.

#include <uavrelay/uavrelay.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace uavrelay;

namespace {

int cmd_run(const std::string& spec_path, const std::string& out, int trials, long long seed, int parallel,
            bool resume) {
  auto spec = experiment::load_spec(spec_path);
  if (trials > 0) spec.trials = trials;
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
  experiment::RunOptions opt;
  opt.out_dir = out;
  opt.parallel = parallel;
  opt.resume = resume;
  const auto res = experiment::run(spec, opt);
  if (res.resumed_trials > 0) std::fprintf(stderr, "resumed %d completed trials\n", res.resumed_trials);
  std::printf("%-14s %-8s %8s %12s %10s\n", experiment::to_string(spec.sweep), "scheme", "trials", "mean_mbps",
              "conv_rate");
  for (const auto& r : res.summary)
    std::printf("%-14g %-8s %8d %12.4f %10.3f\n", r.sweep_value, r.scheme.c_str(), r.trials, r.mean_capacity_mbps,
                r.convergence_rate);
  for (const auto& e : res.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  return res.errors.empty() ? 0 : 1;
}

int cmd_trace(const std::string& scenario_path, const std::string& out) {
  const auto s = scenario::load(scenario_path);
  lagrangian::IterationTrace tr;
  const auto sol = experiment::trace(s, out, {}, &tr);
  for (const auto& e : tr.events) std::fprintf(stderr, "note: %s\n", e.c_str());
  std::printf("x = (%.3f, %.3f, %.3f) m\n", sol.x.x(), sol.x.y(), sol.x.z());
  std::printf("min capacity = %.6f Mbps\n", sol.rate / 1e6);
  std::printf("P_B = %.6g W, sum P_k = %.6g W\n", sol.bs_power,
              std::accumulate(sol.user_powers.begin(), sol.user_powers.end(), 0.0));
  std::printf("converged = %s, fallback = %s, feasible = %s, outer = %d, inner = %d\n", sol.converged ? "yes" : "no",
              sol.used_fallback ? "yes" : "no", sol.feasible ? "yes" : "no", sol.outer_iterations,
              sol.inner_iterations);
  return 0;
}

int cmd_gen(const std::string& config_path, const std::string& preset, unsigned long long seed,
            const std::string& out) {
  scenario::GeneratorConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open " + config_path);
    scenario::json j;
    try {
      in >> j;
    } catch (const scenario::json::exception& e) {
      throw ConfigError("malformed config file " + config_path + ": " + e.what());
    }
    cfg = scenario::config_from_json(j);
  } else if (preset == "full") {
    cfg = scenario::GeneratorConfig::full_scale();
  }
  const auto s = scenario::generate(cfg, seed);
  scenario::save(s, out);
  std::printf("wrote %s: %d users, %zu buildings\n", out.c_str(), s.num_users(), s.buildings.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV relay positioning and power allocation"};
  app.require_subcommand(1);

  std::string spec, out, scenario_file, config, preset = "desk";
  int trials = 0, parallel = 1;
  long long run_seed = -1;
  unsigned long long gen_seed = 1;
  bool no_resume = false;

  auto* run = app.add_subcommand("run", "run an experiment sweep and write CSV results");
  run->add_option("--spec", spec, "experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--trials", trials, "trials per sweep point (overrides the spec)")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_seed, "seed base (overrides the spec)")->check(CLI::NonNegativeNumber);
  run->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--no-resume", no_resume, "ignore an existing trials.csv");

  auto* trace = app.add_subcommand("trace", "solve one scenario and write iteration traces");
  trace->add_option("--scenario", scenario_file, "scenario (JSON)")->required()->check(CLI::ExistingFile);
  trace->add_option("--out", out, "output directory")->required();

  auto* gen = app.add_subcommand("gen", "generate a random scenario");
  gen->add_option("--config", config, "generator config (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--preset", preset, "built-in config when --config is absent")
      ->check(CLI::IsMember({"desk", "full"}));
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", out, "output scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(spec, out, trials, run_seed, parallel, !no_resume);
    if (*trace) return cmd_trace(scenario_file, out);
    if (*gen) return cmd_gen(config, preset, gen_seed, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "uavrelay: %s\n", e.what());
    return 2;
  }
  return 0;
}
