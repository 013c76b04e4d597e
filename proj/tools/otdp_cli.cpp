#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "otdp/bench.hpp"
#include "otdp/catalog.hpp"
#include "otdp/error.hpp"
#include "otdp/report.hpp"
#include "otdp/scenario.hpp"
#include "otdp/verify.hpp"

namespace fs = std::filesystem;

namespace {

void write_output(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw otdp::DomainError("cli", "cannot write '" + out + "'");
  file << text;
}

struct SolveArgs {
  std::vector<std::string> scenarios;
  std::string mode, rollout, out, dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mem_cap;
  bool timings = false;
};

int solve(const SolveArgs& a) {
  otdp::RunFlags flags;
  if (!a.mode.empty()) flags.mode = otdp::parse_lift_mode(a.mode);
  if (!a.rollout.empty()) flags.rollout = otdp::parse_rollout(a.rollout);
  flags.seed = a.seed;
  flags.memory_cap = a.mem_cap;
  flags.timings = a.timings;
  const fs::path dir = a.dir.empty() ? otdp::default_scenario_dir() : fs::path(a.dir);

  nlohmann::json reports = nlohmann::json::array();
  int code = 0;
  for (const auto& name : a.scenarios) {
    const auto result = otdp::run(otdp::load_scenario(otdp::resolve_scenario(name, dir)), flags);
    code = std::max(code, result.exit_code());
    reports.push_back(result.report);
  }
  write_output(otdp::report_text(reports.size() == 1 ? reports[0] : reports), a.out);
  return code;
}

int generate(const std::vector<std::string>& names, bool all, const std::string& out_dir) {
  const auto list = all ? otdp::catalog_names() : names;
  if (list.empty()) throw otdp::DomainError("cli", "name a scenario or pass --all");
  if (!out_dir.empty()) fs::create_directories(out_dir);
  for (const auto& name : list) {
    const auto scenario = otdp::catalog_scenario(name);
    if (out_dir.empty()) {
      std::cout << otdp::canonical_text(scenario);
    } else {
      otdp::save_scenario(scenario, fs::path(out_dir) / (name + ".json"));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of fleets in probability space"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve scenarios and print a JSON report");
  solve_cmd->alias("run");
  solve_cmd->add_option("scenario", solve_args.scenarios, "Scenario file or bundled scenario name")->required();
  solve_cmd->add_option("--mode", solve_args.mode, "multi | two | both")
      ->check(CLI::IsMember({"multi", "two", "both"}));
  solve_cmd->add_option("--rollout", solve_args.rollout, "feedback | openloop")
      ->check(CLI::IsMember({"feedback", "openloop"}));
  solve_cmd->add_option("--seed", solve_args.seed, "Seed for sampled particle clouds");
  solve_cmd->add_option("--mem-cap", solve_args.mem_cap, "Upper bound on DP table cells");
  solve_cmd->add_option("--out", solve_args.out, "Report path (default stdout)");
  solve_cmd->add_option("--scenarios", solve_args.dir, "Directory searched for bundled names");
  solve_cmd->add_flag("--timings", solve_args.timings, "Include wall-clock timings");

  std::string grid, bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Configuration counts as CSV");
  bench_cmd->add_option("--grid", grid, "For example \"M=1,10,100;X=10,1000\"");
  bench_cmd->add_option("--out", bench_out, "CSV path (default stdout)");

  std::string suite = "all", verify_dir;
  std::uint64_t verify_seed = 7;
  bool verify_timings = false;
  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance checks");
  verify_cmd->add_option("suite", suite, "all, paper-values or one check name")
      ->check(CLI::IsMember(otdp::verify_suites()));
  verify_cmd->add_option("--seed", verify_seed, "Seed for randomized checks");
  verify_cmd->add_option("--scenarios", verify_dir, "Directory holding the bundled scenarios");
  verify_cmd->add_flag("--timings", verify_timings, "Show elapsed time per check");

  std::string format_in, format_out;
  auto* format_cmd = app.add_subcommand("format", "Validate a scenario and rewrite it canonically");
  format_cmd->add_option("scenario", format_in)->required();
  format_cmd->add_option("--out", format_out, "Output path (default stdout)");

  std::vector<std::string> gen_names;
  std::string gen_dir;
  bool gen_all = false;
  auto* generate_cmd = app.add_subcommand("generate", "Write bundled scenarios");
  generate_cmd->add_option("name", gen_names, "Scenario names")->check(CLI::IsMember(otdp::catalog_names()));
  generate_cmd->add_flag("--all", gen_all, "Every bundled scenario");
  generate_cmd->add_option("--out", gen_dir, "Directory (default: print to stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return solve(solve_args);
    if (bench_cmd->parsed()) {
      const auto g = grid.empty() ? otdp::BenchGrid{} : otdp::parse_bench_grid(grid);
      write_output(otdp::bench_csv(otdp::bench_counts(g)), bench_out);
      return 0;
    }
    if (verify_cmd->parsed()) {
      otdp::VerifyOptions options;
      options.seed = verify_seed;
      if (!verify_dir.empty()) options.scenario_dir = verify_dir;
      const auto results = otdp::run_verify(suite, options);
      std::cout << otdp::format_results(results, verify_timings);
      return otdp::all_passed(results) ? 0 : 1;
    }
    if (format_cmd->parsed()) {
      write_output(otdp::canonical_text(otdp::load_scenario(format_in)), format_out);
      return 0;
    }
    if (generate_cmd->parsed()) return generate(gen_names, gen_all, gen_dir);
  } catch (const otdp::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
