// sublin: positive solutions of semilinear equations on finite-state Markov
// generators.
//
//   sublin validate  --config cfg.json          structural + hypothesis checks
//   sublin criterion --config cfg.json          spectral existence criterion
//   sublin solve     --config cfg.json          full solve pipeline
//   sublin verify    --config cfg.json          randomized property suites
//   sublin oracle    --config cfg.json          Monte Carlo estimators
//
// Exit codes: 0 ok, 1 parse error, 2 hypothesis failure, 3 criterion not
// satisfied, 4 convergence failure, 5 property-suite failure.

#include "sublin/sublin.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  bool strict = false;
  bool json_to_stdout = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "problem config (JSON)")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out_dir, "directory for report.json (and solution.csv)");
  cmd->add_flag("--strict", args.strict, "treat criterion/hypothesis warnings as fatal");
  cmd->add_flag("--json", args.json_to_stdout, "print the full report JSON to stdout");
}

sublin::io::ProblemConfig load(const CommonArgs& args) {
  auto cfg = sublin::io::load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.strict) {
    cfg.strict = true;
    cfg.solver.strict = true;
  }
  return cfg;
}

void emit(const CommonArgs& args, const sublin::cli::CliResult& result) {
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    result.report.write(args.out_dir + "/report.json");
    if (result.solution.size() > 0) {
      std::ofstream csv(args.out_dir + "/solution.csv");
      csv << sublin::io::vector_to_csv(result.solution);
    }
  }
  if (args.json_to_stdout) {
    std::cout << result.report.serialize() << "\n";
    return;
  }

  // condensed human-readable summary
  const auto& doc = result.report.doc;
  std::cout << doc["command"].get<std::string>() << ": exit " << result.exit_code << "\n";
  if (doc.contains("error")) std::cout << "  error: " << doc["error"].get<std::string>() << "\n";
  if (doc.contains("generator")) std::cout << "  generator: " << doc["generator"].dump() << "\n";
  if (doc.contains("hypotheses"))
    std::cout << "  hypotheses: " << (doc["hypotheses"]["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
  if (doc.contains("criterion")) std::cout << "  criterion: " << doc["criterion"].dump() << "\n";
  if (doc.contains("solution")) {
    const auto& sol = doc["solution"];
    std::cout << "  criterion: " << sol["criterion"].dump() << "\n";
    if (sol.contains("u")) {
      std::cout << "  residual: " << sol["residual"].get<double>() << "\n";
      std::cout << "  u: " << sol["u"].dump() << "\n";
    }
  }
  if (doc.contains("verify")) {
    for (const auto& s : doc["verify"]["suites"]) {
      std::cout << "  " << (s["pass"].get<bool>() ? "[pass] " : "[FAIL] ") << s["name"].get<std::string>()
                << " (" << s["trials"].get<long>() << " trials, " << s["failures"].get<long>()
                << " failures)\n";
    }
  }
  if (doc.contains("oracle")) std::cout << "  oracle: " << doc["oracle"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"positive solutions of -Lu = f(x,u) on finite state spaces"};
  app.require_subcommand(1);

  CommonArgs args;
  bool oracle_only = false;

  auto* validate = app.add_subcommand("validate", "check generator structure and (F1)-(F3)");
  add_common(validate, args);
  auto* criterion = app.add_subcommand("criterion", "evaluate the spectral existence criterion");
  add_common(criterion, args);
  auto* solve = app.add_subcommand("solve", "compute the strictly positive solution");
  add_common(solve, args);
  auto* verify = app.add_subcommand("verify", "run the randomized property suites");
  add_common(verify, args);
  verify->add_flag("--oracle-only", oracle_only, "run only the stochastic-oracle agreement suite");
  auto* oracle = app.add_subcommand("oracle", "run Monte Carlo estimators against matrix references");
  add_common(oracle, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load(args);
    sublin::cli::CliResult result;
    if (validate->parsed()) result = sublin::cli::cmd_validate(cfg);
    if (criterion->parsed()) result = sublin::cli::cmd_criterion(cfg);
    if (solve->parsed()) result = sublin::cli::cmd_solve(cfg);
    if (verify->parsed()) result = sublin::cli::cmd_verify(cfg, oracle_only);
    if (oracle->parsed()) result = sublin::cli::cmd_oracle(cfg);
    emit(args, result);
    return result.exit_code;
  } catch (const sublin::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return sublin::cli::kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sublin::cli::kExitParse;
  }
}
