#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rdn/cli/commands.hpp"
#include "rdn/version.hpp"

namespace {

void add_seed(CLI::App* cmd, std::optional<std::uint64_t>& seed, const std::string& help) {
  cmd->add_option_function<std::uint64_t>("--seed", [&seed](const std::uint64_t& v) { seed = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rdn::cli;

  CLI::App app{"Relevance decomposition workbench for cooperative multi-agent RL"};
  app.set_version_flag("--version", std::string(rdn::kVersion));
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train one run and write its run directory");
  train_cmd->add_option("--config", train.config, "Config file (JSON)")->required();
  add_seed(train_cmd, train.seed, "Override training.seed");
  train_cmd->add_option("--out", train.out, "Output root; the run goes to <out>/<run-id>")->capture_default_str();
  train_cmd->add_option("--override", train.overrides, "Dotted override key=value (repeatable)");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Strategies x redundant counts x seeds");
  sweep_cmd->add_option("--config", sweep.config, "Base config file (JSON)")->required();
  sweep_cmd->add_option("--redundant", sweep.redundant, "Comma-separated redundant counts")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds per cell (training.seed + i)")->capture_default_str();
  sweep_cmd->add_option("--strategies", sweep.strategies, "Comma-separated strategies")->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep.jobs, "Parallel runs")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "Output root")->capture_default_str();
  sweep_cmd->add_option("--override", sweep.overrides, "Dotted override key=value (repeatable)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a run's snapshots, or the exact oracle");
  eval_cmd->add_option("--run", eval.run, "Run directory");
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes (default: training.eval_episodes)");
  add_seed(eval_cmd, eval.seed, "Evaluation seed (default: training.seed)");
  eval_cmd->add_flag("--oracle", eval.oracle, "Solve the config's environment exactly and write oracle.json");
  eval_cmd->add_option("--config", eval.config, "Config file (with --oracle)");
  eval_cmd->add_option("--override", eval.overrides, "Dotted override key=value (with --oracle)");
  eval_cmd->add_option("--out", eval.out, "Output directory (with --oracle)");

  RelevanceOptions rel;
  auto* rel_cmd = app.add_subcommand("relevance", "Dump per-step per-agent relevance of a trained RDN run");
  rel_cmd->add_option("--run", rel.run, "Run directory")->required();
  rel_cmd->add_option("--episodes", rel.episodes, "Greedy episodes to replay")->capture_default_str();
  add_seed(rel_cmd, rel.seed, "Replay seed (default: training.seed)");
  rel_cmd->add_option("--out", rel.out, "Output directory (default: the run directory)");

  PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "SVG curves of one metric across runs");
  plot_cmd->add_option("--metric", plot.metric, "Metric column")->capture_default_str();
  plot_cmd->add_option("--out", plot.out, "SVG path")->capture_default_str();
  plot_cmd->add_option("runs", plot.runs, "metrics.csv files or run directories")->required();

  CheckCommandOptions check;
  auto* check_cmd = app.add_subcommand("check", "Fast invariant suite");
  check_cmd->add_option("--seed", check.seed, "Seed for the random cases")->capture_default_str();
  check_cmd->add_option("--corrupt-denominator", check.corrupt_denominator,
                        "Scale LRP denominators by (1 + x); negative control")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*sweep_cmd) return cmd_sweep(sweep, std::cout, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  if (*rel_cmd) return cmd_relevance(rel, std::cout, std::cerr);
  if (*plot_cmd) return cmd_plot(plot, std::cout, std::cerr);
  return cmd_check(check, std::cout, std::cerr);
}
