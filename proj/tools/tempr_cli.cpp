// tempr: rewards, matching, evaluation and toy GRPO training for temporal
// video understanding outputs.
//
// Exit codes: 0 success, 1 internal error, 2 input/schema error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

// Writes to --out when given, otherwise stdout. The file is only created
// once the command has produced its full output.
int emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write '" << out_path << "'\n";
    return kExitInternal;
  }
  f << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempr: temporal localization rewards, matching, evaluation and toy GRPO"};
  app.require_subcommand(1);

  tempr::io::RunConfig flags;
  std::string config_path;
  std::string out_path;
  std::string dataset_path;
  std::string scenario_path;
  std::string preds_text;
  std::string gts_text;
  bool compare = false;

  double sigma = 0, clip_eps = 0, kl_beta = 0, learning_rate = 0;
  std::size_t group_size = 0, steps = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config (flags override it)");
    cmd->add_option("--out", out_path, "write output to this file instead of stdout");
  };
  auto add_scoring = [&](CLI::App* cmd) {
    cmd->add_option("--sigma", sigma, "count-penalty sharpness for TAL (default 1.0)");
    cmd->add_flag("--strict-parse", flags.strict_parse, "reject text outside the tag blocks");
    cmd->add_flag("--tal-normalize", flags.tal_normalize, "halve the TAL localization reward");
  };

  auto* eval = app.add_subcommand("eval", "evaluate a prediction dataset (mIoU, R1@theta, mF1, accuracy)");
  eval->add_option("dataset", dataset_path, "line-delimited JSON dataset")->required();
  add_common(eval);
  eval->add_flag("--strict-parse", flags.strict_parse, "reject text outside the tag blocks");
  eval->add_flag("--clamp", flags.clamp_to_duration, "clamp predicted timestamps to [0, duration]");

  auto* reward = app.add_subcommand("reward", "per-sample reward breakdown for a dataset");
  reward->add_option("dataset", dataset_path, "line-delimited JSON dataset")->required();
  add_common(reward);
  add_scoring(reward);

  auto* match = app.add_subcommand("match", "show the DP matching between two interval lists");
  match->add_option("--preds", preds_text, "predicted intervals, e.g. \"0 to 4, 6 to 10\"")->required();
  match->add_option("--gts", gts_text, "ground-truth intervals, e.g. \"2 to 8\"")->required();
  match->add_flag("--compare", compare, "also show sequential (positional) matching");
  match->add_option("--out", out_path, "write output to this file instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "train the toy policy with GRPO on a scenario");
  simulate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(simulate);
  simulate->add_option("--sigma", sigma, "count-penalty sharpness for TAL");
  simulate->add_flag("--tal-normalize", flags.tal_normalize, "halve the TAL localization reward");
  simulate->add_option("--clip-eps", clip_eps, "clip range epsilon");
  simulate->add_option("--kl-beta", kl_beta, "KL penalty weight");
  simulate->add_option("--group-size", group_size, "responses sampled per prompt");
  simulate->add_option("--learning-rate", learning_rate, "gradient ascent step size");
  simulate->add_option("--steps", steps, "number of GRPO steps");
  simulate->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  auto given = [&](CLI::App* cmd, const char* name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  CLI::App* active = app.get_subcommands().front();
  if (given(active, "--sigma")) flags.sigma = sigma;
  if (active == simulate) {
    if (given(simulate, "--clip-eps")) flags.clip_eps = clip_eps;
    if (given(simulate, "--kl-beta")) flags.kl_beta = kl_beta;
    if (given(simulate, "--group-size")) flags.group_size = group_size;
    if (given(simulate, "--learning-rate")) flags.learning_rate = learning_rate;
    if (given(simulate, "--steps")) flags.steps = steps;
    if (given(simulate, "--seed")) flags.seed = seed;
  }

  try {
    tempr::io::RunConfig cfg;
    if (!config_path.empty()) cfg = tempr::io::read_run_config_file(config_path);
    cfg.overlay(flags);

    std::ostringstream out;
    if (active == eval) {
      tempr::cli::cmd_eval(tempr::io::read_dataset_file(dataset_path), cfg, out);
    } else if (active == reward) {
      tempr::cli::cmd_reward(tempr::io::read_dataset_file(dataset_path), cfg, out);
    } else if (active == match) {
      tempr::cli::cmd_match(tempr::cli::parse_inline_intervals(preds_text, "preds"),
                            tempr::cli::parse_inline_intervals(gts_text, "gts"), compare, out);
    } else {
      tempr::cli::cmd_simulate(tempr::io::read_scenario_file(scenario_path), cfg, out);
    }
    return emit(out_path, out.str());
  } catch (const tempr::io::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
