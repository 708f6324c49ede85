// Command-line front end for the multi-mode parkour policy toolkit.
//
// Every subcommand takes a JSON config file (see configs/ for examples) and
// delegates to the shared library's C API.  Exit codes: 0 success, 2 config
// error (bad flags, unreadable or invalid config), 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ogmp/ogmp_c.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

/// Maps a library status to an exit code, printing the error when non-OK.
int finish(ogmp_status status) {
  if (status == OGMP_OK) return kExitOk;
  std::fprintf(stderr, "error (%s): %s\n", ogmp_status_name(status),
               ogmp_last_error());
  return status == OGMP_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

/// Reads the config file into `out`; reports and fails as a config error.
bool read_config(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    std::fprintf(stderr, "error (config_error): cannot read config file '%s'\n",
                 path.c_str());
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

/// Applies flag overrides to the config text.  Invalid JSON passes through
/// untouched so the library reports the parse error with its usual message.
std::string apply_overrides(const std::string& text, const std::string& out_dir,
                            const std::vector<std::uint64_t>& seeds) {
  if (out_dir.empty() && seeds.empty()) return text;
  nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) return text;
  if (!out_dir.empty()) root["out_dir"] = out_dir;
  if (!seeds.empty()) root["seeds"] = seeds;
  return root.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Oracle-guided multi-mode locomotion: training, evaluation, and "
      "ablation tooling"};
  app.set_version_flag("--version", ogmp_version());
  app.require_subcommand(1);

  int rc = kExitOk;
  std::string config_path;
  std::string out_dir;
  std::string out_path;
  std::string checkpoint;
  std::string dataset_path;
  std::string latent_path;
  std::string axis;
  std::string values;
  std::string mode;
  std::vector<std::uint64_t> seeds;
  double param_a = 0.0;
  double param_b = 0.0;
  int cells_a = 5;
  int cells_b = 5;
  int episodes = 1;
  std::uint64_t grid_seed = 0;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file")
        ->required();
  };

  CLI::App* train = app.add_subcommand(
      "train", "Run the full pipeline: dataset, encoder, per-seed policy "
               "training, evaluation, manifest");
  add_config(train);
  train->add_option("--out-dir", out_dir, "Override out_dir from the config");
  train->add_option("--seed", seeds,
                    "Override the config seed list (repeatable)");
  train->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    text = apply_overrides(text, out_dir, seeds);
    rc = finish(ogmp_run_experiment(text.c_str()));
  });

  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate a saved policy checkpoint and write episode + report "
              "CSVs");
  add_config(eval);
  eval->add_option("--checkpoint", checkpoint, "Policy checkpoint (.bin)")
      ->required();
  eval->add_option("--out-dir", out_dir, "Output directory")->required();
  eval->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_eval(text.c_str(), checkpoint.c_str(), out_dir.c_str()));
  });

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Train and evaluate across one ablation axis (rho, oracle, "
               "horizon, obs_mask)");
  add_config(sweep);
  sweep->add_option("--axis", axis, "Axis: rho | oracle | horizon | obs_mask")
      ->required();
  sweep->add_option("--values", values,
                    "Comma-separated axis values (default: built-in set)");
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();
  sweep->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_sweep(text.c_str(), axis.c_str(),
                           values.empty() ? nullptr : values.c_str(),
                           out_dir.c_str()));
  });

  CLI::App* gen = app.add_subcommand(
      "gen-dataset", "Generate the oracle reference dataset as CSV");
  add_config(gen);
  gen->add_option("-o,--out", out_path, "Output CSV path")->required();
  gen->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_gen_dataset(text.c_str(), out_path.c_str()));
  });

  CLI::App* enc = app.add_subcommand(
      "train-encoder", "Train the trajectory autoencoder on a dataset CSV");
  add_config(enc);
  enc->add_option("--dataset", dataset_path, "Dataset CSV path")->required();
  enc->add_option("-o,--out", out_path, "Output encoder file (.bin)")
      ->required();
  enc->add_option("--latent", latent_path,
                  "Also write per-trajectory latent codes to this CSV");
  enc->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_train_encoder(
        text.c_str(), dataset_path.c_str(), out_path.c_str(),
        latent_path.empty() ? nullptr : latent_path.c_str()));
  });

  CLI::App* viz = app.add_subcommand(
      "oracle-viz", "Export one oracle reference trajectory as a plot-ready "
                    "CSV");
  add_config(viz);
  viz->add_option("--mode", mode, "Mode: pace | jump | leap | flip | settle")
      ->required();
  viz->add_option("-a,--param-a", param_a,
                  "First mode parameter (speed, width, or rotation)")
      ->required();
  viz->add_option("-b,--param-b", param_b,
                  "Second mode parameter (height, depth, or apex factor)");
  viz->add_option("-o,--out", out_path, "Output CSV path")->required();
  viz->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_oracle_viz(text.c_str(), mode.c_str(), param_a, param_b,
                                out_path.c_str()));
  });

  CLI::App* grid = app.add_subcommand(
      "versatility-grid", "Evaluate a checkpoint over a grid of mode "
                          "parameters beyond the training ranges");
  add_config(grid);
  grid->add_option("--checkpoint", checkpoint, "Policy checkpoint (.bin)")
      ->required();
  grid->add_option("--mode", mode, "Mode: jump | leap | flip")->required();
  grid->add_option("--cells-a", cells_a, "Grid cells along the first axis");
  grid->add_option("--cells-b", cells_b, "Grid cells along the second axis");
  grid->add_option("--episodes", episodes, "Episodes per grid cell");
  grid->add_option("--seed", grid_seed, "Evaluation seed");
  grid->add_option("-o,--out", out_path, "Output CSV path")->required();
  grid->callback([&] {
    std::string text;
    if (!read_config(config_path, text)) {
      rc = kExitConfig;
      return;
    }
    rc = finish(ogmp_versatility_grid(text.c_str(), checkpoint.c_str(),
                                      mode.c_str(), cells_a, cells_b, episodes,
                                      grid_seed, out_path.c_str()));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  return rc;
}
