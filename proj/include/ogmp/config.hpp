#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogmp/encoder.hpp"
#include "ogmp/ppo.hpp"
#include "ogmp/sim.hpp"

namespace ogmp::config {

/// Everything one experiment needs: the environment (physics, terrain
/// ranges, oracle, termination bound, observation mask), the optimizer, the
/// seed list, and artifact settings. Parsed from JSON with a strict schema:
/// unknown or ill-typed fields raise ConfigError naming the offending field.
struct RunConfig {
  sim::EnvConfig env;
  ppo::PpoConfig ppo;
  double init_log_std = -0.5;
  int checkpoint_every = 0;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  int eval_episodes = 100;
  bool eval_mean_action = true;
  int dataset_n_per_mode = 80;
  encoder::EncoderHyper encoder_hyper;

  void validate() const;
  /// Deterministic child seed for auxiliary stages (dataset, encoder),
  /// derived from the first seed in the list.
  std::uint64_t derived_seed(std::uint64_t stage) const;
};

/// Parse from JSON text. Only `seeds` and `out_dir` are required; every
/// other field falls back to the documented default.
RunConfig parse_run_config(const std::string& json_text);

RunConfig load_run_config(const std::string& path);

/// Emit the fully-resolved configuration (every default explicit) as JSON.
/// Parsing the emitted text reproduces the same RunConfig.
std::string resolved_config_json(const RunConfig& config);

/// Inverse of oracle::oracle_kind_name ("li", "lqr", "prev").
oracle::OracleKindId oracle_kind_from_name(const std::string& name);

}  // namespace ogmp::config
