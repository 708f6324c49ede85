#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogmp/config.hpp"
#include "ogmp/ppo.hpp"
#include "ogmp/sim.hpp"

namespace ogmp::harness {

/// Per-step series of one evaluation episode: enough to recompute every
/// aggregate metric independently of the report.
struct EpisodeTrace {
  std::uint64_t env_seed = 0;
  std::vector<double> rewards;
  std::vector<double> heading_speed;   // m/s, finite-difference base speed
  std::vector<double> heading_accel;   // m/s^2, finite-difference of speed
  std::vector<double> tracking_error;  // weighted deviation from reference
  double final_p_x = 0.0;
  sim::Termination termination = sim::Termination::kNone;

  long steps() const { return static_cast<long>(rewards.size()); }
  double total_return() const;
  double tracking_cost() const;       // sum of per-step tracking error
  double max_heading_speed() const;   // max over steps (0 for empty)
  double max_heading_accel() const;   // max |accel| over steps (0 for empty)
  void validate() const;
};

/// Sample means over episodes of the locomotion aggregates. The Froude
/// number is derived from the reported mean peak speed, so the identity
/// froude = max_heading_speed^2 / (gravity * leg_length) holds exactly.
struct MetricsReport {
  double max_heading_accel_g = 0.0;  // mean per-episode max |dv/dt| over g
  double max_heading_speed = 0.0;    // mean per-episode max speed, m/s
  double froude = 0.0;
  double episode_length_frac = 0.0;  // mean steps/time_limit, in [0, 1]
  double mean_return = 0.0;
  double j_tilde = 0.0;  // mean negated cumulative tracking error
  double j_true = 0.0;   // mean final heading displacement, m
  double rho_term_frac = 0.0;
  double fall_frac = 0.0;
  double timeout_frac = 0.0;
};

MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces,
                              const sim::PhysicsConfig& physics,
                              long time_limit);

struct EvalOptions {
  int n_episodes = 100;
  bool mean_action = true;  // false: sample actions from the policy
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalResult {
  std::vector<EpisodeTrace> traces;
  MetricsReport report;
};

/// Roll the policy over n freshly seeded episodes. Episode seeds and action
/// noise derive only from options.seed, so a rerun is bit-identical.
EvalResult evaluate_policy(const nn::GaussianPolicy& policy,
                           const sim::EnvConfig& env_config,
                           const EvalOptions& options);

/// Load the checkpoint (corrupt files raise ChecksumMismatch) and evaluate.
EvalResult eval_policy(const std::string& checkpoint_path,
                       const sim::EnvConfig& env_config,
                       const EvalOptions& options);

void write_eval_csv(const std::string& path,
                    const std::vector<EpisodeTrace>& traces);
void write_report_csv(const std::string& path, const MetricsReport& report);

enum class SweepAxis { kRho, kOracle, kHorizon, kObsMask };

const char* sweep_axis_name(SweepAxis axis);
SweepAxis sweep_axis_from_name(const std::string& name);

/// Canonical ablation values: rho {0.05, 0.1, 0.3, 0.5, 0.8, 1e10}; oracle
/// {li, lqr, prev}; horizon {7, 15, 30}; obs_mask {z, z+c, h, h+c, h+z,
/// h+z+c} where h = terrain scan, z = latent code, c = clock.
std::vector<std::string> default_axis_values(SweepAxis axis);

/// Copy of base with one axis value applied. Tokens follow
/// default_axis_values; a malformed token raises ConfigError.
config::RunConfig apply_axis_value(const config::RunConfig& base,
                                   SweepAxis axis, const std::string& value);

struct SweepCell {
  std::string value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;      // failure diagnostic when !ok
  MetricsReport report;   // meaningful only when ok
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kRho;
  std::vector<SweepCell> cells;  // |values| x |seeds|, value-major
};

/// Train one run per (value, seed) under out_dir and evaluate the final
/// policy. A failing cell is recorded and the sweep continues.
SweepResult sweep(const config::RunConfig& base, SweepAxis axis,
                  const std::vector<std::string>& values,
                  const std::string& out_dir);

/// Tidy long-format CSV (one row per cell) plus a plot-ready pivot with
/// per-value means and standard deviations over the seeds that succeeded.
void write_sweep_csv(const std::string& long_path,
                     const std::string& pivot_path, const SweepResult& result);

/// Fixed evaluation layout: flat approach, one obstacle with the given
/// dimensions starting at `offset`, flat runout to `length`. A pace mode
/// yields an all-flat track.
terrain::Track single_obstacle_track(const terrain::ModeSpec& spec,
                                     double offset, double length);

struct GridOptions {
  int cells_a = 5;            // grid resolution along the width axis
  int cells_b = 5;            // grid resolution along the height/depth axis
  int episodes_per_cell = 1;
  bool mean_action = true;
  std::uint64_t seed = 0;
  double obstacle_offset = 4.0;  // m from the start line

  void validate() const;
};

struct GridCell {
  terrain::ModeSpec spec;
  double mean_return = 0.0;
  bool in_training_box = false;
};

/// Mean undiscounted return on single-obstacle tracks over a uniform grid
/// spanning the dilated test box of `mode` (jump -> blocks, leap -> gaps).
struct GridResult {
  terrain::Mode mode = terrain::Mode::kJump;
  std::vector<GridCell> cells;           // b-major within each a
  terrain::Interval a_train, b_train;    // training box, for the boundary
};

GridResult mode_versatility_grid(const nn::GaussianPolicy& policy,
                                 const sim::EnvConfig& env_config,
                                 terrain::Mode mode,
                                 const GridOptions& options);

void write_grid_csv(const std::string& path, const GridResult& result);

/// Reference-trajectory export for one oracle query: the planned states for
/// `spec`, starting from the canonical cruising state on a single-obstacle
/// layout. Columns: step, phase, p_x, p_z, theta, v_x, v_z, omega.
void write_oracle_viz_csv(const std::string& path,
                          const config::RunConfig& config,
                          const terrain::ModeSpec& spec);

/// FNV-1a 64-bit content hash of one file as 16 lowercase hex digits.
std::string file_hash_hex(const std::string& path);

/// Hash every regular file under dir (sorted relative paths, manifest
/// excluded) into dir/manifest.json; returns the manifest path.
std::string write_manifest(const std::string& dir);

struct ExperimentResult {
  std::string out_dir;
  std::vector<MetricsReport> reports;  // one per seed, in config order
  std::string manifest_path;
};

/// Full pipeline under config.out_dir: resolved config, mode dataset,
/// trajectory encoder + latent scatter, one training run per seed (metrics,
/// checkpoints, evaluation CSVs), and a content-hash manifest. Rerunning
/// with the same config reproduces every artifact bit for bit.
ExperimentResult run_experiment(const config::RunConfig& config);

}  // namespace ogmp::harness
