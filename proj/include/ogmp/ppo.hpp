#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ogmp/error.hpp"
#include "ogmp/nn.hpp"
#include "ogmp/rng.hpp"
#include "ogmp/sim.hpp"

namespace ogmp::ppo {

using nn::Vector;

/// Minimal environment surface the trainer needs. Implementations must be
/// deterministic in (seed, action sequence) and auto-resettable.
struct EnvStep {
  Vector observation;  // state after the step (pre-reset when terminal)
  double reward = 0.0;
  sim::Termination termination = sim::Termination::kNone;
  double progress = 0.0;        // heading position, feeds the true objective
  double tracking_error = 0.0;  // weighted reference deviation, feeds J~
};

class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Vector reset(std::uint64_t seed) = 0;
  virtual EnvStep step(const Vector& action) = 0;
};

/// Adapter exposing the parkour environment to the trainer.
class ParkourRolloutEnv : public RolloutEnv {
 public:
  explicit ParkourRolloutEnv(const sim::EnvConfig& config) : env_(config) {}

  int obs_dim() const override { return env_.obs_dim(); }
  int action_dim() const override { return sim::kActionDim; }
  Vector reset(std::uint64_t seed) override { return env_.reset(seed); }
  EnvStep step(const Vector& action) override;

  sim::ParkourEnv& env() { return env_; }

 private:
  sim::ParkourEnv env_;
};

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  int epochs = 4;
  int minibatch = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double lr = 3e-4;
  long total_steps = 100000;
  int n_envs = 16;
  int steps_per_env = 128;

  void validate() const;
};

/// Flat transition storage in env-major order: index(e, t) = e * steps + t.
/// Runs partition the batch into contiguous per-episode (or truncated)
/// spans; each run carries the value bootstrap applied past its last step.
struct RolloutBatch {
  int n_envs = 0;
  int steps_per_env = 0;
  std::vector<Vector> observations;
  std::vector<Vector> actions;
  std::vector<double> logps;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<sim::Termination> terminations;
  std::vector<long> run_begin;
  std::vector<long> run_end;
  std::vector<double> run_bootstrap;
  std::vector<double> advantages;
  std::vector<double> returns;

  long size() const { return static_cast<long>(rewards.size()); }
  long index(int env, int t) const {
    return static_cast<long>(env) * steps_per_env + t;
  }
  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantage + value
};

/// Generalized advantage estimation over one contiguous run. Interior steps
/// must be non-terminal; the final step may carry any termination kind.
/// bootstrap_value is the value of the successor state: it enters the last
/// delta for continuing and time-limit ends, and is ignored for the true
/// terminals (deviation beyond rho, fall).
GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      double bootstrap_value,
                      const std::vector<sim::Termination>& kinds,
                      double gamma, double lam);

/// Runs compute_gae over every recorded run and fills advantages/returns.
void finish_gae(RolloutBatch& batch, double gamma, double lam);

/// In-place whole-batch normalization to mean 0, std 1 (std floored at 1e-8).
void normalize_advantages(RolloutBatch& batch);

struct PpoStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped-surrogate loss over the given minibatch indices; when the grad
/// pointers are non-null, accumulates exact gradients for the policy mean
/// network, the log-std vector, and the value network.
PpoStats ppo_loss(const RolloutBatch& batch, const std::vector<long>& idx,
                  const nn::GaussianPolicy& policy,
                  const nn::MlpParams& value_net, const PpoConfig& cfg,
                  Vector* mean_grad = nullptr, Vector* log_std_grad = nullptr,
                  Vector* value_grad = nullptr);

/// Per-env persistent rollout state: the env, its RNG streams, and running
/// episode accumulators so episodes can span collection boundaries.
struct EnvSlot {
  std::unique_ptr<RolloutEnv> env;
  RngStream seed_stream;
  RngStream action_stream;
  Vector observation;
  double episode_return = 0.0;
  double episode_tracking = 0.0;
  double start_progress = 0.0;
  double last_progress = 0.0;
  long episode_steps = 0;

  EnvSlot() : seed_stream(0), action_stream(0) {}
};

/// Statistics over the episodes that finished within one collection window.
struct EpisodeStats {
  long finished = 0;
  double mean_return = 0.0;
  double mean_j_tilde = 0.0;  // negated summed tracking error
  double mean_j_true = 0.0;   // heading displacement
  long rho_terms = 0;
  long fall_terms = 0;
  long timeout_terms = 0;
};

/// Collects steps_per_env transitions from every slot under the frozen
/// policy, auto-resetting finished episodes with fresh seeds. Deterministic:
/// batches depend only on (slot streams, policy, value_net).
RolloutBatch collect_rollouts(std::vector<EnvSlot>& slots,
                              const nn::GaussianPolicy& policy,
                              const nn::MlpParams& value_net,
                              int steps_per_env, EpisodeStats* stats = nullptr);

struct IterationMetrics {
  long iter = 0;
  long steps = 0;  // cumulative env steps
  double mean_return = 0.0;
  double j_tilde = 0.0;
  double j_true = 0.0;
  double rho_term_frac = 0.0;
  double fall_frac = 0.0;
  double timeout_frac = 0.0;
  double clip_frac = 0.0;
  double entropy = 0.0;
};

using EnvFactory = std::function<std::unique_ptr<RolloutEnv>(int env_index)>;

struct TrainSetup {
  PpoConfig ppo;
  EnvFactory make_env;
  std::uint64_t seed = 0;
  std::string out_dir;          // empty: keep artifacts in memory only
  int checkpoint_every = 0;     // iterations; 0 = final checkpoint only
  double init_log_std = -0.5;

  void validate() const;
};

struct TrainResult {
  nn::GaussianPolicy policy;
  nn::MlpParams value_net;
  std::vector<IterationMetrics> metrics;
  long total_steps = 0;
};

/// Full training loop: collect -> GAE -> epochs of minibatch Adam updates.
/// Writes metrics.csv and checkpoints under out_dir when it is set.
TrainResult train(const TrainSetup& setup);

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationMetrics>& metrics);

/// Checkpoint layout shared by the trainer and the evaluation tools:
/// records policy_mean / policy_log_std / value plus layer sizes in the
/// manifest so the networks can be rebuilt without the training config.
void save_policy_checkpoint(const std::string& path,
                            const nn::GaussianPolicy& policy,
                            const nn::MlpParams& value_net, long iteration);

struct PolicyCheckpoint {
  nn::GaussianPolicy policy;
  nn::MlpParams value_net;
  long iteration = 0;
};

PolicyCheckpoint load_policy_checkpoint(const std::string& path);

}  // namespace ogmp::ppo
