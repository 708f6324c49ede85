#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ogmp/error.hpp"
#include "ogmp/rng.hpp"

namespace ogmp::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kTanh, kIdentity };

/// Fully-connected network stored as a single flat parameter vector so the
/// optimizer and checkpoint code can treat it as one array. Layer l maps
/// layer_sizes[l] -> layer_sizes[l+1]; its weight matrix (out x in,
/// column-major) is followed by its bias in `flat`.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;  // one per layer
  Vector flat;

  int layer_count() const { return static_cast<int>(activations.size()); }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int param_count() const;
  /// Offset of layer l's weight block / bias block within `flat`.
  int weight_offset(int l) const;
  int bias_offset(int l) const;

  void validate() const;

  static MlpParams zeros(std::vector<int> layer_sizes,
                         std::vector<Activation> activations);
  /// Scaled-uniform initialization with gain 1/sqrt(fan_in); the final layer
  /// is additionally scaled by final_scale (policy heads use 0.01 so early
  /// actions stay near zero).
  static MlpParams random_init(std::vector<int> layer_sizes,
                               std::vector<Activation> activations,
                               RngStream& rng, double final_scale = 1.0);
  /// Standard trunk used by policy and value networks: two 64-unit tanh
  /// hidden layers and an identity output layer.
  static MlpParams make_default(int in, int out, RngStream& rng,
                                double final_scale = 1.0);
};

Vector forward(const MlpParams& p, const Vector& input);

struct Gradients {
  Vector param_grads;  // d(upstream . output)/d flat, same length as flat
  Vector input_grad;   // d(upstream . output)/d input
};

/// Exact reverse-mode gradients of the scalar upstream . forward(p, input).
Gradients backward(const MlpParams& p, const Vector& input,
                   const Vector& upstream);

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

/// Diagonal-Gaussian policy: a mean network plus free per-dimension log
/// standard deviations (state independent).
struct GaussianPolicy {
  MlpParams mean;
  Vector log_std;

  int obs_dim() const { return mean.input_dim(); }
  int action_dim() const { return mean.output_dim(); }
  void validate() const;
  /// Project log_std back into [kLogStdMin, kLogStdMax]; call after updates.
  void clamp_log_std();

  static GaussianPolicy make(int obs_dim, int action_dim, RngStream& rng,
                             double init_log_std = 0.0);
};

/// log p(action | obs) = sum_d [ -(a_d-mu_d)^2/(2 sigma_d^2) - log sigma_d
///                               - 0.5 log 2 pi ].
double gaussian_logp(const GaussianPolicy& policy, const Vector& obs,
                     const Vector& action);

/// Differential entropy of the diagonal Gaussian (obs independent).
double gaussian_entropy(const GaussianPolicy& policy);

struct SampleResult {
  Vector action;
  double logp;
};

/// a = mu + sigma * eta with eta standard normal from `rng`; logp matches
/// gaussian_logp(policy, obs, a) exactly.
SampleResult sample(const GaussianPolicy& policy, const Vector& obs,
                    RngStream& rng);

struct PolicyLogpGrad {
  double logp = 0.0;
  Vector mean_param_grads;  // same length as policy.mean.flat
  Vector log_std_grads;     // same length as policy.log_std
};

/// Gradients of log p(action | obs) with respect to every policy parameter:
/// the mean-network contribution is chained through backward() with upstream
/// (a - mu)/sigma^2; d logp / d log_sigma_d = ((a_d-mu_d)/sigma_d)^2 - 1.
PolicyLogpGrad policy_logp_grad(const GaussianPolicy& policy,
                                const Vector& obs, const Vector& action);

struct AdamState {
  Vector m;  // first-moment estimate
  Vector v;  // second-moment estimate
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState make(int n, double lr = 3e-4, double beta1 = 0.9,
                        double beta2 = 0.999, double eps = 1e-8);
};

/// Standard Adam step with bias correction; mutates params and state.
void adam_update(AdamState& s, Eigen::Ref<Vector> params, const Vector& grads);

/// Named flat array inside a checkpoint. `shape` is informational metadata;
/// data.size() must equal its product.
struct TensorRecord {
  std::string name;
  std::vector<long> shape;
  Vector data;
};

/// Versioned flat binary checkpoint: magic, record table, little-endian
/// 64-bit reals, FNV-1a trailer. A JSON manifest describing the records is
/// written next to the file at path + ".json".
void save_tensors(const std::string& path,
                  const std::vector<TensorRecord>& records,
                  const std::string& manifest_extra_json = "{}");

/// Load and verify (magic, version, checksum). Throws IoFailure on structural
/// problems and ChecksumMismatch when the payload was altered.
std::vector<TensorRecord> load_tensors(const std::string& path);

}  // namespace ogmp::nn
