#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogmp/dataset.hpp"
#include "ogmp/nn.hpp"
#include "ogmp/terrain.hpp"

namespace ogmp::encoder {

using nn::Vector;

constexpr int kLatentDim = 2;
/// Coordinates taken from each trajectory step: base height, pitch, and
/// their finite-difference velocities. Heading position is excluded so that
/// drift does not dominate the reconstruction.
constexpr int kWindowCoords = 4;

/// Window autoencoder plus the per-coordinate normalizer it was fit with.
/// The encoder maps a flattened (horizon+1)-step window to the 2-D latent
/// command; the decoder inverts it in normalized units.
struct EncoderParams {
  nn::MlpParams enc;
  nn::MlpParams dec;
  Vector feature_mean;
  Vector feature_std;
  int horizon = 0;

  int window_dim() const { return (horizon + 1) * kWindowCoords; }
  void validate() const;

  static EncoderParams random(int horizon, int hidden, RngStream& rng);
};

struct LatentPoint {
  Eigen::Vector2d z;
  terrain::Mode mode_label = terrain::Mode::kPace;
};

/// Flatten one reference trajectory into the encoder's input layout:
/// [p_z_0..H | theta_0..H | fd(p_z)_0..H | fd(theta)_0..H], finite
/// differences scaled by 1/dt with the final entry repeated.
Vector trajectory_window(const std::vector<Vector>& states, double dt);

Vector encode(const EncoderParams& e, const Vector& traj_window);

/// Decode(encode(window)) mapped back to physical units.
Vector reconstruct(const EncoderParams& e, const Vector& traj_window);

/// Root-mean-square reconstruction error in normalized units over windows.
double reconstruction_rmse(const EncoderParams& e,
                           const std::vector<Vector>& windows);

struct EncoderHyper {
  int hidden = 32;
  int epochs = 600;
  int minibatch = 32;
  double lr = 1e-3;
  double holdout_fraction = 0.2;

  void validate() const;
};

struct EncoderTraining {
  EncoderParams params;
  std::vector<double> loss_curve;  // per-epoch training MSE, normalized units
  double holdout_rmse = 0.0;       // normalized units; 0 when no holdout
};

/// Fit the autoencoder on the dataset's windows by minimizing mean squared
/// reconstruction error with Adam. The normalizer comes from the training
/// split only; the held-out split (when present) supplies holdout_rmse.
EncoderTraining train_encoder(const dataset::Dataset& data,
                              const EncoderHyper& hyper, std::uint64_t seed);

/// Ratio of the mean inter-mode centroid distance to the mean intra-mode
/// standard deviation. Returns +infinity for separated point clusters with
/// zero spread and 0 when every point coincides.
double cluster_separation(const std::vector<LatentPoint>& points);

std::vector<LatentPoint> encode_dataset(const EncoderParams& e,
                                        const dataset::Dataset& data);

/// CSV scatter export: z1, z2, mode_label.
void write_latent_csv(const std::string& path,
                      const std::vector<LatentPoint>& points);

void save_encoder(const std::string& path, const EncoderParams& e);
EncoderParams load_encoder(const std::string& path);

}  // namespace ogmp::encoder
