#pragma once

#include <cstdint>

#include "ogmp/ppo.hpp"

namespace ogmp::ppo {

/// 1-d double-integrator reaching task used to calibrate the trainer.
/// Episode: goal drawn uniformly from [-0.5, 0.5] by the reset seed, the
/// point starts at rest at the origin, the scalar action is clamped to
/// [-1, 1] and scaled to an acceleration. Reward exp(-5 |pos - goal|) per
/// step; episodes only end by time limit.
class PointMassEnv : public RolloutEnv {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kMaxAccel = 4.0;
  static constexpr int kEpisodeSteps = 150;

  int obs_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Vector reset(std::uint64_t seed) override;
  EnvStep step(const Vector& action) override;

  double goal() const { return goal_; }
  double position() const { return pos_; }

 private:
  Vector observe() const;

  double goal_ = 0.0;
  double pos_ = 0.0;
  double vel_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
};

/// Best achievable mean per-step reward is 1 once the point parks on the
/// goal; the approach transient keeps the optimum slightly below T.
double point_mass_max_return();

}  // namespace ogmp::ppo
