#include "ogmp/pointmass.hpp"

#include <algorithm>
#include <cmath>

namespace ogmp::ppo {

Vector PointMassEnv::observe() const {
  Vector obs(2);
  obs(0) = pos_ - goal_;
  obs(1) = vel_;
  return obs;
}

Vector PointMassEnv::reset(std::uint64_t seed) {
  RngStream rng(seed);
  goal_ = rng.uniform(-0.5, 0.5);
  pos_ = 0.0;
  vel_ = 0.0;
  steps_ = 0;
  done_ = false;
  return observe();
}

EnvStep PointMassEnv::step(const Vector& action) {
  require(!done_, ErrorCode::SteppingTerminatedEpisode,
          "reset the point-mass environment before stepping");
  require(action.size() == 1, ErrorCode::DimensionMismatch,
          "point-mass action must be a scalar");
  const double accel = std::clamp(action(0), -1.0, 1.0) * kMaxAccel;
  vel_ += accel * kDt;
  pos_ += vel_ * kDt;
  steps_ += 1;

  EnvStep out;
  out.reward = std::exp(-5.0 * std::abs(pos_ - goal_));
  out.termination = (steps_ >= kEpisodeSteps)
                        ? sim::Termination::kTimeLimit
                        : sim::Termination::kNone;
  done_ = out.termination != sim::Termination::kNone;
  out.observation = observe();
  out.progress = pos_;
  out.tracking_error = std::abs(pos_ - goal_);
  return out;
}

double point_mass_max_return() {
  return 1.0 * static_cast<double>(PointMassEnv::kEpisodeSteps);
}

}  // namespace ogmp::ppo
