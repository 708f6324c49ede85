#include "ogmp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ogmp::sim {

using lti::kPx;
using lti::kPz;
using lti::kTheta;
using lti::kVx;
using lti::kVz;
using lti::kOmega;
using lti::kSrbStateDim;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Ground height with x clamped into the track; the world is treated as
/// extending flat past both ends (terrain_scan clamps the same way).
double ground(const terrain::Track& track, double x) {
  return terrain::height_at(track, std::clamp(x, 0.0, track.length)).height;
}

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

/// Hip anchor: hip_drop below the base center, rotating with pitch.
Vec2 hip_anchor(const PhysicsConfig& cfg, double p_x, double p_z,
                double theta) {
  return {p_x + cfg.hip_drop * std::sin(theta),
          p_z - cfg.hip_drop * std::cos(theta)};
}

}  // namespace

void PhysicsConfig::validate() const {
  srb.validate();
  require(control_dt > 0.0 && substeps > 0, ErrorCode::InvalidArgument,
          "control_dt and substeps must be positive");
  require(friction_mu > 0.0, ErrorCode::InvalidArgument,
          "friction coefficient must be positive");
  require(nominal_height > 0.0 && hip_drop >= 0.0 &&
              hip_drop < nominal_height,
          ErrorCode::InvalidArgument, "inconsistent nominal height geometry");
  const double vertical = nominal_height - hip_drop;
  require(std::hypot(stance_half_width, vertical) <= srb.leg_length,
          ErrorCode::InvalidArgument,
          "feet cannot reach the ground at nominal height");
  require(fz_max_factor > 0.0 && fx_max_factor > 0.0 && tau_max > 0.0,
          ErrorCode::InvalidArgument, "force caps must be positive");
  require(swing_range > 0.0 && swing_range < srb.leg_length,
          ErrorCode::InvalidArgument,
          "swing range must stay inside leg reach");
  require(swing_time_constant > 0.0, ErrorCode::InvalidArgument,
          "swing time constant must be positive");
  require(release_threshold < 0.0, ErrorCode::InvalidArgument,
          "release threshold must be negative so a zero action keeps contact");
}

double EnvState::phase() const {
  const int h = reference.horizon();
  if (h <= 0) return 0.0;
  return static_cast<double>(horizon_step) / static_cast<double>(h);
}

Vector EnvState::srb_state() const {
  Vector x(kSrbStateDim);
  x << p_x, p_z, theta, v_x, v_z, omega, 1.0;
  return x;
}

Vector EnvState::current_target() const {
  if (reference.states.empty()) return srb_state();
  const int idx =
      std::clamp(horizon_step, 0,
                 static_cast<int>(reference.states.size()) - 1);
  return reference.states[static_cast<size_t>(idx)];
}

void EnvState::validate(const PhysicsConfig& physics,
                        const terrain::Track& track) const {
  require(std::isfinite(p_x) && std::isfinite(p_z) && std::isfinite(theta) &&
              std::isfinite(v_x) && std::isfinite(v_z) && std::isfinite(omega),
          ErrorCode::NaNDetected, "non-finite base state");
  const Vec2 hip = hip_anchor(physics, p_x, p_z, theta);
  for (const Foot& foot : feet) {
    require(std::isfinite(foot.x) && std::isfinite(foot.z),
            ErrorCode::NaNDetected, "non-finite foot state");
    require(std::hypot(foot.x - hip.x, foot.z - hip.z) <=
                physics.srb.leg_length + 1e-6,
            ErrorCode::OutOfRange, "foot beyond leg reach");
    if (foot.contact) {
      require(foot.z <= ground(track, foot.x) + 1e-4, ErrorCode::OutOfRange,
              "contact flag set with the foot above the terrain");
    }
  }
}

Action Action::from_vector(const Vector& v) {
  require(v.size() == kActionDim, ErrorCode::DimensionMismatch,
          "action vector must have 8 entries");
  Action a;
  a.raw = v;
  return a;
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kNone: return "none";
    case Termination::kRhoViolation: return "rho_violation";
    case Termination::kFall: return "fall";
    case Termination::kTimeLimit: return "time_limit";
  }
  return "unknown";
}

Vector applied_forces(const PhysicsConfig& physics, const EnvState& state,
                      const Action& action) {
  const double mg = physics.srb.mass * physics.srb.gravity;
  const double fz_max = physics.fz_max_factor * mg;
  const double fx_max = physics.fx_max_factor * mg;
  Vector u = Vector::Zero(lti::kSrbControlDim);
  for (int i = 0; i < 2; ++i) {
    const double fz_raw = std::clamp(action.fz_raw(i), -1.0, 1.0);
    if (!state.feet[static_cast<size_t>(i)].contact ||
        fz_raw < physics.release_threshold) {
      continue;  // swing feet carry no wrench
    }
    const double fz = std::max(fz_raw, 0.0) * fz_max;
    const double fx_req = std::clamp(action.fx_raw(i), -1.0, 1.0) * fx_max;
    const double cone = physics.friction_mu * fz;
    u[3 * i + 0] = std::clamp(fx_req, -cone, cone);
    u[3 * i + 1] = fz;
    u[3 * i + 2] = std::clamp(action.tau_raw(i), -1.0, 1.0) * physics.tau_max;
  }
  return u;
}

EnvState dynamics_step(const PhysicsConfig& physics,
                       const terrain::Track& track, EnvState state,
                       const Action& action, double dt, int substeps) {
  require(dt > 0.0 && substeps > 0, ErrorCode::InvalidArgument,
          "dynamics_step needs positive dt and substeps");
  require(action.raw.allFinite(), ErrorCode::NaNDetected,
          "non-finite action");
  Action a;
  a.raw = action.raw.cwiseMax(-1.0).cwiseMin(1.0);

  const double m = physics.srb.mass;
  const double inertia = physics.srb.inertia;
  const double g = physics.srb.gravity;
  const double leg = physics.srb.leg_length;
  const double h = dt / substeps;

  for (int sub = 0; sub < substeps; ++sub) {
    // Lift decisions come first so a freshly released foot is force-free for
    // the whole substep.
    for (int i = 0; i < 2; ++i) {
      Foot& foot = state.feet[static_cast<size_t>(i)];
      if (foot.contact && a.fz_raw(i) < physics.release_threshold) {
        foot.contact = false;
      }
    }

    const Vector u = applied_forces(physics, state, a);
    double Fx = 0.0, Fz = 0.0, M = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Foot& foot = state.feet[static_cast<size_t>(i)];
      if (!foot.contact) continue;
      const double fx = u[3 * i + 0];
      const double fz = u[3 * i + 1];
      const double rx = foot.x - state.p_x;
      const double rz = foot.z - state.p_z;
      Fx += fx;
      Fz += fz;
      M += rx * fz - rz * fx + u[3 * i + 2];
    }

    // Semi-implicit Euler: velocities first, then positions.
    state.v_x += (Fx / m) * h;
    state.v_z += (Fz / m - g) * h;
    state.omega += (M / inertia) * h;
    state.p_x += state.v_x * h;
    state.p_z += state.v_z * h;
    state.theta += state.omega * h;

    const Vec2 hip = hip_anchor(physics, state.p_x, state.p_z, state.theta);
    for (int i = 0; i < 2; ++i) {
      Foot& foot = state.feet[static_cast<size_t>(i)];
      if (foot.contact) {
        // Pinned while in contact; the leg releases at full stretch.
        if (std::hypot(foot.x - hip.x, foot.z - hip.z) > leg + 1e-9) {
          foot.contact = false;
        }
        continue;
      }
      // Kinematic swing tracking toward the commanded offset at full reach.
      const double off = a.swing_raw(i) * physics.swing_range;
      const double reach = std::sqrt(std::max(leg * leg - off * off, 1e-8));
      const double tx = hip.x + off;
      const double tz = hip.z - reach;
      const double alpha = 1.0 - std::exp(-h / physics.swing_time_constant);
      const double old_z = foot.z;
      foot.x += alpha * (tx - foot.x);
      foot.z += alpha * (tz - foot.z);
      // Keep the foot inside leg reach of the hip.
      const double dx = foot.x - hip.x;
      const double dz = foot.z - hip.z;
      const double dist = std::hypot(dx, dz);
      if (dist > leg) {
        foot.x = hip.x + dx * leg / dist;
        foot.z = hip.z + dz * leg / dist;
      }
      // Touchdown: terrain stops the foot; downward motion makes contact.
      const double th = ground(track, foot.x);
      if (foot.z <= th) {
        foot.z = th;
        if (foot.z < old_z - 1e-12) foot.contact = true;
      }
    }
  }
  return state;
}

RewardTerms compute_reward(const PhysicsConfig& physics,
                           const terrain::Track& track, const EnvState& state,
                           const Vector& ref_state, const Action& action) {
  require(ref_state.size() == kSrbStateDim, ErrorCode::DimensionMismatch,
          "reference state must be a full model state");
  RewardTerms terms;
  const double er_p = std::hypot(state.p_x - ref_state[kPx],
                                 state.p_z - ref_state[kPz]);
  const double er_o = std::abs(state.theta - ref_state[kTheta]);
  terms.track = 0.475 * std::exp(-5.0 * er_p) + 0.475 * std::exp(-5.0 * er_o);

  const Vector u = applied_forces(physics, state, action);
  const double base_rel = state.p_z - ground(track, state.p_x);
  const bool foot_airborne =
      !state.feet[0].contact || !state.feet[1].contact;
  const bool scrape =
      base_rel <= physics.base_scrape_clearance && foot_airborne;
  terms.regulation =
      0.05 * std::exp(-0.01 * u.norm()) - (scrape ? 0.3 : 0.0);
  terms.total = terms.track + terms.regulation;
  return terms;
}

Termination check_termination(const EnvState& state, const Vector& ref_state,
                              const oracle::WeightDiag& W, double rho,
                              const terrain::Track& track, double fall_height,
                              long t, long limit) {
  require(rho > 0.0, ErrorCode::InvalidArgument, "rho must be positive");
  require(ref_state.size() == kSrbStateDim, ErrorCode::DimensionMismatch,
          "reference state must be a full model state");
  if (W.norm(state.srb_state() - ref_state) > rho) {
    return Termination::kRhoViolation;
  }
  if (state.p_z - ground(track, state.p_x) < fall_height) {
    return Termination::kFall;
  }
  if (t >= limit) return Termination::kTimeLimit;
  return Termination::kNone;
}

Vector build_observation(const EnvState& state,
                         const std::array<double, 2>& z,
                         const std::vector<double>& scan,
                         const ObservationMask& mask) {
  require(static_cast<int>(scan.size()) == kScanDim,
          ErrorCode::DimensionMismatch, "terrain scan must have 10 points");
  Vector frame = Vector::Zero(kFrameDim);
  if (mask.proprioception) {
    const Vector target = state.current_target();
    frame[0] = state.p_x - target[kPx];
    frame[1] = state.p_z - target[kPz];
    frame[2] = state.theta;
    frame[3] = state.v_x;
    frame[4] = state.v_z;
    frame[5] = state.omega;
    for (int i = 0; i < 2; ++i) {
      frame[6 + 2 * i] = state.feet[static_cast<size_t>(i)].x - state.p_x;
      frame[7 + 2 * i] = state.feet[static_cast<size_t>(i)].z - state.p_z;
    }
    frame[10] = state.feet[0].contact ? 1.0 : 0.0;
    frame[11] = state.feet[1].contact ? 1.0 : 0.0;
  }
  if (mask.latent) {
    frame[kProprioDim + 0] = z[0];
    frame[kProprioDim + 1] = z[1];
  }
  if (mask.clock) {
    const double phi = state.phase();
    frame[kProprioDim + kLatentDim + 0] = std::sin(2.0 * kPi * phi);
    frame[kProprioDim + kLatentDim + 1] = std::cos(2.0 * kPi * phi);
  }
  if (mask.scan) {
    for (int i = 0; i < kScanDim; ++i) {
      frame[kProprioDim + kLatentDim + kClockDim + i] =
          scan[static_cast<size_t>(i)];
    }
  }
  return frame;
}

EnvConfig EnvConfig::defaults() {
  EnvConfig cfg;
  cfg.W = oracle::WeightDiag::single_axis(kSrbStateDim, kPz);
  return cfg;
}

void EnvConfig::validate() const {
  physics.validate();
  ranges.validate();
  require(rho > 0.0, ErrorCode::InvalidArgument, "rho must be positive");
  require(horizon_steps >= 1, ErrorCode::InvalidArgument,
          "oracle horizon must be at least one step");
  require(time_limit >= 1, ErrorCode::InvalidArgument,
          "time limit must be at least one step");
  require(scan_points == kScanDim, ErrorCode::InvalidArgument,
          "the observation layout fixes the scan at 10 points");
  require(scan_span > 0.0 && lookahead > 0.0 && command_v > 0.0,
          ErrorCode::InvalidArgument,
          "scan span, lookahead, and command speed must be positive");
  require(fall_height > 0.0 && fall_height < physics.nominal_height,
          ErrorCode::InvalidArgument,
          "fall threshold must sit below the nominal height");
  require(track_length > 0.0 && obstacle_density >= 0.0,
          ErrorCode::InvalidArgument, "invalid track parameters");
  require(frame_stack >= 1, ErrorCode::InvalidArgument,
          "frame stack must be at least 1");
  require(W.w.size() == kSrbStateDim, ErrorCode::DimensionMismatch,
          "termination weights must cover the full model state");
  require(W.w.minCoeff() >= 0.0, ErrorCode::InvalidArgument,
          "termination weights must be non-negative");
  require(std::abs(oracle_params.dt - physics.control_dt) < 1e-12,
          ErrorCode::InvalidArgument,
          "oracle and simulator must share one control period");
  require(std::abs(oracle_params.nominal_height - physics.nominal_height) <
              1e-12,
          ErrorCode::InvalidArgument,
          "oracle and simulator must agree on the nominal height");
  if (fixed_track != nullptr) {
    fixed_track->validate();
    require(std::abs(fixed_track->length - track_length) < 1e-9,
            ErrorCode::InvalidArgument,
            "fixed track length must match the configured track length");
  }
}

void write_episode_csv(const std::string& path,
                       const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoFailure, "cannot open '" + path + "'");
  out << "step,p_x,p_z,theta,v_x,v_z,omega,"
         "a_f1x,a_f1z,a_tau1,a_f2x,a_f2z,a_tau2,a_swing1,a_swing2,"
         "reward,r_track,r_regulation,termination,mode\n";
  out.precision(10);
  for (const TraceRow& r : rows) {
    out << r.step << ',' << r.p_x << ',' << r.p_z << ',' << r.theta << ','
        << r.v_x << ',' << r.v_z << ',' << r.omega;
    for (int i = 0; i < kActionDim; ++i) out << ',' << r.action[i];
    out << ',' << r.reward << ',' << r.r_track << ',' << r.r_regulation << ','
        << termination_name(r.termination) << ','
        << terrain::mode_name(r.mode) << "\n";
  }
  out.close();
  require(out.good(), ErrorCode::IoFailure, "short write to '" + path + "'");
}

ParkourEnv::ParkourEnv(const EnvConfig& config)
    : config_((config.validate(), config)),
      oracle_(config.oracle_kind, config.physics.srb, config.oracle_params) {}

terrain::ModeSpec ParkourEnv::current_mode() const {
  return terrain::active_mode(track_, state_.p_x, config_.lookahead,
                              config_.command_v);
}

void ParkourEnv::requery_oracle() {
  oracle::OracleQuery q;
  q.x_t = state_.srb_state();
  q.mode = current_mode();
  const double span = config_.command_v * config_.horizon_steps *
                          config_.physics.control_dt +
                      2.0;
  q.window = oracle::make_terrain_window(
      track_, std::clamp(state_.p_x, 0.0, track_.length), span);
  q.horizon = config_.horizon_steps;
  q.command_v = config_.command_v;
  state_.reference = oracle_.query(q);
  state_.horizon_step = 0;
  ++oracle_queries_;
}

Vector ParkourEnv::current_frame() const {
  const terrain::ModeSpec mode = current_mode();
  const std::array<double, 2>& z =
      config_.mode_codes[static_cast<size_t>(mode.mode)];
  const std::vector<double> scan = terrain::terrain_scan(
      track_, std::clamp(state_.p_x, 0.0, track_.length), config_.scan_points,
      config_.scan_span);
  return build_observation(state_, z, scan, config_.mask);
}

Vector ParkourEnv::stacked_observation() const {
  Vector obs(obs_dim());
  for (int k = 0; k < config_.frame_stack; ++k) {
    obs.segment(k * kFrameDim, kFrameDim) = frames_[static_cast<size_t>(k)];
  }
  return obs;
}

void ParkourEnv::push_frame(const Vector& frame) {
  frames_.erase(frames_.begin());
  frames_.push_back(frame);
}

Vector ParkourEnv::reset(std::uint64_t seed) {
  if (config_.fixed_track != nullptr) {
    track_ = *config_.fixed_track;
  } else {
    track_ = terrain::generate_track(seed, config_.ranges,
                                     config_.track_length,
                                     config_.obstacle_density);
  }
  state_ = EnvState{};
  state_.p_x = 0.0;
  state_.p_z = ground(track_, 0.0) + config_.physics.nominal_height;
  for (int i = 0; i < 2; ++i) {
    Foot& foot = state_.feet[static_cast<size_t>(i)];
    foot.x = (i == 0 ? -1.0 : 1.0) * config_.physics.stance_half_width;
    foot.z = ground(track_, foot.x);
    foot.contact = true;
  }
  termination_ = Termination::kNone;
  episode_active_ = true;
  oracle_queries_ = 0;
  prev_heading_speed_ = 0.0;
  trace_.clear();
  requery_oracle();
  state_.validate(config_.physics, track_);

  frames_.assign(static_cast<size_t>(config_.frame_stack), current_frame());
  return stacked_observation();
}

StepResult ParkourEnv::step(const Action& action) {
  require(episode_active_, ErrorCode::SteppingTerminatedEpisode,
          "episode already terminated; call reset");
  const double prev_px = state_.p_x;

  state_ = dynamics_step(config_.physics, track_, state_, action,
                         config_.physics.control_dt,
                         config_.physics.substeps);
  state_.steps += 1;
  state_.horizon_step += 1;

  const Vector target = state_.current_target();
  StepResult result;
  result.terms =
      compute_reward(config_.physics, track_, state_, target, action);
  result.reward = result.terms.total;
  termination_ = check_termination(state_, target, config_.W, config_.rho,
                                   track_, config_.fall_height, state_.steps,
                                   config_.time_limit);
  result.termination = termination_;
  if (termination_ != Termination::kNone) {
    episode_active_ = false;
  } else if (state_.horizon_step >= config_.horizon_steps) {
    requery_oracle();
  }

  result.info.heading_speed =
      (state_.p_x - prev_px) / config_.physics.control_dt;
  result.info.heading_accel =
      (result.info.heading_speed - prev_heading_speed_) /
      config_.physics.control_dt;
  prev_heading_speed_ = result.info.heading_speed;
  result.info.p_x = state_.p_x;
  result.info.p_z = state_.p_z;
  result.info.tracking_error = config_.W.norm(state_.srb_state() - target);

  push_frame(current_frame());
  result.observation = stacked_observation();

  if (config_.record_trace) {
    TraceRow row;
    row.step = state_.steps;
    row.p_x = state_.p_x;
    row.p_z = state_.p_z;
    row.theta = state_.theta;
    row.v_x = state_.v_x;
    row.v_z = state_.v_z;
    row.omega = state_.omega;
    row.action = action.raw;
    row.reward = result.reward;
    row.r_track = result.terms.track;
    row.r_regulation = result.terms.regulation;
    row.termination = termination_;
    row.mode = current_mode().mode;
    trace_.push_back(row);
  }
  return result;
}

}  // namespace ogmp::sim
