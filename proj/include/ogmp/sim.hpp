#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ogmp/error.hpp"
#include "ogmp/lti.hpp"
#include "ogmp/oracle.hpp"
#include "ogmp/terrain.hpp"

namespace ogmp::sim {

using lti::Vector;

/// Physical constants and actuation limits of the planar point-foot biped.
/// The base is a single rigid body; both legs hang from one hip anchor that
/// sits hip_drop below the base center (rotating with pitch), so a foot on
/// flat ground at nominal height leaves a little leg travel before full
/// stretch.
struct PhysicsConfig {
  lti::SrbParams srb;             // mass, inertia, gravity, leg_length
  double control_dt = 0.025;      // s, policy rate
  int substeps = 5;               // physics substeps per control step
  double friction_mu = 0.6;
  double nominal_height = 0.55;   // m, base height over flat ground
  double hip_drop = 0.12;         // m, hip anchor below the base center
  double stance_half_width = 0.05;  // m, initial foot split about the hip
  double fz_max_factor = 2.2;     // per-foot vertical force cap, x m*g
  double fx_max_factor = 0.8;     // per-foot horizontal force cap, x m*g
  double tau_max = 12.0;          // N m, auxiliary moment cap per foot
  double swing_range = 0.4;       // m, max horizontal swing-target offset
  double swing_time_constant = 0.05;  // s, first-order swing tracking
  double release_threshold = -0.2;  // raw f_z command below this lifts a foot
  double base_scrape_clearance = 0.02;  // m, body-scrape proximity band

  void validate() const;
};

struct Foot {
  double x = 0.0;
  double z = 0.0;
  bool contact = false;
};

/// Full mutable simulator state. The owning environment holds the Track; the
/// state carries the active oracle reference so observation assembly can
/// express the base pose relative to the current tracking target.
struct EnvState {
  double p_x = 0.0, p_z = 0.0, theta = 0.0;
  double v_x = 0.0, v_z = 0.0, omega = 0.0;
  std::array<Foot, 2> feet;
  long steps = 0;
  oracle::ReferenceTrajectory reference;
  int horizon_step = 0;  // index into reference; phase = this / horizon

  double phase() const;
  /// Gravity-augmented model state [p_x, p_z, theta, v_x, v_z, omega, 1].
  Vector srb_state() const;
  /// Reference target for the current step (clamped to the last state).
  Vector current_target() const;
  void validate(const PhysicsConfig& physics,
                const terrain::Track& track) const;
};

constexpr int kActionDim = 8;

/// Raw policy command in [-1, 1]^8, laid out per foot as (f_x, f_z, tau)
/// pairs followed by the two swing-target offsets:
///   [f1_x, f1_z, tau1, f2_x, f2_z, tau2, swing1, swing2].
/// f_z maps to [0, fz_max] (negative halves command zero force; below
/// release_threshold the foot lifts); f_x and tau map symmetrically; swing
/// offsets map to [-swing_range, swing_range] about the hip.
struct Action {
  Eigen::Matrix<double, kActionDim, 1> raw =
      Eigen::Matrix<double, kActionDim, 1>::Zero();

  static Action zero() { return {}; }
  static Action from_vector(const Vector& v);

  double fx_raw(int foot) const { return raw[3 * foot]; }
  double fz_raw(int foot) const { return raw[3 * foot + 1]; }
  double tau_raw(int foot) const { return raw[3 * foot + 2]; }
  double swing_raw(int foot) const { return raw[6 + foot]; }
};

enum class Termination { kNone, kRhoViolation, kFall, kTimeLimit };

const char* termination_name(Termination t);

struct RewardTerms {
  double total = 0.0;
  double track = 0.0;
  double regulation = 0.0;
};

/// Which observation components carry live data; disabled slots are zeroed
/// in place so the network input layout never changes across ablations.
struct ObservationMask {
  bool proprioception = true;
  bool latent = true;
  bool clock = true;
  bool scan = true;
};

constexpr int kProprioDim = 12;
constexpr int kLatentDim = 2;
constexpr int kClockDim = 2;
constexpr int kScanDim = 10;
constexpr int kFrameDim = kProprioDim + kLatentDim + kClockDim + kScanDim;

struct EnvConfig {
  PhysicsConfig physics;
  terrain::ModeParamRanges ranges;
  oracle::OracleKind oracle_kind =
      oracle::OracleKind::defaults(oracle::OracleKindId::kPreview);
  oracle::OracleParams oracle_params;
  double rho = 0.5;
  oracle::WeightDiag W;  // default: base height only, weight 1
  int horizon_steps = 30;      // oracle horizon and re-query period
  long time_limit = 400;       // control steps
  ObservationMask mask;
  int scan_points = kScanDim;
  double scan_span = 1.5;      // m covered by the terrain scan
  double lookahead = 1.5;      // m, obstacle detection for mode selection
  double command_v = 0.6;      // m/s commanded cruise speed
  double fall_height = 0.3;    // m terrain-relative base height
  double track_length = 30.0;  // m
  double obstacle_density = 0.15;  // obstacles per meter
  int frame_stack = 4;
  /// Per-mode latent codes (order: pace, jump, leap, flip, settle).
  std::array<std::array<double, 2>, 5> mode_codes = {
      {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}, {0.0, 0.0}}};
  bool record_trace = false;
  /// When set, every reset uses this track instead of generating one from
  /// the episode seed (fixed-layout evaluation protocols).
  std::shared_ptr<const terrain::Track> fixed_track;

  static EnvConfig defaults();
  void validate() const;
};

struct StepInfo {
  double heading_speed = 0.0;  // (p_x(t) - p_x(t-1)) / dt
  double heading_accel = 0.0;  // finite difference of heading_speed
  double p_x = 0.0;
  double p_z = 0.0;
  double tracking_error = 0.0;  // W-weighted deviation from the reference
};

struct StepResult {
  Vector observation;  // stacked frames, length kFrameDim * frame_stack
  double reward = 0.0;
  RewardTerms terms;
  Termination termination = Termination::kNone;
  StepInfo info;
};

/// Physical per-foot wrench actually applied for a (contacts, action) pair:
/// swing feet contribute zeros, stance forces are clamped to the friction
/// cone. Order matches the model control [f1_x, f1_z, tau1, f2_x, f2_z,
/// tau2].
Vector applied_forces(const PhysicsConfig& physics, const EnvState& state,
                      const Action& action);

/// Semi-implicit Euler integration of the base under policy-supplied contact
/// forces, with kinematic swing-foot tracking, touchdown on downward contact,
/// friction-cone clamping, and full-stretch release. Pure function of its
/// arguments.
EnvState dynamics_step(const PhysicsConfig& physics,
                       const terrain::Track& track, EnvState state,
                       const Action& action, double dt, int substeps);

/// Tracking reward plus regulation: 0.475 e^{-5 |er_p|} + 0.475 e^{-5 |er_o|}
/// + 0.05 e^{-0.01 |u|} - 0.3 [body scrape], where er_p is the base position
/// error against the reference, er_o the pitch error, and u the applied
/// wrench. "Body scrape" means the base is within base_scrape_clearance of
/// local terrain while a foot is airborne.
RewardTerms compute_reward(const PhysicsConfig& physics,
                           const terrain::Track& track, const EnvState& state,
                           const Vector& ref_state, const Action& action);

/// Priority-ordered termination test: reference deviation beyond rho, then
/// terrain-relative fall, then the time limit.
Termination check_termination(const EnvState& state, const Vector& ref_state,
                              const oracle::WeightDiag& W, double rho,
                              const terrain::Track& track, double fall_height,
                              long t, long limit);

/// One observation frame [proprioception, latent, clock, scan]:
///   proprioception (12): base pose relative to the current reference target
///     (dp_x, dp_z), pitch, rates, per-foot offsets from the base, contacts;
///   latent (2): mode code; clock (2): (sin 2 pi phase, cos 2 pi phase);
///   scan (10): terrain heights ahead. Masked slots are zero-filled.
Vector build_observation(const EnvState& state,
                         const std::array<double, 2>& z,
                         const std::vector<double>& scan,
                         const ObservationMask& mask);

struct TraceRow {
  long step = 0;
  double p_x = 0.0, p_z = 0.0, theta = 0.0;
  double v_x = 0.0, v_z = 0.0, omega = 0.0;
  Eigen::Matrix<double, kActionDim, 1> action =
      Eigen::Matrix<double, kActionDim, 1>::Zero();
  double reward = 0.0, r_track = 0.0, r_regulation = 0.0;
  Termination termination = Termination::kNone;
  terrain::Mode mode = terrain::Mode::kPace;
};

void write_episode_csv(const std::string& path,
                       const std::vector<TraceRow>& rows);

/// The POMDP environment: owns the track, the oracle, and the frame stack.
/// Deterministic: (seed, action sequence) fully determines every result.
class ParkourEnv {
 public:
  explicit ParkourEnv(const EnvConfig& config);

  /// Fresh track from the seed; robot at rest at x = 0 on nominal height;
  /// first oracle query issued; returns the initial stacked observation.
  Vector reset(std::uint64_t seed);

  /// Advance one control step. Throws SteppingTerminatedEpisode once a
  /// previous step has terminated the episode and reset was not called.
  StepResult step(const Action& action);

  int obs_dim() const { return kFrameDim * config_.frame_stack; }
  const EnvConfig& config() const { return config_; }
  const EnvState& state() const { return state_; }
  const terrain::Track& track() const { return track_; }
  Termination last_termination() const { return termination_; }
  int oracle_query_count() const { return oracle_queries_; }
  terrain::ModeSpec current_mode() const;
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  void requery_oracle();
  Vector current_frame() const;
  Vector stacked_observation() const;
  void push_frame(const Vector& frame);

  EnvConfig config_;
  oracle::Oracle oracle_;
  terrain::Track track_;
  EnvState state_;
  Termination termination_ = Termination::kNone;
  bool episode_active_ = false;
  int oracle_queries_ = 0;
  double prev_heading_speed_ = 0.0;
  std::vector<Vector> frames_;  // ring of the frame_stack latest frames
  std::vector<TraceRow> trace_;
};

}  // namespace ogmp::sim
