#pragma once

#include <cstdint>
#include <vector>

#include "ogmp/lti.hpp"
#include "ogmp/terrain.hpp"

namespace ogmp::oracle {

using lti::Matrix;
using lti::Vector;

enum class Phase : std::uint8_t { kContact = 0, kFlight = 1 };

/// Finite-horizon reference produced by an oracle query. `states` holds
/// horizon+1 full model states; `phases[k]` labels the step from states[k]
/// to states[k+1]; `controls[k]` is the planner's deviation-from-hover
/// control for that step (zero in flight and for the interpolating oracle).
struct ReferenceTrajectory {
  std::vector<Vector> states;
  std::vector<Phase> phases;
  std::vector<Vector> controls;
  double horizon_dt = 0.0;
  terrain::Mode mode_tag = terrain::Mode::kPace;

  int horizon() const { return static_cast<int>(phases.size()); }
  void validate() const;
};

enum class OracleKindId { kLinearInterp, kLqr, kPreview };

const char* oracle_kind_name(OracleKindId id);

/// Oracle family plus the tracking weights shared by the optimizing kinds.
/// preview_window = 0 means "use the query horizon".
struct OracleKind {
  OracleKindId id = OracleKindId::kPreview;
  Matrix Q_x;  // state weight on the 6-dim core
  Matrix R;    // control weight (6x6)
  double Q_e = 1.0;
  int preview_window = 0;

  static OracleKind defaults(OracleKindId id);
};

/// Gains of the error-integral preview tracker on the scalar base-height
/// output: u = -G_i*sum(e) - G_x*x - sum_j G_p[j]*y_ref[k+j].
struct PreviewGains {
  Matrix G_i;                // m x 1
  Matrix G_x;                // m x n
  std::vector<Matrix> G_p;   // each m x 1; G_p[0] is the j = 1 gain
};

/// Uniformly sampled heightfield slice ahead of the base, the oracle's local
/// view of the terrain. Queries clamp to the sampled span.
struct TerrainWindow {
  double base_x = 0.0;
  double dx = 0.02;
  std::vector<double> heights;
  std::vector<std::uint8_t> over_gap;

  double height_at(double x) const;
  bool gap_at(double x) const;
  void validate() const;
};

TerrainWindow make_terrain_window(const terrain::Track& track, double base_x,
                                  double lookahead, double dx = 0.02);

/// A query: current full state, the active mode, the local terrain view, the
/// horizon in steps, and the commanded cruise speed used when the mode itself
/// does not fix one (jump/leap keep the commanded pace).
struct OracleQuery {
  Vector x_t;
  terrain::ModeSpec mode;
  TerrainWindow window;
  int horizon = 1;
  double command_v = 0.0;

  void validate() const;
};

/// Shared oracle tuning. `step_threshold` separates trackable ground-height
/// changes from ones that must be flown over; `clearance_margin` is the apex
/// margin above an obstacle; the crouch carves an anticipatory dip into the
/// target height profile just before each takeoff.
struct OracleParams {
  double dt = 0.025;
  double nominal_height = 0.55;
  double crouch_depth = 0.08;
  int crouch_steps = 6;
  double clearance_margin = 0.05;
  int blend_steps = 8;
  double step_threshold = 0.02;
  double default_cross_v = 0.6;
  int max_preview = 128;

  void validate() const;
};

/// One phase of a planned horizon: steps [begin, end). Flight ranges carry
/// the takeoff overrides for the planner (vertical speed to clear/land, and
/// angular speed for flips). Overrides never apply at step 0, where the
/// trajectory must continue the queried state.
struct PhaseRange {
  Phase phase = Phase::kContact;
  int begin = 0;
  int end = 0;
  double takeoff_vz = 0.0;
  double takeoff_omega = 0.0;
  bool override_takeoff = false;
};

/// Pure interpolation from the query state to a goal state: positions
/// (p_x, p_z, theta) move linearly, velocities come from finite-differencing
/// the positions. Phase labels are all contact.
ReferenceTrajectory li_reference(const Vector& x_t, const Vector& goal,
                                 int horizon, double dt);

/// Ballistic rollout with zero control.
std::vector<Vector> flight_rollout(const lti::LtiModel& model,
                                   const Vector& x_t, int steps);

/// Partition of a query's horizon into contact and flight ranges. Flight is
/// scheduled over gap crossings, over rises/drops in the support height that
/// exceed the step threshold, and over the flip arc; contact everywhere else.
std::vector<PhaseRange> phase_split(const OracleQuery& q,
                                    const OracleParams& params);

/// Contact-phase LQR tracking on the gravity-free core model: simulates
/// u_k = -K (x_k - x_ref[k]) from x0. Returns steps+1 core states, where
/// steps = len(x_ref) - 1. Appends the applied controls to `controls_out`
/// when given.
std::vector<Vector> lqr_reference(const lti::LtiModel& core, const Matrix& K,
                                  const Vector& x0_core,
                                  const std::vector<Vector>& x_ref,
                                  std::vector<Vector>* controls_out = nullptr);

/// Preview gains on the model augmented with an error-integral state for the
/// scalar output C*x. Solves the augmented Riccati equation, then unrolls the
/// closed-loop transpose recursion for the N_p feedforward gains.
PreviewGains preview_gains(const lti::LtiModel& model, double Q_e,
                           const Matrix& Q_x, const Matrix& R, int N_p);

/// Contact-phase preview tracking on the gravity-free core model. `nominal`
/// (steps+1 entries) holds the heading/attitude nominal state per step with a
/// constant entry in the height slot (the shift origin); `y_target` holds at
/// least steps + len(G_p) absolute target heights.
std::vector<Vector> preview_reference(const lti::LtiModel& core,
                                      const PreviewGains& gains,
                                      const Vector& x0_core,
                                      const std::vector<Vector>& nominal,
                                      const std::vector<double>& y_target,
                                      std::vector<Vector>* controls_out = nullptr);

/// Diagonal state weight; norm(d) = sqrt(sum w_i d_i^2).
struct WeightDiag {
  Vector w;

  double norm(const Vector& d) const;
  static WeightDiag single_axis(int dim, int axis, double weight = 1.0);
};

/// Max over steps of the W-weighted distance between two equal-length
/// trajectories.
double measure_deviation(const ReferenceTrajectory& ref_a,
                         const ReferenceTrajectory& ref_b,
                         const WeightDiag& W);

/// Immutable oracle: model and gains precomputed once, query is pure.
class Oracle {
 public:
  Oracle(const OracleKind& kind, const lti::SrbParams& srb,
         const OracleParams& params);

  ReferenceTrajectory query(const OracleQuery& q) const;

  const OracleKind& kind() const { return kind_; }
  const OracleParams& params() const { return params_; }
  const lti::LtiModel& full_model() const { return full_model_; }
  const lti::LtiModel& core_model() const { return core_model_; }
  const Matrix& lqr_gain() const { return K_; }
  const PreviewGains& gains() const { return preview_; }

 private:
  OracleKind kind_;
  lti::SrbParams srb_;
  OracleParams params_;
  lti::LtiModel full_model_;
  lti::LtiModel core_model_;
  Matrix K_;
  PreviewGains preview_;
};

/// Mean max-deviation of each oracle family from a terrain-following height
/// target over a fixed suite of smoothed step profiles. Used to check the
/// expected ordering: interpolation worst, LQR better, preview best.
struct DeviationSummary {
  double mean_li = 0.0;
  double mean_lqr = 0.0;
  double mean_prev = 0.0;
};

DeviationSummary run_deviation_suite(const lti::SrbParams& srb,
                                     const OracleParams& params);

}  // namespace ogmp::oracle
