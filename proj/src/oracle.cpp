#include "ogmp/oracle.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace ogmp::oracle {

using lti::kPx;
using lti::kPz;
using lti::kTheta;
using lti::kVx;
using lti::kVz;
using lti::kOmega;
using lti::kSrbCoreDim;
using lti::kSrbControlDim;
using lti::kSrbStateDim;

namespace {

Vector core_of(const Vector& full) { return full.head(kSrbCoreDim); }

Vector full_of(const Vector& core) {
  Vector full(kSrbStateDim);
  full.head(kSrbCoreDim) = core;
  full(kSrbCoreDim) = 1.0;
  return full;
}

/// Everything the per-kind generators need, derived once per query.
struct Plan {
  int H = 0;
  std::vector<double> p_x;      // H+1 heading reference
  std::vector<double> v;        // H+1 heading speed (v[k] drives step k)
  std::vector<double> support;  // H+1 ground height, held across gaps
  std::vector<std::uint8_t> unsupported;  // H+1 over-gap flags
  std::vector<double> y_plain;  // H+1 support + nominal height
  std::vector<double> y_tgt;    // H+1 y_plain with pre-takeoff crouch dips
  std::vector<double> y_ext;    // H+1+max_preview extension for preview
  std::vector<double> theta;    // H+1 attitude reference
  std::vector<PhaseRange> ranges;  // alternating, covering [0, H)
};

struct FlightCandidate {
  int begin = 0;
  int end_unclamped = 0;
  double omega = 0.0;  // nonzero only for flip arcs
  bool has_omega = false;
};

double cruise_speed(const OracleQuery& q, const OracleParams& params) {
  switch (q.mode.mode) {
    case terrain::Mode::kPace: return q.mode.a;
    case terrain::Mode::kJump:
    case terrain::Mode::kLeap:
      return q.command_v > 0.0 ? q.command_v : params.default_cross_v;
    case terrain::Mode::kFlip:
    case terrain::Mode::kSettle: return 0.0;
  }
  return 0.0;
}

Plan build_plan(const OracleQuery& q, const OracleParams& P) {
  const int H = q.horizon;
  const double dt = P.dt;
  const double g = 9.81;  // plan gravity matches SrbParams default; the model
                          // used for flight carries the configured value

  Plan plan;
  plan.H = H;
  plan.p_x.resize(H + 1);
  plan.v.resize(H + 1);
  plan.support.resize(H + 1);
  plan.unsupported.resize(H + 1);
  plan.theta.assign(H + 1, 0.0);

  // Heading ramp: blend from the queried speed to the commanded cruise speed.
  const double v0 = q.x_t(kVx);
  const double vc = cruise_speed(q, P);
  const int nb = std::max(1, std::min(P.blend_steps, H));
  plan.p_x[0] = q.x_t(kPx);
  for (int k = 0; k <= H; ++k) {
    const double frac = std::min(1.0, static_cast<double>(k) / nb);
    plan.v[k] = v0 + (vc - v0) * frac;
    if (k < H) plan.p_x[k + 1] = plan.p_x[k] + plan.v[k] * dt;
  }

  // Ground support under the heading reference; hold the last supported
  // height across gaps so contact targets never dive into them.
  double held = 0.0;
  bool have_held = false;
  for (int k = 0; k <= H; ++k) {
    const bool over_gap = q.window.gap_at(plan.p_x[k]);
    plan.unsupported[k] = over_gap ? 1 : 0;
    if (!over_gap) {
      held = q.window.height_at(plan.p_x[k]);
      have_held = true;
    } else if (!have_held) {
      held = 0.0;  // query begins over a gap: reference level is the rim
    }
    plan.support[k] = held;
  }

  // --- flight scheduling -------------------------------------------------
  std::vector<FlightCandidate> cands;

  // Gap crossings: flight over each maximal unsupported run.
  for (int k = 0; k <= H;) {
    if (!plan.unsupported[k]) {
      ++k;
      continue;
    }
    int j = k;
    while (j <= H && plan.unsupported[j]) ++j;
    cands.push_back({k, j, 0.0, false});
    k = j;
  }

  // Support steps: land on top of rises, hop off drops.
  const double m = P.clearance_margin;
  for (int k = 1; k <= H; ++k) {
    const double change = plan.support[k] - plan.support[k - 1];
    if (change > P.step_threshold) {
      const double t_fl =
          std::sqrt(2.0 * (change + m) / g) + std::sqrt(2.0 * m / g);
      const int n = std::max(2, static_cast<int>(std::llround(t_fl / dt)));
      cands.push_back({std::max(0, k - n), k, 0.0, false});
    } else if (change < -P.step_threshold) {
      const double drop = -change;
      const double t_fl =
          std::sqrt(2.0 * m / g) + std::sqrt(2.0 * (drop + m) / g);
      const int n = std::max(2, static_cast<int>(std::llround(t_fl / dt)));
      cands.push_back({k - 1, k - 1 + n, 0.0, false});
    }
  }

  // Flip: crouch, then a prescribed high arc rotating by the mode's angle.
  if (q.mode.mode == terrain::Mode::kFlip) {
    const double apex = std::max(0.05, q.mode.b);
    const double t_fl = 2.0 * std::sqrt(2.0 * apex / g);
    const int n = std::max(2, static_cast<int>(std::llround(t_fl / dt)));
    const int a = std::min(P.crouch_steps, std::max(0, H - 2));
    cands.push_back({a, a + n, q.mode.a / (n * dt), true});
  }

  std::sort(cands.begin(), cands.end(),
            [](const FlightCandidate& x, const FlightCandidate& y) {
              return x.begin < y.begin;
            });
  std::vector<FlightCandidate> merged;
  for (const auto& c : cands) {
    if (!merged.empty() && c.begin <= merged.back().end_unclamped) {
      merged.back().end_unclamped =
          std::max(merged.back().end_unclamped, c.end_unclamped);
      if (c.has_omega) {
        merged.back().omega = c.omega;
        merged.back().has_omega = true;
      }
    } else {
      merged.push_back(c);
    }
  }

  // Resolve takeoffs and clamp to the horizon.
  std::vector<PhaseRange> flights;
  for (const auto& c : merged) {
    const int a = c.begin;
    const int b = std::min(c.end_unclamped, H);
    if (a >= H || b - a <= 0) continue;
    const bool truncated = c.end_unclamped > H;
    const int n = b - a;
    const double rise = plan.support[b] - plan.support[a];

    PhaseRange r;
    r.phase = Phase::kFlight;
    r.begin = a;
    r.end = b;
    if (c.has_omega) {
      // Flip arcs target their apex; the rotation rate spans the full arc.
      const double apex = std::max(0.05, q.mode.b);
      r.takeoff_vz = std::sqrt(2.0 * g * apex);
      r.takeoff_omega = c.omega;
    } else if (truncated) {
      r.takeoff_vz = std::sqrt(2.0 * g * (std::max(rise, 0.0) + m));
    } else {
      // Explicit-Euler exact landing: sum of n velocity samples equals rise.
      r.takeoff_vz = rise / (n * dt) + 0.5 * g * dt * (n - 1);
    }
    r.override_takeoff = (a > 0);
    flights.push_back(r);
  }

  // Alternating cover of [0, H).
  int cursor = 0;
  for (const auto& f : flights) {
    if (f.begin > cursor) {
      plan.ranges.push_back({Phase::kContact, cursor, f.begin, 0, 0, false});
    }
    plan.ranges.push_back(f);
    cursor = f.end;
  }
  if (cursor < H) {
    plan.ranges.push_back({Phase::kContact, cursor, H, 0, 0, false});
  }

  // --- target profiles ---------------------------------------------------
  plan.y_plain.resize(H + 1);
  for (int k = 0; k <= H; ++k) {
    plan.y_plain[k] = plan.support[k] + P.nominal_height;
  }
  plan.y_tgt = plan.y_plain;
  for (const auto& f : flights) {
    const int start = std::max(0, f.begin - P.crouch_steps);
    const int n_window = f.begin - start;
    for (int i = start; i < f.begin; ++i) {
      const double frac = static_cast<double>(i - start + 1) / n_window;
      plan.y_tgt[i] -= P.crouch_depth * frac;
    }
  }

  // Attitude: upright, except after a flip arc where the rotated angle is
  // the new reference.
  if (q.mode.mode == terrain::Mode::kFlip) {
    for (const auto& f : flights) {
      if (f.takeoff_omega == 0.0) continue;
      for (int k = f.begin + 1; k <= H; ++k) {
        const double frac =
            std::min(1.0, static_cast<double>(k - f.begin) / (f.end - f.begin));
        plan.theta[k] = q.mode.a * frac;
      }
    }
  }

  // Extended height targets for the preview window: continue the cruise past
  // the horizon and sample the window (clamped at its far end).
  plan.y_ext.resize(H + 1 + P.max_preview);
  for (int k = 0; k <= H; ++k) plan.y_ext[k] = plan.y_tgt[k];
  double px = plan.p_x[H];
  double held_ext = plan.support[H];
  for (int j = H + 1; j < static_cast<int>(plan.y_ext.size()); ++j) {
    px += plan.v[H] * dt;
    if (!q.window.gap_at(px)) held_ext = q.window.height_at(px);
    plan.y_ext[j] = held_ext + P.nominal_height;
  }

  return plan;
}

}  // namespace

const char* oracle_kind_name(OracleKindId id) {
  switch (id) {
    case OracleKindId::kLinearInterp: return "li";
    case OracleKindId::kLqr: return "lqr";
    case OracleKindId::kPreview: return "prev";
  }
  return "unknown";
}

OracleKind OracleKind::defaults(OracleKindId id) {
  OracleKind kind;
  kind.id = id;
  // Position errors must dominate velocity errors, or the cheap-control
  // optimum turns heavily overdamped (a ~1 rad/s position pole). These
  // weights put the slowest closed-loop pole near z = 0.47 at dt = 25 ms.
  kind.Q_x = Matrix::Identity(kSrbCoreDim, kSrbCoreDim);
  kind.Q_x.topLeftCorner(3, 3) *= 100.0;
  kind.Q_x.bottomRightCorner(3, 3) *= 0.1;
  // R is scaled to the force magnitudes of the model (~ m*g newtons): unit
  // state errors must outweigh the ~1e4 N^2 cost of corrective forces.
  kind.R = 1e-6 * Matrix::Identity(kSrbControlDim, kSrbControlDim);
  kind.Q_e = 1.0;
  kind.preview_window = 0;
  if (id == OracleKindId::kPreview) {
    // The height channel is owned by the integral + preview action; weighting
    // it in Q_x would pull p_z toward the constant shift origin and fight
    // every moving target.
    kind.Q_x(kPz, kPz) = 0.0;
    kind.Q_x(kVz, kVz) = 0.0;
  }
  return kind;
}

void ReferenceTrajectory::validate() const {
  require(!states.empty(), ErrorCode::EmptyInput,
          "ReferenceTrajectory needs at least one state");
  require(phases.size() + 1 == states.size(), ErrorCode::LengthMismatch,
          "phases must have one entry per step");
  require(controls.empty() || controls.size() == phases.size(),
          ErrorCode::LengthMismatch, "controls must match the step count");
  for (const auto& x : states) {
    require(x.allFinite(), ErrorCode::NaNDetected,
            "non-finite reference state");
  }
}

void TerrainWindow::validate() const {
  require(dx > 0.0, ErrorCode::InvalidArgument, "TerrainWindow.dx must be > 0");
  require(!heights.empty(), ErrorCode::EmptyInput,
          "TerrainWindow has no samples");
  require(heights.size() == over_gap.size(), ErrorCode::LengthMismatch,
          "TerrainWindow height/gap size mismatch");
}

double TerrainWindow::height_at(double x) const {
  const int n = static_cast<int>(heights.size());
  int i = static_cast<int>(std::floor((x - base_x) / dx + 1e-9));
  i = std::clamp(i, 0, n - 1);
  return heights[i];
}

bool TerrainWindow::gap_at(double x) const {
  const int n = static_cast<int>(heights.size());
  int i = static_cast<int>(std::floor((x - base_x) / dx + 1e-9));
  i = std::clamp(i, 0, n - 1);
  return over_gap[i] != 0;
}

TerrainWindow make_terrain_window(const terrain::Track& track, double base_x,
                                  double lookahead, double dx) {
  require(lookahead > 0.0, ErrorCode::InvalidArgument,
          "lookahead must be > 0");
  require(dx > 0.0, ErrorCode::InvalidArgument, "dx must be > 0");
  TerrainWindow w;
  w.base_x = base_x;
  w.dx = dx;
  const int n = static_cast<int>(std::ceil(lookahead / dx)) + 1;
  w.heights.resize(n);
  w.over_gap.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = std::clamp(base_x + i * dx, 0.0, track.length);
    const auto h = terrain::height_at(track, x);
    w.heights[i] = h.height;
    w.over_gap[i] = h.over_gap ? 1 : 0;
  }
  w.validate();
  return w;
}

void OracleQuery::validate() const {
  require(x_t.size() == kSrbStateDim, ErrorCode::DimensionMismatch,
          "query state must be the 7-dim model state");
  require(x_t.allFinite(), ErrorCode::InvalidArgument,
          "query state must be finite");
  require(std::abs(x_t(kSrbCoreDim) - 1.0) < 1e-12, ErrorCode::InvalidArgument,
          "query state's constant coordinate must be 1");
  require(horizon >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  require(command_v >= 0.0 && std::isfinite(command_v),
          ErrorCode::InvalidArgument, "command_v must be finite and >= 0");
  window.validate();
}

void OracleParams::validate() const {
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");
  require(nominal_height > 0.0, ErrorCode::InvalidArgument,
          "nominal_height must be > 0");
  require(crouch_depth >= 0.0, ErrorCode::InvalidArgument,
          "crouch_depth must be >= 0");
  require(crouch_steps >= 0, ErrorCode::InvalidArgument,
          "crouch_steps must be >= 0");
  require(clearance_margin > 0.0, ErrorCode::InvalidArgument,
          "clearance_margin must be > 0");
  require(blend_steps >= 1, ErrorCode::InvalidArgument,
          "blend_steps must be >= 1");
  require(step_threshold > 0.0, ErrorCode::InvalidArgument,
          "step_threshold must be > 0");
  require(default_cross_v > 0.0, ErrorCode::InvalidArgument,
          "default_cross_v must be > 0");
  require(max_preview >= 1, ErrorCode::InvalidArgument,
          "max_preview must be >= 1");
}

ReferenceTrajectory li_reference(const Vector& x_t, const Vector& goal,
                                 int horizon, double dt) {
  require(horizon >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");
  require(x_t.size() == kSrbStateDim && goal.size() == kSrbStateDim,
          ErrorCode::DimensionMismatch, "li_reference expects 7-dim states");

  ReferenceTrajectory traj;
  traj.horizon_dt = dt;
  traj.states.resize(horizon + 1);
  for (int k = 0; k <= horizon; ++k) {
    const double frac = static_cast<double>(k) / horizon;
    Vector x = Vector::Zero(kSrbStateDim);
    x(kPx) = x_t(kPx) + frac * (goal(kPx) - x_t(kPx));
    x(kPz) = x_t(kPz) + frac * (goal(kPz) - x_t(kPz));
    x(kTheta) = x_t(kTheta) + frac * (goal(kTheta) - x_t(kTheta));
    x(kSrbCoreDim) = 1.0;
    traj.states[k] = x;
  }
  for (int k = 0; k <= horizon; ++k) {
    const int a = std::min(k, horizon - 1);
    traj.states[k](kVx) =
        (traj.states[a + 1](kPx) - traj.states[a](kPx)) / dt;
    traj.states[k](kVz) =
        (traj.states[a + 1](kPz) - traj.states[a](kPz)) / dt;
    traj.states[k](kOmega) =
        (traj.states[a + 1](kTheta) - traj.states[a](kTheta)) / dt;
  }
  traj.phases.assign(horizon, Phase::kContact);
  traj.controls.assign(horizon, Vector::Zero(kSrbControlDim));
  traj.validate();
  return traj;
}

std::vector<Vector> flight_rollout(const lti::LtiModel& model,
                                   const Vector& x_t, int steps) {
  require(steps >= 0, ErrorCode::InvalidArgument, "steps must be >= 0");
  std::vector<Vector> controls(steps, Vector::Zero(model.control_dim));
  return lti::rollout_lti(model, x_t, controls);
}

std::vector<PhaseRange> phase_split(const OracleQuery& q,
                                    const OracleParams& params) {
  q.validate();
  params.validate();
  return build_plan(q, params).ranges;
}

std::vector<Vector> lqr_reference(const lti::LtiModel& core, const Matrix& K,
                                  const Vector& x0_core,
                                  const std::vector<Vector>& x_ref,
                                  std::vector<Vector>* controls_out) {
  core.validate();
  require(!x_ref.empty(), ErrorCode::EmptyInput, "x_ref must be non-empty");
  require(x0_core.size() == core.state_dim, ErrorCode::DimensionMismatch,
          "x0 dimension mismatch");
  require(K.rows() == core.control_dim && K.cols() == core.state_dim,
          ErrorCode::DimensionMismatch, "gain dimension mismatch");

  const int steps = static_cast<int>(x_ref.size()) - 1;
  std::vector<Vector> states(steps + 1);
  states[0] = x0_core;
  for (int k = 0; k < steps; ++k) {
    require(x_ref[k].size() == core.state_dim, ErrorCode::DimensionMismatch,
            "x_ref dimension mismatch");
    const Vector u = -K * (states[k] - x_ref[k]);
    if (controls_out) controls_out->push_back(u);
    states[k + 1] = core.A * states[k] + core.B * u;
  }
  return states;
}

PreviewGains preview_gains(const lti::LtiModel& model, double Q_e,
                           const Matrix& Q_x, const Matrix& R, int N_p) {
  model.validate();
  require(model.C.rows() == 1, ErrorCode::DimensionMismatch,
          "preview tracking needs a scalar output");
  require(N_p >= 1, ErrorCode::InvalidArgument, "N_p must be >= 1");
  require(Q_e >= 0.0, ErrorCode::InvalidArgument, "Q_e must be >= 0");
  const int n = model.state_dim;
  const int m = model.control_dim;
  require(Q_x.rows() == n && Q_x.cols() == n, ErrorCode::DimensionMismatch,
          "Q_x must be n x n");
  require(R.rows() == m && R.cols() == m, ErrorCode::DimensionMismatch,
          "R must be m x m");

  // Error-integral augmentation: X = [sum e; x], e = C x - y_ref.
  Matrix At = Matrix::Zero(n + 1, n + 1);
  At(0, 0) = 1.0;
  At.block(0, 1, 1, n) = model.C * model.A;
  At.block(1, 1, n, n) = model.A;
  Matrix Bt = Matrix::Zero(n + 1, m);
  Bt.block(0, 0, 1, m) = model.C * model.B;
  Bt.block(1, 0, n, m) = model.B;
  Matrix Qt = Matrix::Zero(n + 1, n + 1);
  Qt(0, 0) = Q_e;
  Qt.block(1, 1, n, n) = Q_x;

  const auto sol = lti::solve_dare(At, Bt, Qt, R);

  PreviewGains gains;
  gains.G_i = sol.K.leftCols(1);
  gains.G_x = sol.K.rightCols(n);

  const Matrix inner = R + Bt.transpose() * sol.P * Bt;
  Eigen::LLT<Matrix> llt(inner);
  require(llt.info() == Eigen::Success, ErrorCode::SingularInnerMatrix,
          "R + B'PB is not positive definite");
  Vector E = Vector::Zero(n + 1);
  E(0) = -1.0;
  const Matrix Act = (At - Bt * sol.K).transpose();
  Vector w = sol.P * E;
  gains.G_p.reserve(N_p);
  for (int j = 1; j <= N_p; ++j) {
    gains.G_p.push_back(llt.solve(Bt.transpose() * w));
    w = Act * w;
  }
  return gains;
}

std::vector<Vector> preview_reference(const lti::LtiModel& core,
                                      const PreviewGains& gains,
                                      const Vector& x0_core,
                                      const std::vector<Vector>& nominal,
                                      const std::vector<double>& y_target,
                                      std::vector<Vector>* controls_out) {
  core.validate();
  require(!nominal.empty(), ErrorCode::EmptyInput, "nominal must be non-empty");
  require(x0_core.size() == core.state_dim, ErrorCode::DimensionMismatch,
          "x0 dimension mismatch");
  const int steps = static_cast<int>(nominal.size()) - 1;
  const int N_p = static_cast<int>(gains.G_p.size());
  require(static_cast<int>(y_target.size()) >= steps + N_p,
          ErrorCode::LengthMismatch,
          "y_target must cover the horizon plus the preview window");

  const double y0 = nominal[0](kPz);  // shift origin for the height channel
  std::vector<Vector> states(steps + 1);
  states[0] = x0_core;
  double err_sum = 0.0;
  for (int k = 0; k < steps; ++k) {
    require(nominal[k].size() == core.state_dim, ErrorCode::DimensionMismatch,
            "nominal dimension mismatch");
    const Vector zeta = states[k] - nominal[k];
    err_sum += states[k](kPz) - y_target[k];
    Vector u = -gains.G_i * err_sum - gains.G_x * zeta;
    for (int j = 1; j <= N_p; ++j) {
      u -= gains.G_p[j - 1] * (y_target[k + j] - y0);
    }
    if (controls_out) controls_out->push_back(u);
    states[k + 1] = core.A * states[k] + core.B * u;
  }
  return states;
}

double WeightDiag::norm(const Vector& d) const {
  require(d.size() == w.size(), ErrorCode::DimensionMismatch,
          "WeightDiag dimension mismatch");
  return std::sqrt((w.array() * d.array().square()).sum());
}

WeightDiag WeightDiag::single_axis(int dim, int axis, double weight) {
  require(dim >= 1 && axis >= 0 && axis < dim, ErrorCode::InvalidArgument,
          "bad WeightDiag axis");
  WeightDiag W;
  W.w = Vector::Zero(dim);
  W.w(axis) = weight;
  return W;
}

double measure_deviation(const ReferenceTrajectory& ref_a,
                         const ReferenceTrajectory& ref_b,
                         const WeightDiag& W) {
  require(ref_a.states.size() == ref_b.states.size(),
          ErrorCode::LengthMismatch, "trajectory length mismatch");
  double worst = 0.0;
  for (size_t k = 0; k < ref_a.states.size(); ++k) {
    worst = std::max(worst, W.norm(ref_a.states[k] - ref_b.states[k]));
  }
  return worst;
}

Oracle::Oracle(const OracleKind& kind, const lti::SrbParams& srb,
               const OracleParams& params)
    : kind_(kind), srb_(srb), params_(params) {
  params_.validate();
  full_model_ = lti::build_srb_lti(srb_, 0.0, params_.dt);
  core_model_ = lti::strip_gravity_state(full_model_);
  require(kind_.Q_x.rows() == kSrbCoreDim && kind_.R.rows() == kSrbControlDim,
          ErrorCode::DimensionMismatch, "oracle weights sized for the core");
  K_ = lti::lqr_closed_loop(core_model_, kind_.Q_x, kind_.R).K;
  preview_ =
      preview_gains(core_model_, kind_.Q_e, kind_.Q_x, kind_.R,
                    params_.max_preview);
}

ReferenceTrajectory Oracle::query(const OracleQuery& q) const {
  q.validate();
  const Plan plan = build_plan(q, params_);
  const int H = plan.H;
  const double dt = params_.dt;

  ReferenceTrajectory traj;
  traj.horizon_dt = dt;
  traj.mode_tag = q.mode.mode;
  traj.states.assign(H + 1, Vector());
  traj.states[0] = q.x_t;
  traj.phases.assign(H, Phase::kContact);
  traj.controls.assign(H, Vector::Zero(kSrbControlDim));

  const auto fd_y = [&](int k) {
    const int a = std::min(k, H - 1);
    return (plan.y_tgt[a + 1] - plan.y_tgt[a]) / dt;
  };

  for (const PhaseRange& r : plan.ranges) {
    const int a = r.begin;
    const int b = r.end;
    const int n = b - a;
    if (r.phase == Phase::kFlight) {
      for (int k = a; k < b; ++k) traj.phases[k] = Phase::kFlight;
      Vector x = traj.states[a];
      if (r.override_takeoff) {
        x(kVz) = r.takeoff_vz;
        if (r.takeoff_omega != 0.0) x(kOmega) = r.takeoff_omega;
        traj.states[a] = x;
      }
      auto seq = flight_rollout(full_model_, x, n);
      for (int i = 1; i <= n; ++i) traj.states[a + i] = seq[i];
      continue;
    }

    switch (kind_.id) {
      case OracleKindId::kLinearInterp: {
        Vector goal = Vector::Zero(kSrbStateDim);
        goal(kPx) = plan.p_x[b];
        goal(kPz) = plan.y_plain[b];
        goal(kTheta) = plan.theta[b];
        goal(kSrbCoreDim) = 1.0;
        auto seg = li_reference(traj.states[a], goal, n, dt);
        for (int i = 1; i <= n; ++i) traj.states[a + i] = seg.states[i];
        break;
      }
      case OracleKindId::kLqr: {
        std::vector<Vector> x_ref(n + 1);
        for (int i = 0; i <= n; ++i) {
          const int k = a + i;
          Vector ref(kSrbCoreDim);
          ref << plan.p_x[k], plan.y_tgt[k], plan.theta[k], plan.v[k], fd_y(k),
              0.0;
          x_ref[i] = ref;
        }
        std::vector<Vector> ctrls;
        auto seg =
            lqr_reference(core_model_, K_, core_of(traj.states[a]), x_ref,
                          &ctrls);
        for (int i = 1; i <= n; ++i) traj.states[a + i] = full_of(seg[i]);
        for (int i = 0; i < n; ++i) traj.controls[a + i] = ctrls[i];
        break;
      }
      case OracleKindId::kPreview: {
        const int want =
            kind_.preview_window > 0 ? kind_.preview_window : q.horizon;
        const int N_p =
            std::min(want, static_cast<int>(preview_.G_p.size()));
        PreviewGains g;
        g.G_i = preview_.G_i;
        g.G_x = preview_.G_x;
        g.G_p.assign(preview_.G_p.begin(), preview_.G_p.begin() + N_p);

        std::vector<Vector> nominal(n + 1);
        const double y0 = plan.y_tgt[a];
        for (int i = 0; i <= n; ++i) {
          const int k = a + i;
          Vector nom(kSrbCoreDim);
          nom << plan.p_x[k], y0, plan.theta[k], plan.v[k], 0.0, 0.0;
          nominal[i] = nom;
        }
        std::vector<double> y_slice(plan.y_ext.begin() + a,
                                    plan.y_ext.begin() + a + n + N_p);
        std::vector<Vector> ctrls;
        auto seg = preview_reference(core_model_, g, core_of(traj.states[a]),
                                     nominal, y_slice, &ctrls);
        for (int i = 1; i <= n; ++i) traj.states[a + i] = full_of(seg[i]);
        for (int i = 0; i < n; ++i) traj.controls[a + i] = ctrls[i];
        break;
      }
    }
  }

  traj.validate();
  return traj;
}

DeviationSummary run_deviation_suite(const lti::SrbParams& srb,
                                     const OracleParams& params) {
  params.validate();
  const double dt = params.dt;
  const auto full = lti::build_srb_lti(srb, 0.0, dt);
  const auto core = lti::strip_gravity_state(full);
  const auto lqr_kind = OracleKind::defaults(OracleKindId::kLqr);
  const Matrix K = lti::lqr_closed_loop(core, lqr_kind.Q_x, lqr_kind.R).K;
  const auto prev_kind = OracleKind::defaults(OracleKindId::kPreview);
  const int N_p = 40;
  const auto gains =
      preview_gains(core, prev_kind.Q_e, prev_kind.Q_x, prev_kind.R, N_p);

  const int T = 60;
  const int ramp = 16;  // smoothed transition; raw cliffs are flown, not tracked
  const double z0 = params.nominal_height;
  const auto W = WeightDiag::single_axis(kSrbStateDim, kPz);

  DeviationSummary out;
  int count = 0;
  for (const int t_s : {15, 25, 35}) {
    for (const double dz : {-0.2, -0.1, 0.1, 0.2}) {
      std::vector<double> y_ref(T + 1 + N_p);
      for (int k = 0; k < static_cast<int>(y_ref.size()); ++k) {
        const double tau =
            std::clamp(static_cast<double>(k - t_s) / ramp, 0.0, 1.0);
        y_ref[k] = z0 + dz * (3.0 * tau * tau - 2.0 * tau * tau * tau);
      }

      ReferenceTrajectory target;
      target.horizon_dt = dt;
      target.states.resize(T + 1);
      target.phases.assign(T, Phase::kContact);
      for (int k = 0; k <= T; ++k) {
        Vector x = Vector::Zero(kSrbStateDim);
        x(kPz) = y_ref[k];
        x(kVz) = (y_ref[std::min(k + 1, T)] - y_ref[std::min(k, T - 1)]) / dt;
        x(kSrbCoreDim) = 1.0;
        target.states[k] = x;
      }

      Vector x0 = Vector::Zero(kSrbCoreDim);
      x0(kPz) = z0;

      Vector goal = Vector::Zero(kSrbStateDim);
      goal(kPz) = y_ref[T];
      goal(kSrbCoreDim) = 1.0;
      const auto li = li_reference(full_of(x0), goal, T, dt);

      std::vector<Vector> x_ref(T + 1);
      for (int k = 0; k <= T; ++k) {
        Vector ref(kSrbCoreDim);
        ref << 0.0, y_ref[k], 0.0, 0.0,
            (y_ref[std::min(k + 1, T)] - y_ref[k]) / dt, 0.0;
        x_ref[k] = ref;
      }
      const auto lqr_states = lqr_reference(core, K, x0, x_ref);

      std::vector<Vector> nominal(T + 1);
      for (int k = 0; k <= T; ++k) {
        Vector nom = Vector::Zero(kSrbCoreDim);
        nom(kPz) = z0;
        nominal[k] = nom;
      }
      const auto prev_states =
          preview_reference(core, gains, x0, nominal, y_ref);

      const auto lift = [&](const std::vector<Vector>& cs) {
        ReferenceTrajectory t;
        t.horizon_dt = dt;
        t.phases.assign(T, Phase::kContact);
        t.states.resize(cs.size());
        for (size_t i = 0; i < cs.size(); ++i) t.states[i] = full_of(cs[i]);
        return t;
      };

      out.mean_li += measure_deviation(li, target, W);
      out.mean_lqr += measure_deviation(lift(lqr_states), target, W);
      out.mean_prev += measure_deviation(lift(prev_states), target, W);
      ++count;
    }
  }
  out.mean_li /= count;
  out.mean_lqr /= count;
  out.mean_prev /= count;
  return out;
}

}  // namespace ogmp::oracle
