#include <doctest.h>

#include <cmath>

#include "ogmp/oracle.hpp"
#include "ogmp/rng.hpp"

using namespace ogmp;
using namespace ogmp::oracle;
using lti::kOmega;
using lti::kPx;
using lti::kPz;
using lti::kSrbCoreDim;
using lti::kSrbStateDim;
using lti::kTheta;
using lti::kVx;
using lti::kVz;
using lti::Vector;

namespace {

Vector full_state(double px, double pz, double th, double vx, double vz,
                  double om) {
  Vector x(kSrbStateDim);
  x << px, pz, th, vx, vz, om, 1.0;
  return x;
}

TerrainWindow flat_window(double base_x, double lookahead) {
  terrain::Track t;
  t.length = 50.0;
  t.segments = {{terrain::SegmentKind::kFlat, 0.0, 50.0, 0.0, 0.0}};
  return make_terrain_window(t, base_x, lookahead);
}

// flat [0, 0.15) | gap [0.15, 0.30) | flat; with v = 0.6 and dt = 0.025 the
// heading reference p_x[k] = 0.015 k is over the gap exactly for k in 10..19.
TerrainWindow gap_window() {
  terrain::Track t;
  t.length = 10.0;
  t.segments = {
      {terrain::SegmentKind::kFlat, 0.0, 0.15, 0.0, 0.0},
      {terrain::SegmentKind::kGap, 0.15, 0.15, 0.0, 0.4},
      {terrain::SegmentKind::kFlat, 0.30, 9.70, 0.0, 0.0},
  };
  t.validate();
  return make_terrain_window(t, 0.0, 5.0, 0.005);
}

// flat [0, 2) | block [2, 2.4) h=0.2 | flat
terrain::Track block_track() {
  terrain::Track t;
  t.length = 10.0;
  t.segments = {
      {terrain::SegmentKind::kFlat, 0.0, 2.0, 0.0, 0.0},
      {terrain::SegmentKind::kBlock, 2.0, 0.4, 0.2, 0.0},
      {terrain::SegmentKind::kFlat, 2.4, 7.6, 0.0, 0.0},
  };
  t.validate();
  return t;
}

}  // namespace

TEST_CASE("li_reference interpolates positions and differences velocities") {
  auto x0 = full_state(0, 0, 0, 0, 0, 0);
  auto goal = full_state(1.0, 0, 0, 0, 0, 0);
  auto traj = li_reference(x0, goal, 10, 0.1);
  REQUIRE(traj.states.size() == 11);
  for (int k = 0; k <= 10; ++k) {
    CHECK(traj.states[k](kPx) == doctest::Approx(0.1 * k));
    CHECK(traj.states[k](kVx) == doctest::Approx(1.0));  // 0.1 m per 0.1 s
  }
}

TEST_CASE("li_reference with goal at the query state is constant") {
  auto x0 = full_state(0.3, 0.55, 0.1, 0, 0, 0);
  auto traj = li_reference(x0, x0, 5, 0.025);
  for (const auto& x : traj.states) {
    CHECK(x(kPx) == doctest::Approx(0.3));
    CHECK(x(kPz) == doctest::Approx(0.55));
    CHECK(x(kTheta) == doctest::Approx(0.1));
    CHECK(x(kVx) == doctest::Approx(0.0));
  }
}

TEST_CASE("li_reference ramps the rotation for a flip goal") {
  const double two_pi = 2.0 * 3.14159265358979323846;
  auto x0 = full_state(0, 0.55, 0, 0, 0, 0);
  auto goal = full_state(0, 0.55, two_pi, 0, 0, 0);
  const int H = 20;
  auto traj = li_reference(x0, goal, H, 0.025);
  for (int k = 0; k <= H; ++k) {
    CHECK(traj.states[k](kTheta) == doctest::Approx(two_pi * k / H));
  }
}

TEST_CASE("flight_rollout single Euler ballistic step") {
  lti::SrbParams params;
  auto model = lti::build_srb_lti(params, 0.0, 0.1);
  auto x0 = full_state(0, 1, 0, 1, 0, 2);
  auto seq = flight_rollout(model, x0, 1);
  REQUIRE(seq.size() == 2);
  CHECK(seq[1](kPx) == doctest::Approx(0.1));
  CHECK(seq[1](kPz) == doctest::Approx(1.0));
  CHECK(seq[1](kVz) == doctest::Approx(-0.981));
  CHECK(seq[1](kTheta) == doctest::Approx(0.2));
  CHECK(seq[1](kVx) == doctest::Approx(1.0));
  CHECK(seq[1](kOmega) == doctest::Approx(2.0));
}

TEST_CASE("flight_rollout zero steps returns the query state") {
  lti::SrbParams params;
  auto model = lti::build_srb_lti(params, 0.0, 0.1);
  auto x0 = full_state(0, 1, 0, 0, 0, 0);
  auto seq = flight_rollout(model, x0, 0);
  REQUIRE(seq.size() == 1);
  CHECK(seq[0].isApprox(x0));
}

TEST_CASE("flight_rollout vertical speed crosses zero on schedule") {
  lti::SrbParams params;
  auto model = lti::build_srb_lti(params, 0.0, 0.1);
  auto x0 = full_state(0, 1, 0, 0, 0.981, 0);
  auto seq = flight_rollout(model, x0, 2);
  CHECK(seq[1](kVz) == doctest::Approx(0.0));
  CHECK(seq[2](kVz) == doctest::Approx(-0.981));
}

TEST_CASE("phase_split: flat pacing is one contact range") {
  OracleParams params;
  OracleQuery q;
  q.x_t = full_state(1.0, 0.55, 0, 0.5, 0, 0);
  q.mode = terrain::ModeSpec::pace(0.5);
  q.window = flat_window(1.0, 3.0);
  q.horizon = 30;
  auto ranges = phase_split(q, params);
  REQUIRE(ranges.size() == 1);
  CHECK(ranges[0].phase == Phase::kContact);
  CHECK(ranges[0].begin == 0);
  CHECK(ranges[0].end == 30);
}

TEST_CASE("phase_split: gap spanning steps 10..20") {
  OracleParams params;
  OracleQuery q;
  q.x_t = full_state(0.0, 0.55, 0, 0.6, 0, 0);
  q.mode = terrain::ModeSpec::pace(0.6);
  q.window = gap_window();
  q.horizon = 30;
  auto ranges = phase_split(q, params);
  REQUIRE(ranges.size() == 3);
  CHECK(ranges[0].phase == Phase::kContact);
  CHECK(ranges[0].begin == 0);
  CHECK(ranges[0].end == 10);
  CHECK(ranges[1].phase == Phase::kFlight);
  CHECK(ranges[1].begin == 10);
  CHECK(ranges[1].end == 20);
  CHECK(ranges[1].override_takeoff);
  CHECK(ranges[2].phase == Phase::kContact);
  CHECK(ranges[2].begin == 20);
  CHECK(ranges[2].end == 30);
}

TEST_CASE("phase_split: jump arc clears the block with the margin apex") {
  // Rise lands at k = 40 (edge x = 2.0 reached from 1.4 at 0.6 m/s);
  // t_fl = sqrt(2(h+m)/g) + sqrt(2m/g) = 0.327 s -> 13 steps -> [27, 40).
  OracleParams params;
  OracleQuery q;
  q.x_t = full_state(1.4, 0.55, 0, 0.6, 0, 0);
  q.mode = terrain::ModeSpec::jump(0.4, 0.2);
  q.command_v = 0.6;
  q.window = make_terrain_window(block_track(), 1.4, 4.0);
  q.horizon = 40;
  auto ranges = phase_split(q, params);
  REQUIRE(ranges.size() == 2);
  CHECK(ranges[1].phase == Phase::kFlight);
  CHECK(ranges[1].begin == 27);
  CHECK(ranges[1].end == 40);

  // Cross-check by simulating the arc: apex above takeoff ~ h + margin.
  lti::SrbParams srb;
  auto model = lti::build_srb_lti(srb, 0.0, params.dt);
  auto x_takeoff = full_state(0, 0.55, 0, 0.6, ranges[1].takeoff_vz, 0);
  auto arc = flight_rollout(model, x_takeoff, 13);
  double apex = 0.0;
  for (const auto& x : arc) apex = std::max(apex, x(kPz));
  CHECK(apex - 0.55 == doctest::Approx(0.25).epsilon(0.15));
  // The arc lands near the block-top height (rise ~ 0.2).
  CHECK(arc.back()(kPz) - 0.55 == doctest::Approx(0.2).epsilon(0.2));
}

TEST_CASE("lqr_reference at equilibrium keeps zero control") {
  lti::SrbParams srb;
  OracleParams params;
  auto kind = OracleKind::defaults(OracleKindId::kLqr);
  Oracle oracle(kind, srb, params);
  Vector x0 = Vector::Zero(kSrbCoreDim);
  x0(kPz) = 0.55;
  std::vector<Vector> x_ref(31, x0);
  std::vector<Vector> ctrls;
  auto states = lqr_reference(oracle.core_model(), oracle.lqr_gain(), x0,
                              x_ref, &ctrls);
  REQUIRE(states.size() == 31);
  for (const auto& x : states) CHECK((x - x0).norm() == doctest::Approx(0.0));
  for (const auto& u : ctrls) CHECK(u.norm() == doctest::Approx(0.0));
}

TEST_CASE("lqr_reference contracts toward a ramp reference") {
  lti::SrbParams srb;
  OracleParams params;
  auto kind = OracleKind::defaults(OracleKindId::kLqr);
  Oracle oracle(kind, srb, params);
  const int T = 40;
  std::vector<Vector> x_ref(T + 1);
  for (int k = 0; k <= T; ++k) {
    Vector r = Vector::Zero(kSrbCoreDim);
    r(kPz) = 0.55 + 0.002 * k;
    r(kVz) = 0.002 / params.dt;
    x_ref[k] = r;
  }
  Vector x0 = Vector::Zero(kSrbCoreDim);
  x0(kPz) = 0.40;  // start 0.15 below the reference
  auto states = lqr_reference(oracle.core_model(), oracle.lqr_gain(), x0,
                              x_ref);
  const double err0 = (states[0] - x_ref[0]).norm();
  const double errT = (states[T] - x_ref[T]).norm();
  CHECK(errT < 0.1 * err0);
}

TEST_CASE("preview_gains shapes and the integral-gain identity") {
  lti::SrbParams srb;
  auto model = lti::build_srb_lti(srb, 0.0, 0.025);
  auto core = lti::strip_gravity_state(model);
  auto kind = OracleKind::defaults(OracleKindId::kPreview);

  auto g1 = preview_gains(core, kind.Q_e, kind.Q_x, kind.R, 1);
  CHECK(g1.G_p.size() == 1);

  auto g = preview_gains(core, kind.Q_e, kind.Q_x, kind.R, 40);
  REQUIRE(g.G_p.size() == 40);
  // First preview gain cancels the incoming reference in the integral state.
  CHECK((g.G_p[0] + g.G_i).norm() < 1e-9 * (1.0 + g.G_i.norm()));
  // The dominant closed-loop pole pair is complex, so |G_p[j]| oscillates with
  // a period of roughly nine taps inside a geometrically decaying envelope.
  // Assert the envelope rather than pointwise decay: every tap must sit below
  // half the running maximum of the preceding period.
  std::vector<double> norms(40);
  int peak = 0;
  for (int j = 0; j < 40; ++j) {
    norms[j] = g.G_p[j].norm();
    if (norms[j] > norms[peak]) peak = j;
  }
  CHECK(peak < 10);
  constexpr int kPeriod = 9;
  for (int j = 0; j + kPeriod < 40; ++j) {
    double window_max = 0.0;
    for (int i = j; i < j + kPeriod; ++i) {
      window_max = std::max(window_max, norms[i]);
    }
    CHECK(norms[j + kPeriod] <= 0.5 * window_max);
  }
  CHECK(norms[39] < 0.01 * norms[peak]);
}

TEST_CASE("preview_gains with zero integral weight has zero integral gain") {
  lti::SrbParams srb;
  auto model = lti::build_srb_lti(srb, 0.0, 0.025);
  auto core = lti::strip_gravity_state(model);
  auto kind = OracleKind::defaults(OracleKindId::kPreview);
  auto g = preview_gains(core, 0.0, kind.Q_x, kind.R, 5);
  CHECK(g.G_i.norm() < 1e-9);
}

TEST_CASE("preview_reference holds a steady hover exactly") {
  lti::SrbParams srb;
  OracleParams params;
  auto kind = OracleKind::defaults(OracleKindId::kPreview);
  Oracle oracle(kind, srb, params);
  auto gains = preview_gains(oracle.core_model(), kind.Q_e, kind.Q_x, kind.R,
                             20);
  const int T = 50;
  Vector x0 = Vector::Zero(kSrbCoreDim);
  x0(kPz) = 0.55;
  std::vector<Vector> nominal(T + 1, x0);
  std::vector<double> y(T + 20, 0.55);
  std::vector<Vector> ctrls;
  auto states =
      preview_reference(oracle.core_model(), gains, x0, nominal, y, &ctrls);
  for (const auto& x : states) CHECK((x - x0).norm() < 1e-12);
  for (const auto& u : ctrls) CHECK(u.norm() < 1e-12);
}

TEST_CASE("preview_reference integral action kills a constant offset") {
  lti::SrbParams srb;
  OracleParams params;
  auto kind = OracleKind::defaults(OracleKindId::kPreview);
  Oracle oracle(kind, srb, params);
  auto gains = preview_gains(oracle.core_model(), kind.Q_e, kind.Q_x, kind.R,
                             20);
  const int T = 200;
  Vector nom = Vector::Zero(kSrbCoreDim);
  nom(kPz) = 0.55;
  Vector x0 = nom;
  x0(kPz) = 0.65;  // 10 cm above target
  std::vector<Vector> nominal(T + 1, nom);
  std::vector<double> y(T + 20, 0.55);
  auto states = preview_reference(oracle.core_model(), gains, x0, nominal, y);
  CHECK(std::abs(states.back()(kPz) - 0.55) < 1e-3);
}

TEST_CASE("preview control acts before a previewed step and beats LQR") {
  lti::SrbParams srb;
  OracleParams params;
  auto kind = OracleKind::defaults(OracleKindId::kPreview);
  Oracle oracle(kind, srb, params);
  auto gains = preview_gains(oracle.core_model(), kind.Q_e, kind.Q_x, kind.R,
                             40);
  const int T = 60;
  const int step_at = 30;
  const double z0 = 0.55, dz = 0.1;

  std::vector<double> y(T + 40, z0);
  for (int k = step_at; k < static_cast<int>(y.size()); ++k) y[k] = z0 + dz;

  Vector nom = Vector::Zero(kSrbCoreDim);
  nom(kPz) = z0;
  Vector x0 = nom;
  std::vector<Vector> nominal(T + 1, nom);
  std::vector<Vector> prev_ctrls;
  auto prev_states = preview_reference(oracle.core_model(), gains, x0, nominal,
                                       y, &prev_ctrls);

  int first_active = -1;
  for (int k = 0; k < T; ++k) {
    if (prev_ctrls[k].norm() > 1e-8) {
      first_active = k;
      break;
    }
  }
  REQUIRE(first_active >= 0);
  CHECK(first_active < step_at);  // anticipation

  std::vector<Vector> x_ref(T + 1);
  for (int k = 0; k <= T; ++k) {
    Vector r = Vector::Zero(kSrbCoreDim);
    r(kPz) = y[k];
    x_ref[k] = r;
  }
  auto lqr_kind = OracleKind::defaults(OracleKindId::kLqr);
  const auto K =
      lti::lqr_closed_loop(oracle.core_model(), lqr_kind.Q_x, lqr_kind.R).K;
  auto lqr_states = lqr_reference(oracle.core_model(), K, x0, x_ref);

  auto track_cost = [&](const std::vector<Vector>& states) {
    double c = 0.0;
    for (int k = 0; k <= T; ++k) {
      const double e = states[k](kPz) - y[k];
      c += e * e;
    }
    return c;
  };
  CHECK(track_cost(prev_states) <= track_cost(lqr_states));
}

TEST_CASE("measure_deviation basics") {
  ReferenceTrajectory a, b;
  a.horizon_dt = b.horizon_dt = 0.025;
  a.phases.assign(3, Phase::kContact);
  b.phases.assign(3, Phase::kContact);
  for (int k = 0; k < 4; ++k) {
    a.states.push_back(full_state(0.1 * k, 0.55, 0, 0, 0, 0));
    b.states.push_back(full_state(0.1 * k, 0.55, 0, 0, 0, 0));
  }
  WeightDiag W;
  W.w = Vector::Ones(kSrbStateDim);
  CHECK(measure_deviation(a, b, W) == 0.0);

  WeightDiag zero;
  zero.w = Vector::Zero(kSrbStateDim);
  b.states[2](kPz) += 0.7;
  CHECK(measure_deviation(a, b, zero) == 0.0);

  auto Wz = WeightDiag::single_axis(kSrbStateDim, kPz);
  b.states[2] = a.states[2];
  b.states[1](kPz) += 0.3;
  CHECK(measure_deviation(a, b, Wz) == doctest::Approx(0.3));

  ReferenceTrajectory shorter = a;
  shorter.states.pop_back();
  shorter.phases.pop_back();
  CHECK_THROWS_AS(measure_deviation(a, shorter, Wz), Error);
}

TEST_CASE("query: interpolating oracle at rest on flat ground is constant") {
  lti::SrbParams srb;
  OracleParams params;
  Oracle oracle(OracleKind::defaults(OracleKindId::kLinearInterp), srb, params);
  OracleQuery q;
  q.x_t = full_state(2.0, 0.55, 0, 0, 0, 0);
  q.mode = terrain::ModeSpec::pace(0.0);
  q.window = flat_window(2.0, 3.0);
  q.horizon = 20;
  auto traj = oracle.query(q);
  REQUIRE(traj.states.size() == 21);
  for (const auto& x : traj.states) {
    CHECK(x(kPx) == doctest::Approx(2.0));
    CHECK(x(kPz) == doctest::Approx(0.55));
    CHECK(x(kTheta) == doctest::Approx(0.0));
  }
}

TEST_CASE("query: horizon one returns two states anchored at the query") {
  lti::SrbParams srb;
  OracleParams params;
  OracleQuery q;
  q.x_t = full_state(1.0, 0.6, 0.05, 0.4, -0.1, 0.2);
  q.mode = terrain::ModeSpec::pace(0.5);
  q.window = flat_window(1.0, 2.0);
  q.horizon = 1;
  for (auto id : {OracleKindId::kLinearInterp, OracleKindId::kLqr,
                  OracleKindId::kPreview}) {
    Oracle oracle(OracleKind::defaults(id), srb, params);
    auto traj = oracle.query(q);
    REQUIRE(traj.states.size() == 2);
    CHECK(traj.states[0](kPx) == q.x_t(kPx));
    CHECK(traj.states[0](kPz) == q.x_t(kPz));
    CHECK(traj.states[0](kTheta) == q.x_t(kTheta));
  }
}

TEST_CASE("query: preview reference rises onto the block with a crouch dip") {
  lti::SrbParams srb;
  OracleParams params;
  Oracle oracle(OracleKind::defaults(OracleKindId::kPreview), srb, params);
  OracleQuery q;
  q.x_t = full_state(1.4, 0.55, 0, 0.6, 0, 0);
  q.mode = terrain::ModeSpec::jump(0.4, 0.2);
  q.command_v = 0.6;
  q.window = make_terrain_window(block_track(), 1.4, 4.0);
  q.horizon = 40;
  auto traj = oracle.query(q);

  double apex = 0.0, pre_flight_min = 1.0;
  for (int k = 0; k <= 40; ++k) apex = std::max(apex, traj.states[k](kPz));
  for (int k = 5; k < 27; ++k) {
    pre_flight_min = std::min(pre_flight_min, traj.states[k](kPz));
  }
  CHECK(apex > 0.70);             // clears the 0.2 m block from 0.55
  CHECK(pre_flight_min < 0.52);   // anticipatory crouch before takeoff
  CHECK(traj.states[40](kPz) > 0.65);  // ends up on the block
}

TEST_CASE("query: flight ranges conserve ballistic quantities") {
  lti::SrbParams srb;
  OracleParams params;
  OracleQuery q;
  q.x_t = full_state(0.0, 0.55, 0, 0.6, 0, 0);
  q.mode = terrain::ModeSpec::pace(0.6);
  q.window = gap_window();
  q.horizon = 30;
  const double g_dt = srb.gravity * params.dt;
  for (auto id : {OracleKindId::kLinearInterp, OracleKindId::kLqr,
                  OracleKindId::kPreview}) {
    Oracle oracle(OracleKind::defaults(id), srb, params);
    auto traj = oracle.query(q);
    REQUIRE(traj.phases.size() == 30);
    int flight_steps = 0;
    for (int k = 0; k < 30; ++k) {
      if (traj.phases[k] != Phase::kFlight) continue;
      ++flight_steps;
      CHECK(traj.states[k + 1](kVx) == traj.states[k](kVx));
      CHECK(traj.states[k + 1](kOmega) == traj.states[k](kOmega));
      CHECK(traj.states[k + 1](kVz) ==
            doctest::Approx(traj.states[k](kVz) - g_dt).epsilon(1e-12));
    }
    CHECK(flight_steps == 10);
  }
}

TEST_CASE("query: deterministic and total over randomized scenarios") {
  lti::SrbParams srb;
  OracleParams params;
  terrain::ModeParamRanges ranges;
  RngStream rng(555);

  std::vector<Oracle> oracles;
  oracles.emplace_back(OracleKind::defaults(OracleKindId::kLinearInterp), srb,
                       params);
  oracles.emplace_back(OracleKind::defaults(OracleKindId::kLqr), srb, params);
  oracles.emplace_back(OracleKind::defaults(OracleKindId::kPreview), srb,
                       params);

  const int horizons[3] = {7, 15, 30};
  const terrain::Mode modes[5] = {terrain::Mode::kPace, terrain::Mode::kJump,
                                  terrain::Mode::kLeap, terrain::Mode::kFlip,
                                  terrain::Mode::kSettle};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto track =
        terrain::generate_track(1000 + trial % 17, ranges, 12.0, 0.25);
    OracleQuery q;
    const double px = rng.uniform(0.0, 9.0);
    q.x_t = full_state(px, rng.uniform(0.3, 1.2), rng.uniform(-0.5, 0.5),
                       rng.uniform(-0.5, 1.5), rng.uniform(-2.0, 2.0),
                       rng.uniform(-3.0, 3.0));
    q.mode = terrain::sample_mode_params(rng, ranges, modes[trial % 5]);
    q.window = make_terrain_window(track, px, 4.0);
    q.horizon = horizons[trial % 3];
    q.command_v = 0.6;
    for (const auto& oracle : oracles) {
      auto traj = oracle.query(q);
      REQUIRE(static_cast<int>(traj.states.size()) == q.horizon + 1);
      CHECK(traj.states[0](kPx) == q.x_t(kPx));
      CHECK(traj.states[0](kPz) == q.x_t(kPz));
      CHECK(traj.states[0](kTheta) == q.x_t(kTheta));
      for (const auto& x : traj.states) REQUIRE(x.allFinite());
    }
    if (trial == 0) {
      auto t1 = oracles[2].query(q);
      auto t2 = oracles[2].query(q);
      for (size_t k = 0; k < t1.states.size(); ++k) {
        CHECK(t1.states[k] == t2.states[k]);
      }
    }
  }
}

TEST_CASE("deviation ordering: interpolation worst, preview best") {
  lti::SrbParams srb;
  OracleParams params;
  auto dev = run_deviation_suite(srb, params);
  MESSAGE("li=", dev.mean_li, " lqr=", dev.mean_lqr, " prev=", dev.mean_prev);
  CHECK(dev.mean_li >= 1.05 * dev.mean_lqr);
  CHECK(dev.mean_lqr >= 1.05 * dev.mean_prev);
}
