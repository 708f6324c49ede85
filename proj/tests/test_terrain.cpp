#include <doctest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "ogmp/terrain.hpp"

using namespace ogmp;
using namespace ogmp::terrain;

namespace {

// flat [0,1) | block [1,1.3) h=0.2 | flat [1.3,4) | gap [4,4.4) d=0.5 | flat
Track handmade_track() {
  Track t;
  t.length = 10.0;
  t.seed = 0;
  t.segments = {
      {SegmentKind::kFlat, 0.0, 1.0, 0.0, 0.0},
      {SegmentKind::kBlock, 1.0, 0.3, 0.2, 0.0},
      {SegmentKind::kFlat, 1.3, 2.7, 0.0, 0.0},
      {SegmentKind::kGap, 4.0, 0.4, 0.0, 0.5},
      {SegmentKind::kFlat, 4.4, 5.6, 0.0, 0.0},
  };
  t.validate();
  return t;
}

}  // namespace

TEST_CASE("generate_track density zero is one flat") {
  ModeParamRanges ranges;
  auto track = generate_track(7, ranges, 10.0, 0.0);
  REQUIRE(track.segments.size() == 1);
  CHECK(track.segments[0].kind == SegmentKind::kFlat);
  CHECK(track.segments[0].width == doctest::Approx(10.0));
}

TEST_CASE("generate_track is deterministic byte-for-byte") {
  ModeParamRanges ranges;
  auto a = generate_track(123, ranges, 10.0, 0.3);
  auto b = generate_track(123, ranges, 10.0, 0.3);
  REQUIRE(a.segments.size() == b.segments.size());
  for (size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].kind == b.segments[i].kind);
    CHECK(a.segments[i].start_x == b.segments[i].start_x);
    CHECK(a.segments[i].width == b.segments[i].width);
    CHECK(a.segments[i].height == b.segments[i].height);
    CHECK(a.segments[i].depth == b.segments[i].depth);
  }
  auto c = generate_track(124, ranges, 10.0, 0.3);
  bool identical = c.segments.size() == a.segments.size();
  if (identical) {
    for (size_t i = 0; i < a.segments.size(); ++i) {
      identical = identical && a.segments[i].start_x == c.segments[i].start_x &&
                  a.segments[i].width == c.segments[i].width;
    }
  }
  CHECK_FALSE(identical);
}

TEST_CASE("generate_track obstacle count and box membership") {
  ModeParamRanges ranges;
  auto track = generate_track(42, ranges, 10.0, 0.3);
  int n_obstacles = 0;
  double prev_obstacle_end = -10.0;
  for (const auto& seg : track.segments) {
    if (seg.kind == SegmentKind::kFlat) continue;
    ++n_obstacles;
    CHECK(seg.start_x - prev_obstacle_end >= 1.0 - 1e-9);  // >= 1 m flats
    if (seg.kind == SegmentKind::kBlock) {
      CHECK(ranges.jump_w.contains(seg.width));
      CHECK(ranges.jump_h.contains(seg.height));
    } else {
      CHECK(ranges.leap_w.contains(seg.width));
      CHECK(ranges.leap_d.contains(seg.depth));
    }
    prev_obstacle_end = seg.start_x + seg.width;
  }
  CHECK(n_obstacles == 3);
}

TEST_CASE("generate_track rejects infeasible density") {
  ModeParamRanges ranges;
  try {
    generate_track(1, ranges, 10.0, 2.0);  // 20 obstacles need > 21 m of flats
    FAIL("expected InfeasibleLayout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleLayout);
  }
}

TEST_CASE("height_at segment kinds") {
  auto track = handmade_track();
  auto flat = height_at(track, 0.5);
  CHECK(flat.height == 0.0);
  CHECK_FALSE(flat.over_gap);

  auto block = height_at(track, 1.15);
  CHECK(block.height == doctest::Approx(0.2));
  CHECK_FALSE(block.over_gap);

  auto gap = height_at(track, 4.2);
  CHECK(gap.height == doctest::Approx(-0.5));
  CHECK(gap.over_gap);

  CHECK(height_at(track, 10.0).height == 0.0);  // endpoint allowed
  CHECK_THROWS_AS(height_at(track, -0.01), Error);
  CHECK_THROWS_AS(height_at(track, 10.01), Error);
}

TEST_CASE("active_mode selection rules") {
  ModeParamRanges ranges;
  auto flat_track = generate_track(7, ranges, 10.0, 0.0);
  auto m = active_mode(flat_track, 2.0, 1.0, 0.6);
  CHECK(m.mode == Mode::kPace);
  CHECK(m.a == doctest::Approx(0.6));

  auto track = handmade_track();
  // Block starts at 1.0, base at 0.5, lookahead 1.0 -> jump with block dims.
  auto j = active_mode(track, 0.5, 1.0, 0.6);
  CHECK(j.mode == Mode::kJump);
  CHECK(j.a == doctest::Approx(0.3));
  CHECK(j.b == doctest::Approx(0.2));

  // Past the block, the gap at 4.0 comes into view -> leap.
  auto l = active_mode(track, 3.6, 1.0, 0.6);
  CHECK(l.mode == Mode::kLeap);
  CHECK(l.a == doctest::Approx(0.4));
  CHECK(l.b == doctest::Approx(0.5));

  // Nearest-obstacle tie-break: block at 0.5, gap at 0.8 ahead of base 0.
  Track t2;
  t2.length = 5.0;
  t2.seed = 0;
  t2.segments = {
      {SegmentKind::kFlat, 0.0, 0.5, 0.0, 0.0},
      {SegmentKind::kBlock, 0.5, 0.2, 0.1, 0.0},
      {SegmentKind::kFlat, 0.7, 0.1, 0.0, 0.0},
      {SegmentKind::kGap, 0.8, 0.3, 0.0, 0.4},
      {SegmentKind::kFlat, 1.1, 3.9, 0.0, 0.0},
  };
  auto near = active_mode(t2, 0.0, 2.0, 0.6);
  CHECK(near.mode == Mode::kJump);
}

TEST_CASE("sample_mode_params degenerate interval and determinism") {
  ModeParamRanges ranges;
  ranges.pace_v = {0.5, 0.5};
  RngStream rng(3);
  for (int i = 0; i < 10; ++i) {
    CHECK(sample_mode_params(rng, ranges, Mode::kPace).a == 0.5);
  }
  RngStream r1(11), r2(11);
  auto s1 = sample_mode_params(r1, ModeParamRanges{}, Mode::kJump);
  auto s2 = sample_mode_params(r2, ModeParamRanges{}, Mode::kJump);
  CHECK(s1.a == s2.a);
  CHECK(s1.b == s2.b);
}

TEST_CASE("sample_mode_params uniform mean") {
  // Mean of N uniform draws from [0.3, 0.8]: mu = 0.55,
  // sigma_mean = (0.5 / sqrt(12)) / sqrt(10000) = 1.4434e-3.
  ModeParamRanges ranges;
  RngStream rng(2024);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    sum += sample_mode_params(rng, ranges, Mode::kPace).a;
  }
  const double mean = sum / n;
  const double three_sigma = 3.0 * (0.5 / std::sqrt(12.0)) / std::sqrt(n);
  CHECK(std::abs(mean - 0.55) < three_sigma);
}

TEST_CASE("terrain_scan flat track and spacing") {
  ModeParamRanges ranges;
  auto flat_track = generate_track(7, ranges, 10.0, 0.0);
  auto scan = terrain_scan(flat_track, 2.0, 10, 1.5);
  REQUIRE(scan.size() == 10);
  for (double h : scan) CHECK(h == 0.0);
}

TEST_CASE("terrain_scan block edge lands at the computed index") {
  // Block spans [2.0, 2.3). Scan from base 1.0 with 10 points over 1.5 m
  // samples x = 1.15, 1.30, ..., 2.50; x >= 2.0 first at k = 7 (x = 2.05),
  // so 0-based indices 6 and 7 (x = 2.05, 2.20) read the block top.
  Track t;
  t.length = 10.0;
  t.seed = 0;
  t.segments = {
      {SegmentKind::kFlat, 0.0, 2.0, 0.0, 0.0},
      {SegmentKind::kBlock, 2.0, 0.3, 0.2, 0.0},
      {SegmentKind::kFlat, 2.3, 7.7, 0.0, 0.0},
  };
  t.validate();
  auto scan = terrain_scan(t, 1.0, 10, 1.5);
  REQUIRE(scan.size() == 10);
  for (int i = 0; i < 10; ++i) {
    const double expected = (i == 6 || i == 7) ? 0.2 : 0.0;
    CHECK(scan[i] == doctest::Approx(expected));
  }
}

TEST_CASE("terrain_scan clamps past the track end") {
  auto track = handmade_track();
  auto scan = terrain_scan(track, 9.5, 10, 1.5);  // reaches x = 11 -> clamped
  REQUIRE(scan.size() == 10);
  for (double h : scan) CHECK(h == 0.0);
}

TEST_CASE("scan over a gap reads negative depth") {
  auto track = handmade_track();  // gap [4.0, 4.4) d = 0.5
  auto scan = terrain_scan(track, 3.9, 4, 0.4);  // x = 4.0, 4.1, 4.2, 4.3
  for (double h : scan) CHECK(h == doctest::Approx(-0.5));
}

TEST_CASE("every obstacle maps to exactly one mode as the base sweeps") {
  ModeParamRanges ranges;
  auto track = generate_track(42, ranges, 10.0, 0.3);
  int n_obstacles = 0;
  for (const auto& seg : track.segments) {
    if (seg.kind != SegmentKind::kFlat) ++n_obstacles;
  }
  std::set<std::tuple<int, double, double>> seen;
  for (double base = 0.0; base <= track.length; base += 0.005) {
    auto spec = active_mode(track, base, 0.5, 0.6);
    if (spec.mode != Mode::kPace) {
      seen.insert({static_cast<int>(spec.mode), spec.a, spec.b});
    }
  }
  CHECK(static_cast<int>(seen.size()) == n_obstacles);
}

TEST_CASE("test box contains the training box") {
  ModeParamRanges ranges;
  auto test = ranges.test_box();
  auto contains = [](const Interval& outer, const Interval& inner) {
    return outer.lo <= inner.lo && outer.hi >= inner.hi;
  };
  CHECK(contains(test.pace_v, ranges.pace_v));
  CHECK(contains(test.jump_w, ranges.jump_w));
  CHECK(contains(test.jump_h, ranges.jump_h));
  CHECK(contains(test.leap_w, ranges.leap_w));
  CHECK(contains(test.leap_d, ranges.leap_d));
  CHECK(contains(test.flip_r, ranges.flip_r));
  CHECK(contains(test.flip_h, ranges.flip_h));
}
