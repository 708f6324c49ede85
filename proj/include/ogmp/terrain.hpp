#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogmp/error.hpp"
#include "ogmp/rng.hpp"

namespace ogmp::terrain {

enum class SegmentKind { kFlat, kBlock, kGap };

/// One horizontal piece of a track. Blocks raise the ground by `height`,
/// gaps drop it by `depth`; flats sit at ground level 0.
struct Segment {
  SegmentKind kind = SegmentKind::kFlat;
  double start_x = 0.0;
  double width = 0.0;
  double height = 0.0;  // block rise (> 0 for blocks, else 0)
  double depth = 0.0;   // gap drop (> 0 for gaps, else 0)
};

struct Track {
  std::vector<Segment> segments;  // sorted, non-overlapping, covering [0, length]
  double length = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Mode { kPace, kJump, kLeap, kFlip, kSettle };

const char* mode_name(Mode mode);

/// A mode instance with its continuous parameters.
struct ModeSpec {
  Mode mode = Mode::kPace;
  // Parameter slots by mode:
  //   pace:   a = forward speed v (m/s)
  //   jump:   a = block width w (m), b = block height h (m)
  //   leap:   a = gap width w (m),   b = gap depth d (m)
  //   flip:   a = rotation r (rad),  b = apex height h (m)
  //   settle: unused
  double a = 0.0;
  double b = 0.0;

  static ModeSpec pace(double v) { return {Mode::kPace, v, 0.0}; }
  static ModeSpec jump(double w, double h) { return {Mode::kJump, w, h}; }
  static ModeSpec leap(double w, double d) { return {Mode::kLeap, w, d}; }
  static ModeSpec flip(double r, double h) { return {Mode::kFlip, r, h}; }
  static ModeSpec settle() { return {Mode::kSettle, 0.0, 0.0}; }
};

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double sample(RngStream& rng) const { return rng.uniform(lo, hi); }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Per-mode parameter boxes. `training` draws come from these intervals; the
/// test box dilates each interval about its midpoint by `test_dilation` (lower
/// ends clamped to stay physical), so training box ⊆ test box by construction.
struct ModeParamRanges {
  Interval pace_v{0.3, 0.8};
  Interval jump_w{0.2, 0.5};
  Interval jump_h{0.03, 0.11};
  Interval leap_w{0.2, 0.462};
  Interval leap_d{0.3, 0.5};
  Interval flip_r{3.14159265358979323846, 6.28318530717958647692};
  Interval flip_h{1.0, 2.0};
  double test_dilation = 1.5;

  void validate() const;
  ModeParamRanges test_box() const;
};

/// Builds a random track: flats of >= 1 m separating blocks/gaps whose
/// dimensions are drawn uniformly from the training box. Deterministic in
/// (seed, ranges, length, density).
Track generate_track(std::uint64_t seed, const ModeParamRanges& ranges,
                     double length, double obstacle_density);

struct TerrainHeight {
  double height = 0.0;
  bool over_gap = false;
};

/// Ground height at x: block top inside blocks, -depth inside gaps, 0 on flats.
TerrainHeight height_at(const Track& track, double x);

/// Mode selected by the nearest obstacle intersecting [base_x, base_x +
/// lookahead]: block -> jump, gap -> leap, none -> pace at `pace_v`.
ModeSpec active_mode(const Track& track, double base_x, double lookahead,
                     double pace_v);

/// Uniform draw of a mode's parameters from the training box.
ModeSpec sample_mode_params(RngStream& rng, const ModeParamRanges& ranges,
                            Mode mode);

/// Heights at base_x + k*span/n_points (k = 1..n_points) relative to the
/// ground height at base_x; queries past the end clamp to the end height.
std::vector<double> terrain_scan(const Track& track, double base_x,
                                 int n_points, double span);

}  // namespace ogmp::terrain
