#include "ogmp/terrain.hpp"

#include <algorithm>
#include <cmath>

namespace ogmp::terrain {

namespace {

constexpr double kMinSeparation = 1.0;  // flat run required around obstacles

void validate_interval(const Interval& iv, const char* name) {
  require(std::isfinite(iv.lo) && std::isfinite(iv.hi),
          ErrorCode::InvalidArgument,
          std::string(name) + " interval must be finite");
  require(iv.lo <= iv.hi, ErrorCode::InvalidArgument,
          std::string(name) + " interval must have lo <= hi");
}

Interval dilate(const Interval& iv, double factor, double min_lo) {
  const double half = 0.5 * (iv.hi - iv.lo) * factor;
  return {std::max(min_lo, iv.mid() - half), iv.mid() + half};
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kPace: return "pace";
    case Mode::kJump: return "jump";
    case Mode::kLeap: return "leap";
    case Mode::kFlip: return "flip";
    case Mode::kSettle: return "settle";
  }
  return "unknown";
}

void Track::validate() const {
  require(length > 0.0, ErrorCode::InvalidArgument, "Track.length must be > 0");
  require(!segments.empty(), ErrorCode::InvalidArgument,
          "Track must have at least one segment");
  require(segments.front().start_x == 0.0, ErrorCode::InvalidArgument,
          "Track must start at x = 0");
  double cursor = 0.0;
  for (const Segment& seg : segments) {
    require(seg.width > 0.0, ErrorCode::InvalidArgument,
            "Segment.width must be > 0");
    require(std::abs(seg.start_x - cursor) < 1e-9, ErrorCode::InvalidArgument,
            "segments must tile the track without overlap");
    if (seg.kind == SegmentKind::kBlock) {
      require(seg.height > 0.0, ErrorCode::InvalidArgument,
              "block height must be > 0");
    }
    if (seg.kind == SegmentKind::kGap) {
      require(seg.depth > 0.0, ErrorCode::InvalidArgument,
              "gap depth must be > 0");
    }
    cursor = seg.start_x + seg.width;
  }
  require(std::abs(cursor - length) < 1e-9, ErrorCode::InvalidArgument,
          "segments must cover [0, length]");
}

void ModeParamRanges::validate() const {
  validate_interval(pace_v, "pace_v");
  validate_interval(jump_w, "jump_w");
  validate_interval(jump_h, "jump_h");
  validate_interval(leap_w, "leap_w");
  validate_interval(leap_d, "leap_d");
  validate_interval(flip_r, "flip_r");
  validate_interval(flip_h, "flip_h");
  require(pace_v.lo > 0.0, ErrorCode::InvalidArgument, "pace_v must be > 0");
  require(jump_w.lo > 0.0 && jump_h.lo > 0.0, ErrorCode::InvalidArgument,
          "jump box must be positive");
  require(leap_w.lo > 0.0 && leap_d.lo > 0.0, ErrorCode::InvalidArgument,
          "leap box must be positive");
  require(test_dilation >= 1.0, ErrorCode::InvalidArgument,
          "test_dilation must be >= 1");
}

ModeParamRanges ModeParamRanges::test_box() const {
  validate();
  ModeParamRanges out = *this;
  out.pace_v = dilate(pace_v, test_dilation, 0.05);
  out.jump_w = dilate(jump_w, test_dilation, 0.05);
  out.jump_h = dilate(jump_h, test_dilation, 0.01);
  out.leap_w = dilate(leap_w, test_dilation, 0.05);
  out.leap_d = dilate(leap_d, test_dilation, 0.05);
  out.flip_r = dilate(flip_r, test_dilation, 0.1);
  out.flip_h = dilate(flip_h, test_dilation, 0.1);
  out.test_dilation = 1.0;
  return out;
}

Track generate_track(std::uint64_t seed, const ModeParamRanges& ranges,
                     double length, double obstacle_density) {
  ranges.validate();
  require(length > 0.0, ErrorCode::InvalidArgument, "length must be > 0");
  require(obstacle_density >= 0.0, ErrorCode::InvalidArgument,
          "obstacle_density must be >= 0");

  RngStream rng(seed);
  const int n_obstacles =
      static_cast<int>(std::llround(obstacle_density * length));

  Track track;
  track.length = length;
  track.seed = seed;

  if (n_obstacles == 0) {
    track.segments.push_back({SegmentKind::kFlat, 0.0, length, 0.0, 0.0});
    track.validate();
    return track;
  }

  // Draw the obstacles first so the feasibility check sees real widths.
  std::vector<Segment> obstacles;
  obstacles.reserve(n_obstacles);
  double obstacle_width_sum = 0.0;
  for (int i = 0; i < n_obstacles; ++i) {
    Segment seg;
    if (rng.uniform() < 0.5) {
      seg.kind = SegmentKind::kBlock;
      seg.width = ranges.jump_w.sample(rng);
      seg.height = ranges.jump_h.sample(rng);
    } else {
      seg.kind = SegmentKind::kGap;
      seg.width = ranges.leap_w.sample(rng);
      seg.depth = ranges.leap_d.sample(rng);
    }
    obstacle_width_sum += seg.width;
    obstacles.push_back(seg);
  }

  // n_obstacles obstacles need n_obstacles + 1 flats of >= kMinSeparation.
  const double required =
      obstacle_width_sum + (n_obstacles + 1) * kMinSeparation;
  if (required > length) {
    fail(ErrorCode::InfeasibleLayout,
         "track of length " + std::to_string(length) + " cannot fit " +
             std::to_string(n_obstacles) + " obstacles with " +
             std::to_string(kMinSeparation) + " m separation");
  }

  // Spread the slack across the flats with uniform weights.
  const double slack = length - required;
  std::vector<double> weights(n_obstacles + 1);
  double weight_sum = 0.0;
  for (double& w : weights) {
    w = rng.uniform(0.1, 1.0);
    weight_sum += w;
  }

  double cursor = 0.0;
  for (int i = 0; i <= n_obstacles; ++i) {
    const double flat_w = kMinSeparation + slack * weights[i] / weight_sum;
    track.segments.push_back({SegmentKind::kFlat, cursor, flat_w, 0.0, 0.0});
    cursor += flat_w;
    if (i < n_obstacles) {
      Segment seg = obstacles[i];
      seg.start_x = cursor;
      track.segments.push_back(seg);
      cursor += seg.width;
    }
  }
  // Absorb float drift into the final flat.
  track.segments.back().width += length - cursor;

  track.validate();
  return track;
}

TerrainHeight height_at(const Track& track, double x) {
  require(x >= 0.0 && x <= track.length, ErrorCode::OutOfRange,
          "height_at: x outside [0, length]");
  // Last segment whose start_x <= x (segments are sorted, half-open on the
  // right except the final one).
  auto it = std::upper_bound(
      track.segments.begin(), track.segments.end(), x,
      [](double v, const Segment& seg) { return v < seg.start_x; });
  require(it != track.segments.begin(), ErrorCode::OutOfRange,
          "height_at: malformed track");
  const Segment& seg = *(it - 1);
  switch (seg.kind) {
    case SegmentKind::kFlat: return {0.0, false};
    case SegmentKind::kBlock: return {seg.height, false};
    case SegmentKind::kGap: return {-seg.depth, true};
  }
  return {0.0, false};
}

ModeSpec active_mode(const Track& track, double base_x, double lookahead,
                     double pace_v) {
  require(lookahead > 0.0, ErrorCode::InvalidArgument, "lookahead must be > 0");
  const double window_lo = base_x;
  const double window_hi = base_x + lookahead;

  const Segment* nearest = nullptr;
  double nearest_dist = 0.0;
  for (const Segment& seg : track.segments) {
    if (seg.kind == SegmentKind::kFlat) continue;
    const double seg_end = seg.start_x + seg.width;
    if (seg_end < window_lo || seg.start_x > window_hi) continue;
    const double dist = std::max(0.0, seg.start_x - base_x);
    if (nearest == nullptr || dist < nearest_dist) {
      nearest = &seg;
      nearest_dist = dist;
    }
  }
  if (nearest == nullptr) return ModeSpec::pace(pace_v);
  if (nearest->kind == SegmentKind::kBlock) {
    return ModeSpec::jump(nearest->width, nearest->height);
  }
  return ModeSpec::leap(nearest->width, nearest->depth);
}

ModeSpec sample_mode_params(RngStream& rng, const ModeParamRanges& ranges,
                            Mode mode) {
  ranges.validate();
  switch (mode) {
    case Mode::kPace: return ModeSpec::pace(ranges.pace_v.sample(rng));
    case Mode::kJump:
      return ModeSpec::jump(ranges.jump_w.sample(rng),
                            ranges.jump_h.sample(rng));
    case Mode::kLeap:
      return ModeSpec::leap(ranges.leap_w.sample(rng),
                            ranges.leap_d.sample(rng));
    case Mode::kFlip:
      return ModeSpec::flip(ranges.flip_r.sample(rng),
                            ranges.flip_h.sample(rng));
    case Mode::kSettle: return ModeSpec::settle();
  }
  fail(ErrorCode::InvalidArgument, "unknown mode");
}

std::vector<double> terrain_scan(const Track& track, double base_x,
                                 int n_points, double span) {
  require(n_points >= 1, ErrorCode::InvalidArgument, "n_points must be >= 1");
  require(span > 0.0, ErrorCode::InvalidArgument, "span must be > 0");
  const double base_h =
      height_at(track, std::clamp(base_x, 0.0, track.length)).height;
  std::vector<double> scan(n_points);
  for (int k = 1; k <= n_points; ++k) {
    const double x =
        std::clamp(base_x + k * span / n_points, 0.0, track.length);
    scan[k - 1] = height_at(track, x).height - base_h;
  }
  return scan;
}

}  // namespace ogmp::terrain
