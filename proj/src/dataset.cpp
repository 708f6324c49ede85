#include "ogmp/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "ogmp/lti.hpp"

namespace ogmp::dataset {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Minimal track realizing one mode: flat ground for pace, a single block
/// for jump, a single gap for leap, with the obstacle a short sampled
/// distance ahead of the start.
terrain::Track mode_track(const terrain::ModeSpec& spec, double offset) {
  terrain::Track track;
  track.seed = 0;
  const double kTail = 6.0;
  switch (spec.mode) {
    case terrain::Mode::kPace:
    case terrain::Mode::kFlip:
    case terrain::Mode::kSettle: {
      track.length = kTail;
      track.segments.push_back(
          {terrain::SegmentKind::kFlat, 0.0, kTail, 0.0, 0.0});
      break;
    }
    case terrain::Mode::kJump: {
      track.length = offset + spec.a + kTail;
      track.segments.push_back(
          {terrain::SegmentKind::kFlat, 0.0, offset, 0.0, 0.0});
      track.segments.push_back(
          {terrain::SegmentKind::kBlock, offset, spec.a, spec.b, 0.0});
      track.segments.push_back({terrain::SegmentKind::kFlat, offset + spec.a,
                                kTail, 0.0, 0.0});
      break;
    }
    case terrain::Mode::kLeap: {
      track.length = offset + spec.a + kTail;
      track.segments.push_back(
          {terrain::SegmentKind::kFlat, 0.0, offset, 0.0, 0.0});
      track.segments.push_back(
          {terrain::SegmentKind::kGap, offset, spec.a, 0.0, spec.b});
      track.segments.push_back({terrain::SegmentKind::kFlat, offset + spec.a,
                                kTail, 0.0, 0.0});
      break;
    }
  }
  track.validate();
  return track;
}

terrain::Mode parse_mode(const std::string& name) {
  for (terrain::Mode m :
       {terrain::Mode::kPace, terrain::Mode::kJump, terrain::Mode::kLeap,
        terrain::Mode::kFlip, terrain::Mode::kSettle}) {
    if (name == terrain::mode_name(m)) return m;
  }
  fail(ErrorCode::IoFailure, "unknown mode label '" + name + "'");
}

}  // namespace

void Dataset::validate() const {
  require(!trajectories.empty(), ErrorCode::EmptyInput,
          "dataset has no trajectories");
  require(horizon >= 1, ErrorCode::InvalidArgument,
          "dataset horizon must be >= 1");
  require(dt > 0.0, ErrorCode::InvalidArgument, "dataset dt must be positive");
  for (const Trajectory& t : trajectories) {
    require(static_cast<int>(t.states.size()) == horizon + 1,
            ErrorCode::LengthMismatch,
            "trajectory length must be horizon + 1");
    for (const Vector& x : t.states) {
      require(x.size() == lti::kSrbStateDim, ErrorCode::DimensionMismatch,
              "dataset states must be full model states");
      require(x.allFinite(), ErrorCode::NaNDetected,
              "non-finite dataset state");
    }
  }
}

std::vector<Vector> default_initial_states(
    const oracle::OracleParams& params) {
  std::vector<Vector> states;
  auto standing = [&params](double v_x, double height) {
    Vector x = Vector::Zero(lti::kSrbStateDim);
    x[lti::kPz] = height;
    x[lti::kVx] = v_x;
    x[lti::kSrbStateDim - 1] = 1.0;
    return x;
  };
  for (double v : {0.3, 0.45, 0.6, 0.75}) {
    states.push_back(standing(v, params.nominal_height));
  }
  states.push_back(standing(0.55, params.nominal_height - 0.05));
  return states;
}

Dataset generate_mode_dataset(const oracle::Oracle& oracle,
                              const terrain::ModeParamRanges& ranges,
                              const std::vector<Vector>& initial_states,
                              int n_per_mode, int horizon, std::uint64_t seed,
                              const std::vector<terrain::Mode>& modes) {
  require(n_per_mode >= 1, ErrorCode::InvalidArgument,
          "n_per_mode must be >= 1");
  require(!initial_states.empty(), ErrorCode::EmptyInput,
          "at least one initial state is required");
  require(!modes.empty(), ErrorCode::EmptyInput,
          "at least one mode is required");
  ranges.validate();

  Dataset data;
  data.horizon = horizon;
  data.dt = oracle.params().dt;
  data.seed = seed;
  RngStream rng(seed);
  long traj_id = 0;
  for (terrain::Mode mode : modes) {
    for (int k = 0; k < n_per_mode; ++k) {
      terrain::ModeSpec spec = terrain::sample_mode_params(rng, ranges, mode);
      // The obstacle distance and crossing speed are standardized so that
      // windows vary only with the mode parameters; this keeps the modal
      // manifolds low-dimensional enough for a 2-D bottleneck.
      const double offset = 0.2;
      const double command_v = (mode == terrain::Mode::kPace)
                                   ? spec.a
                                   : oracle.params().default_cross_v;
      terrain::Track track = mode_track(spec, offset);

      oracle::OracleQuery q;
      q.x_t = initial_states[static_cast<std::size_t>(traj_id) %
                             initial_states.size()];
      q.mode = spec;
      q.horizon = horizon;
      q.command_v = command_v;
      const double lookahead =
          command_v * horizon * oracle.params().dt + 2.0;
      q.window = oracle::make_terrain_window(track, 0.0, lookahead);

      oracle::ReferenceTrajectory ref = oracle.query(q);
      Trajectory t;
      t.traj_id = traj_id++;
      t.mode = spec;
      t.states = std::move(ref.states);
      data.trajectories.push_back(std::move(t));
    }
  }
  data.validate();
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const terrain::ModeParamRanges& ranges) {
  data.validate();
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::IoFailure, "cannot open " + path);
  f << "traj_id,mode_label,step,p_x,p_z,theta,v_x,v_z,omega,aug\n";
  for (const Trajectory& t : data.trajectories) {
    for (std::size_t s = 0; s < t.states.size(); ++s) {
      f << t.traj_id << ',' << terrain::mode_name(t.mode.mode) << ',' << s;
      for (long i = 0; i < t.states[s].size(); ++i) {
        f << ',' << format_double(t.states[s][i]);
      }
      f << '\n';
    }
  }
  require(f.good(), ErrorCode::IoFailure, "failed writing " + path);
  f.close();

  json manifest;
  manifest["seed"] = data.seed;
  manifest["horizon"] = data.horizon;
  manifest["dt"] = data.dt;
  manifest["n_trajectories"] = data.trajectories.size();
  manifest["ranges"] = {
      {"pace_v", {ranges.pace_v.lo, ranges.pace_v.hi}},
      {"jump_w", {ranges.jump_w.lo, ranges.jump_w.hi}},
      {"jump_h", {ranges.jump_h.lo, ranges.jump_h.hi}},
      {"leap_w", {ranges.leap_w.lo, ranges.leap_w.hi}},
      {"leap_d", {ranges.leap_d.lo, ranges.leap_d.hi}},
  };
  manifest["trajectories"] = json::array();
  for (const Trajectory& t : data.trajectories) {
    manifest["trajectories"].push_back(
        {{"traj_id", t.traj_id},
         {"mode", terrain::mode_name(t.mode.mode)},
         {"a", t.mode.a},
         {"b", t.mode.b}});
  }
  std::ofstream mf(path + ".json", std::ios::trunc);
  require(mf.good(), ErrorCode::IoFailure, "cannot open " + path + ".json");
  mf << manifest.dump(2) << '\n';
  require(mf.good(), ErrorCode::IoFailure,
          "failed writing " + path + ".json");
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream mf(path + ".json");
  require(mf.good(), ErrorCode::IoFailure,
          "missing dataset manifest " + path + ".json");
  json manifest = json::parse(mf, nullptr, false);
  require(!manifest.is_discarded(), ErrorCode::IoFailure,
          "unparseable dataset manifest");

  Dataset data;
  try {
    data.seed = manifest.at("seed").get<std::uint64_t>();
    data.horizon = manifest.at("horizon").get<int>();
    data.dt = manifest.at("dt").get<double>();
  } catch (const json::exception&) {
    fail(ErrorCode::IoFailure, "dataset manifest lacks required fields");
  }

  std::ifstream f(path);
  require(f.good(), ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), ErrorCode::IoFailure,
          "empty dataset file");
  require(line == "traj_id,mode_label,step,p_x,p_z,theta,v_x,v_z,omega,aug",
          ErrorCode::IoFailure, "unexpected dataset header");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    auto next = [&row, &field, &line]() -> const std::string& {
      require(static_cast<bool>(std::getline(row, field, ',')),
              ErrorCode::IoFailure, "short dataset row: " + line);
      return field;
    };
    const long traj_id = std::stol(next());
    const terrain::Mode mode = parse_mode(next());
    const long step = std::stol(next());
    Vector x(lti::kSrbStateDim);
    for (int i = 0; i < lti::kSrbStateDim; ++i) x[i] = std::stod(next());
    if (traj_id == static_cast<long>(data.trajectories.size())) {
      Trajectory t;
      t.traj_id = traj_id;
      t.mode.mode = mode;
      data.trajectories.push_back(std::move(t));
    }
    require(!data.trajectories.empty() &&
                traj_id + 1 == static_cast<long>(data.trajectories.size()) &&
                step ==
                    static_cast<long>(data.trajectories.back().states.size()),
            ErrorCode::IoFailure, "dataset rows out of order");
    data.trajectories.back().states.push_back(std::move(x));
  }

  // Re-attach mode parameters from the manifest.
  if (manifest.contains("trajectories") &&
      manifest["trajectories"].is_array() &&
      manifest["trajectories"].size() == data.trajectories.size()) {
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
      const json& entry = manifest["trajectories"][i];
      data.trajectories[i].mode.a = entry.value("a", 0.0);
      data.trajectories[i].mode.b = entry.value("b", 0.0);
    }
  }
  data.validate();
  return data;
}

}  // namespace ogmp::dataset
