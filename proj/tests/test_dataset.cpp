#include "ogmp/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "doctest.h"
#include "ogmp/lti.hpp"

using namespace ogmp;
using dataset::Dataset;
using lti::Vector;

namespace {

ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error to be thrown");
  return ErrorCode::InvalidArgument;
}

oracle::Oracle make_oracle() {
  return oracle::Oracle(
      oracle::OracleKind::defaults(oracle::OracleKindId::kPreview),
      lti::SrbParams{}, oracle::OracleParams{});
}

Vector cruising_start(double height, double v) {
  Vector x = Vector::Zero(lti::kSrbStateDim);
  x[lti::kPz] = height;
  x[lti::kVx] = v;
  x[lti::kSrbStateDim - 1] = 1.0;
  return x;
}

}  // namespace

TEST_CASE("dataset: one trajectory per mode when n_per_mode = 1") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  Dataset data = dataset::generate_mode_dataset(
      orc, ranges, {cruising_start(0.55, 0.6)}, 1, 30, 3);
  CHECK(data.trajectories.size() == 3);
  CHECK(data.trajectories[0].mode.mode == terrain::Mode::kPace);
  CHECK(data.trajectories[1].mode.mode == terrain::Mode::kJump);
  CHECK(data.trajectories[2].mode.mode == terrain::Mode::kLeap);
  for (const dataset::Trajectory& t : data.trajectories) {
    CHECK(t.states.size() == 31);
  }
}

TEST_CASE("dataset: class balance is exact and ids are sequential") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  Dataset data = dataset::generate_mode_dataset(
      orc, ranges, {cruising_start(0.55, 0.6)}, 7, 20, 5);
  CHECK(data.trajectories.size() == 21);
  std::map<terrain::Mode, int> counts;
  long expect_id = 0;
  for (const dataset::Trajectory& t : data.trajectories) {
    counts[t.mode.mode] += 1;
    CHECK(t.traj_id == expect_id++);
  }
  CHECK(counts[terrain::Mode::kPace] == 7);
  CHECK(counts[terrain::Mode::kJump] == 7);
  CHECK(counts[terrain::Mode::kLeap] == 7);
}

TEST_CASE("dataset: every trajectory continues its queried initial state") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  const Vector a = cruising_start(0.55, 0.6);
  const Vector b = cruising_start(0.5, 0.45);
  Dataset data =
      dataset::generate_mode_dataset(orc, ranges, {a, b}, 2, 15, 9);
  for (const dataset::Trajectory& t : data.trajectories) {
    const Vector& want = (t.traj_id % 2 == 0) ? a : b;
    CHECK((t.states.front() - want).norm() < 1e-12);
  }
}

TEST_CASE("dataset: mode parameters stay inside the training box and shapes "
          "match the mode") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  const double nominal = orc.params().nominal_height;
  Dataset data = dataset::generate_mode_dataset(
      orc, ranges, {cruising_start(nominal, 0.6)}, 10, 30, 17);
  for (const dataset::Trajectory& t : data.trajectories) {
    double max_pz = -1e9;
    double min_pz = 1e9;
    for (const Vector& x : t.states) {
      max_pz = std::max(max_pz, x[lti::kPz]);
      min_pz = std::min(min_pz, x[lti::kPz]);
    }
    switch (t.mode.mode) {
      case terrain::Mode::kPace:
        CHECK(ranges.pace_v.contains(t.mode.a));
        // Cruising on flat ground holds the nominal height.
        CHECK(max_pz == doctest::Approx(nominal).epsilon(1e-9));
        CHECK(min_pz == doctest::Approx(nominal).epsilon(1e-9));
        break;
      case terrain::Mode::kJump:
        CHECK(ranges.jump_w.contains(t.mode.a));
        CHECK(ranges.jump_h.contains(t.mode.b));
        // The arc must rise meaningfully toward the block top.
        CHECK(max_pz > nominal + 0.5 * t.mode.b);
        CHECK(t.states.back()[lti::kPz] > nominal);
        break;
      case terrain::Mode::kLeap:
        CHECK(ranges.leap_w.contains(t.mode.a));
        CHECK(ranges.leap_d.contains(t.mode.b));
        CHECK(max_pz > nominal);  // leaps launch upward
        CHECK(min_pz < nominal);  // after an anticipatory crouch
        break;
      default:
        FAIL("unexpected mode in default dataset");
    }
  }
}

TEST_CASE("dataset: identical seeds reproduce byte-identical data, new seeds "
          "differ") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  const std::vector<Vector> inits = {cruising_start(0.55, 0.6)};
  Dataset a = dataset::generate_mode_dataset(orc, ranges, inits, 4, 25, 42);
  Dataset b = dataset::generate_mode_dataset(orc, ranges, inits, 4, 25, 42);
  Dataset c = dataset::generate_mode_dataset(orc, ranges, inits, 4, 25, 43);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    CHECK(a.trajectories[i].mode.a == b.trajectories[i].mode.a);
    CHECK(a.trajectories[i].mode.b == b.trajectories[i].mode.b);
    for (std::size_t s = 0; s < a.trajectories[i].states.size(); ++s) {
      CHECK((a.trajectories[i].states[s] - b.trajectories[i].states[s])
                .norm() == 0.0);
    }
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    if (a.trajectories[i].mode.a != c.trajectories[i].mode.a) {
      any_diff = true;
    }
  }
  CHECK(any_diff);
}

TEST_CASE("dataset: argument validation") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  const std::vector<Vector> inits = {cruising_start(0.55, 0.6)};
  CHECK(thrown_code([&] {
          (void)dataset::generate_mode_dataset(orc, ranges, inits, 0, 30, 1);
        }) == ErrorCode::InvalidArgument);
  CHECK(thrown_code([&] {
          (void)dataset::generate_mode_dataset(orc, ranges, {}, 1, 30, 1);
        }) == ErrorCode::EmptyInput);
  CHECK(thrown_code([&] {
          (void)dataset::generate_mode_dataset(orc, ranges, inits, 1, 30, 1,
                                               {});
        }) == ErrorCode::EmptyInput);
}

TEST_CASE("dataset: CSV roundtrip preserves every state bit for bit") {
  oracle::Oracle orc = make_oracle();
  terrain::ModeParamRanges ranges;
  Dataset data = dataset::generate_mode_dataset(
      orc, ranges, {cruising_start(0.55, 0.6)}, 3, 12, 99);
  const std::string path = "dataset_roundtrip.csv";
  dataset::write_dataset_csv(data, path, ranges);
  CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(path + ".json"));

  Dataset back = dataset::read_dataset_csv(path);
  CHECK(back.horizon == data.horizon);
  CHECK(back.dt == data.dt);
  CHECK(back.seed == data.seed);
  REQUIRE(back.trajectories.size() == data.trajectories.size());
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    CHECK(back.trajectories[i].mode.mode == data.trajectories[i].mode.mode);
    CHECK(back.trajectories[i].mode.a == data.trajectories[i].mode.a);
    CHECK(back.trajectories[i].mode.b == data.trajectories[i].mode.b);
    REQUIRE(back.trajectories[i].states.size() ==
            data.trajectories[i].states.size());
    for (std::size_t s = 0; s < data.trajectories[i].states.size(); ++s) {
      CHECK((back.trajectories[i].states[s] -
             data.trajectories[i].states[s]).norm() == 0.0);
    }
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("dataset: reading without a manifest or with a bad header fails") {
  const std::string path = "dataset_bad.csv";
  {
    std::ofstream f(path);
    f << "traj_id,mode_label,step,p_x,p_z,theta,v_x,v_z,omega,aug\n";
  }
  CHECK(thrown_code([&] { (void)dataset::read_dataset_csv(path); }) ==
        ErrorCode::IoFailure);
  {
    std::ofstream mf(path + ".json");
    mf << "{\"seed\": 1, \"horizon\": 2, \"dt\": 0.025}\n";
    std::ofstream f(path);
    f << "wrong,header\n";
  }
  CHECK(thrown_code([&] { (void)dataset::read_dataset_csv(path); }) ==
        ErrorCode::IoFailure);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("dataset: default initial states are well-formed model states") {
  std::vector<Vector> states =
      dataset::default_initial_states(oracle::OracleParams{});
  CHECK(states.size() == 5);
  for (const Vector& x : states) {
    CHECK(x.size() == lti::kSrbStateDim);
    CHECK(x[lti::kSrbStateDim - 1] == 1.0);
    CHECK(x[lti::kPz] > 0.0);
  }
}
