#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogmp/oracle.hpp"
#include "ogmp/terrain.hpp"

namespace ogmp::dataset {

using lti::Vector;

/// One labeled oracle reference: horizon+1 full model states plus the mode
/// (with parameters) it was queried for.
struct Trajectory {
  long traj_id = 0;
  terrain::ModeSpec mode;
  std::vector<Vector> states;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  int horizon = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Standing starts covering the pace-speed box plus one crouched entry, so
/// the oracle sees varied initial conditions.
std::vector<Vector> default_initial_states(const oracle::OracleParams& params);

/// Balanced mode dataset: for every mode in `modes`, n_per_mode oracle
/// queries with parameters drawn uniformly from the training box, initial
/// states cycled from `initial_states`, and a synthetic single-obstacle
/// terrain matching the sampled mode. Deterministic in (seed, arguments).
Dataset generate_mode_dataset(const oracle::Oracle& oracle,
                              const terrain::ModeParamRanges& ranges,
                              const std::vector<Vector>& initial_states,
                              int n_per_mode, int horizon, std::uint64_t seed,
                              const std::vector<terrain::Mode>& modes = {
                                  terrain::Mode::kPace, terrain::Mode::kJump,
                                  terrain::Mode::kLeap});

/// One row per step (traj_id, mode_label, step, the 7 state entries) plus a
/// sidecar manifest at path + ".json" recording seed, horizon, and per-mode
/// parameters.
void write_dataset_csv(const Dataset& data, const std::string& path,
                       const terrain::ModeParamRanges& ranges);

Dataset read_dataset_csv(const std::string& path);

}  // namespace ogmp::dataset
