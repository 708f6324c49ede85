#include "ogmp/ogmp_c.h"

#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ogmp/config.hpp"
#include "ogmp/dataset.hpp"
#include "ogmp/encoder.hpp"
#include "ogmp/error.hpp"
#include "ogmp/harness.hpp"
#include "ogmp/ppo.hpp"
#include "ogmp/sim.hpp"

struct ogmp_env {
  ogmp::sim::ParkourEnv env;
};

struct ogmp_oracle {
  ogmp::config::RunConfig config;
  ogmp::oracle::Oracle oracle;
};

namespace {

using ogmp::Error;
using ogmp::ErrorCode;

thread_local std::string t_last_error;

ogmp_status status_from(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return OGMP_ERR_CONFIG;
    case ErrorCode::IoFailure:
      return OGMP_ERR_IO;
    case ErrorCode::ChecksumMismatch:
      return OGMP_ERR_CHECKSUM;
    case ErrorCode::NaNDetected:
    case ErrorCode::NonConvergence:
    case ErrorCode::SingularInnerMatrix:
    case ErrorCode::InternalSolverFailure:
      return OGMP_ERR_NUMERIC;
    case ErrorCode::SteppingTerminatedEpisode:
      return OGMP_ERR_STATE;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::OutOfRange:
    case ErrorCode::InfeasibleLayout:
    case ErrorCode::DegenerateInput:
    case ErrorCode::EmptyInput:
      return OGMP_ERR_INVALID_ARGUMENT;
  }
  return OGMP_ERR_INTERNAL;
}

template <typename Fn>
ogmp_status guarded(Fn&& fn) {
  t_last_error.clear();
  try {
    fn();
    return OGMP_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return OGMP_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown failure";
    return OGMP_ERR_INTERNAL;
  }
}

ogmp_status arg_error(const char* message) {
  t_last_error = message;
  return OGMP_ERR_INVALID_ARGUMENT;
}

std::string require_text(const char* text, const char* what) {
  if (text == nullptr) {
    ogmp::fail(ErrorCode::InvalidArgument,
               std::string(what) + " must not be null");
  }
  return text;
}

ogmp::terrain::Mode parse_mode(const char* name) {
  const std::string mode = require_text(name, "mode name");
  using ogmp::terrain::Mode;
  for (Mode m : {Mode::kPace, Mode::kJump, Mode::kLeap, Mode::kFlip,
                 Mode::kSettle}) {
    if (mode == ogmp::terrain::mode_name(m)) return m;
  }
  ogmp::fail(ErrorCode::InvalidArgument,
             "mode must be one of pace, jump, leap, flip, settle (got '" +
                 mode + "')");
}

ogmp::config::RunConfig parse_config(const char* config_json) {
  return ogmp::config::parse_run_config(
      require_text(config_json, "config JSON"));
}

std::vector<std::string> split_values(const char* values_csv) {
  std::vector<std::string> out;
  std::string current;
  for (const char* p = values_csv; *p != '\0'; ++p) {
    if (*p == ',') {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(*p);
    }
  }
  out.push_back(current);
  return out;
}

}  // namespace

extern "C" {

const char* ogmp_status_name(ogmp_status status) {
  switch (status) {
    case OGMP_OK:
      return "ok";
    case OGMP_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case OGMP_ERR_CONFIG:
      return "config_error";
    case OGMP_ERR_IO:
      return "io_failure";
    case OGMP_ERR_NUMERIC:
      return "numeric_failure";
    case OGMP_ERR_CHECKSUM:
      return "checksum_mismatch";
    case OGMP_ERR_STATE:
      return "state_misuse";
    case OGMP_ERR_INTERNAL:
      return "internal_failure";
  }
  return "unknown";
}

const char* ogmp_last_error(void) { return t_last_error.c_str(); }

const char* ogmp_version(void) { return "0.1.0"; }

ogmp_status ogmp_env_create(const char* config_json, ogmp_env** out_env) {
  if (out_env == nullptr) return arg_error("out_env must not be null");
  *out_env = nullptr;
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    *out_env = new ogmp_env{ogmp::sim::ParkourEnv(cfg.env)};
  });
}

void ogmp_env_destroy(ogmp_env* env) { delete env; }

ogmp_status ogmp_env_obs_dim(const ogmp_env* env, int32_t* out_dim) {
  if (env == nullptr) return arg_error("env must not be null");
  if (out_dim == nullptr) return arg_error("out_dim must not be null");
  *out_dim = env->env.obs_dim();
  t_last_error.clear();
  return OGMP_OK;
}

ogmp_status ogmp_env_action_dim(const ogmp_env* env, int32_t* out_dim) {
  if (env == nullptr) return arg_error("env must not be null");
  if (out_dim == nullptr) return arg_error("out_dim must not be null");
  *out_dim = ogmp::sim::kActionDim;
  t_last_error.clear();
  return OGMP_OK;
}

ogmp_status ogmp_env_reset(ogmp_env* env, uint64_t seed, double* out_obs,
                           int32_t obs_len) {
  if (env == nullptr) return arg_error("env must not be null");
  if (out_obs == nullptr) return arg_error("out_obs must not be null");
  return guarded([&] {
    ogmp::require(obs_len == env->env.obs_dim(), ErrorCode::DimensionMismatch,
                  "obs_len must equal the observation dimension");
    const ogmp::lti::Vector obs = env->env.reset(seed);
    std::memcpy(out_obs, obs.data(), sizeof(double) * obs.size());
  });
}

ogmp_status ogmp_env_step(ogmp_env* env, const double* action,
                          int32_t action_len, double* out_obs,
                          int32_t obs_len, double* out_reward,
                          int32_t* out_termination) {
  if (env == nullptr) return arg_error("env must not be null");
  if (action == nullptr) return arg_error("action must not be null");
  if (out_obs == nullptr) return arg_error("out_obs must not be null");
  if (out_reward == nullptr) return arg_error("out_reward must not be null");
  if (out_termination == nullptr) {
    return arg_error("out_termination must not be null");
  }
  return guarded([&] {
    ogmp::require(action_len == ogmp::sim::kActionDim,
                  ErrorCode::DimensionMismatch,
                  "action_len must equal the action dimension");
    ogmp::require(obs_len == env->env.obs_dim(), ErrorCode::DimensionMismatch,
                  "obs_len must equal the observation dimension");
    ogmp::lti::Vector a(ogmp::sim::kActionDim);
    std::memcpy(a.data(), action, sizeof(double) * a.size());
    const ogmp::sim::StepResult r =
        env->env.step(ogmp::sim::Action::from_vector(a));
    std::memcpy(out_obs, r.observation.data(),
                sizeof(double) * r.observation.size());
    *out_reward = r.reward;
    switch (r.termination) {
      case ogmp::sim::Termination::kNone:
        *out_termination = OGMP_TERM_NONE;
        break;
      case ogmp::sim::Termination::kRhoViolation:
        *out_termination = OGMP_TERM_RHO;
        break;
      case ogmp::sim::Termination::kFall:
        *out_termination = OGMP_TERM_FALL;
        break;
      case ogmp::sim::Termination::kTimeLimit:
        *out_termination = OGMP_TERM_TIME_LIMIT;
        break;
    }
  });
}

ogmp_status ogmp_env_state(const ogmp_env* env, double* out_state7) {
  if (env == nullptr) return arg_error("env must not be null");
  if (out_state7 == nullptr) return arg_error("out_state7 must not be null");
  return guarded([&] {
    const ogmp::lti::Vector x = env->env.state().srb_state();
    std::memcpy(out_state7, x.data(), sizeof(double) * x.size());
  });
}

ogmp_status ogmp_oracle_create(const char* config_json,
                               ogmp_oracle** out_oracle) {
  if (out_oracle == nullptr) return arg_error("out_oracle must not be null");
  *out_oracle = nullptr;
  return guarded([&] {
    ogmp::config::RunConfig cfg = parse_config(config_json);
    ogmp::oracle::Oracle oracle(cfg.env.oracle_kind, cfg.env.physics.srb,
                                cfg.env.oracle_params);
    *out_oracle = new ogmp_oracle{std::move(cfg), std::move(oracle)};
  });
}

void ogmp_oracle_destroy(ogmp_oracle* oracle) { delete oracle; }

ogmp_status ogmp_oracle_query(const ogmp_oracle* oracle, const double* state7,
                              const char* mode, double a, double b,
                              int32_t horizon, double* out_states,
                              int32_t* out_phases) {
  if (oracle == nullptr) return arg_error("oracle must not be null");
  if (out_states == nullptr) return arg_error("out_states must not be null");
  return guarded([&] {
    const ogmp::sim::EnvConfig& env = oracle->config.env;
    ogmp::require(horizon >= 1, ErrorCode::InvalidArgument,
                  "horizon must be at least 1");

    ogmp::terrain::ModeSpec spec;
    spec.mode = parse_mode(mode);
    spec.a = a;
    spec.b = b;

    ogmp::oracle::OracleQuery query;
    if (state7 != nullptr) {
      query.x_t = ogmp::lti::Vector(ogmp::lti::kSrbStateDim);
      std::memcpy(query.x_t.data(), state7,
                  sizeof(double) * ogmp::lti::kSrbStateDim);
    } else {
      query.x_t = ogmp::lti::Vector::Zero(ogmp::lti::kSrbStateDim);
      query.x_t[ogmp::lti::kPz] = env.physics.nominal_height;
      query.x_t[ogmp::lti::kVx] = env.oracle_params.default_cross_v;
      query.x_t[ogmp::lti::kSrbStateDim - 1] = 1.0;
    }
    query.mode = spec;
    const double command_v = spec.mode == ogmp::terrain::Mode::kPace
                                 ? spec.a
                                 : env.oracle_params.default_cross_v;
    const ogmp::terrain::Track track = ogmp::harness::single_obstacle_track(
        spec, 0.2, env.track_length);
    const double lookahead =
        command_v * horizon * env.oracle_params.dt + 2.0;
    query.window =
        ogmp::oracle::make_terrain_window(track, query.x_t[ogmp::lti::kPx],
                                          lookahead);
    query.horizon = horizon;
    query.command_v = command_v;

    const ogmp::oracle::ReferenceTrajectory ref =
        oracle->oracle.query(query);
    for (std::size_t k = 0; k < ref.states.size(); ++k) {
      std::memcpy(out_states + k * ogmp::lti::kSrbStateDim,
                  ref.states[k].data(),
                  sizeof(double) * ogmp::lti::kSrbStateDim);
    }
    if (out_phases != nullptr) {
      for (std::size_t k = 0; k < ref.phases.size(); ++k) {
        out_phases[k] =
            ref.phases[k] == ogmp::oracle::Phase::kFlight ? 1 : 0;
      }
    }
  });
}

ogmp_status ogmp_run_experiment(const char* config_json) {
  return guarded([&] {
    ogmp::harness::run_experiment(parse_config(config_json));
  });
}

ogmp_status ogmp_eval(const char* config_json, const char* checkpoint_path,
                      const char* out_dir) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const std::string ckpt = require_text(checkpoint_path, "checkpoint path");
    const std::string dir = require_text(out_dir, "output directory");
    ogmp::harness::EvalOptions options;
    options.n_episodes = cfg.eval_episodes;
    options.mean_action = cfg.eval_mean_action;
    options.seed = cfg.seeds.front();
    const ogmp::harness::EvalResult result =
        ogmp::harness::eval_policy(ckpt, cfg.env, options);
    std::filesystem::create_directories(dir);
    ogmp::harness::write_eval_csv(dir + "/eval_episodes.csv", result.traces);
    ogmp::harness::write_report_csv(dir + "/eval_report.csv", result.report);
  });
}

ogmp_status ogmp_sweep(const char* config_json, const char* axis,
                       const char* values_csv, const char* out_dir) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const ogmp::harness::SweepAxis sweep_axis =
        ogmp::harness::sweep_axis_from_name(
            require_text(axis, "sweep axis"));
    const std::vector<std::string> values =
        values_csv == nullptr
            ? ogmp::harness::default_axis_values(sweep_axis)
            : split_values(values_csv);
    const std::string dir = require_text(out_dir, "output directory");
    std::filesystem::create_directories(dir);
    const ogmp::harness::SweepResult result =
        ogmp::harness::sweep(cfg, sweep_axis, values, dir);
    ogmp::harness::write_sweep_csv(dir + "/sweep_long.csv",
                                   dir + "/sweep_pivot.csv", result);
    ogmp::harness::write_manifest(dir);
  });
}

ogmp_status ogmp_gen_dataset(const char* config_json, const char* out_csv) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const std::string path = require_text(out_csv, "output CSV path");
    const ogmp::oracle::Oracle oracle(cfg.env.oracle_kind,
                                      cfg.env.physics.srb,
                                      cfg.env.oracle_params);
    ogmp::lti::Vector start =
        ogmp::lti::Vector::Zero(ogmp::lti::kSrbStateDim);
    start[ogmp::lti::kPz] = cfg.env.physics.nominal_height;
    start[ogmp::lti::kVx] = cfg.env.oracle_params.default_cross_v;
    start[ogmp::lti::kSrbStateDim - 1] = 1.0;
    const ogmp::dataset::Dataset data = ogmp::dataset::generate_mode_dataset(
        oracle, cfg.env.ranges, {start}, cfg.dataset_n_per_mode,
        cfg.env.horizon_steps, cfg.derived_seed(11));
    ogmp::dataset::write_dataset_csv(data, path, cfg.env.ranges);
  });
}

ogmp_status ogmp_train_encoder(const char* config_json,
                               const char* dataset_csv,
                               const char* out_encoder,
                               const char* latent_csv) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const std::string in_path = require_text(dataset_csv, "dataset CSV path");
    const std::string enc_path = require_text(out_encoder, "encoder path");
    const ogmp::dataset::Dataset data =
        ogmp::dataset::read_dataset_csv(in_path);
    const ogmp::encoder::EncoderTraining trained =
        ogmp::encoder::train_encoder(data, cfg.encoder_hyper,
                                     cfg.derived_seed(12));
    ogmp::encoder::save_encoder(enc_path, trained.params);
    if (latent_csv != nullptr) {
      ogmp::encoder::write_latent_csv(
          latent_csv, ogmp::encoder::encode_dataset(trained.params, data));
    }
  });
}

ogmp_status ogmp_oracle_viz(const char* config_json, const char* mode,
                            double a, double b, const char* out_csv) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const std::string path = require_text(out_csv, "output CSV path");
    ogmp::terrain::ModeSpec spec;
    spec.mode = parse_mode(mode);
    spec.a = a;
    spec.b = b;
    ogmp::harness::write_oracle_viz_csv(path, cfg, spec);
  });
}

ogmp_status ogmp_versatility_grid(const char* config_json,
                                  const char* checkpoint_path,
                                  const char* mode, int32_t cells_a,
                                  int32_t cells_b, int32_t episodes_per_cell,
                                  uint64_t seed, const char* out_csv) {
  return guarded([&] {
    const ogmp::config::RunConfig cfg = parse_config(config_json);
    const std::string ckpt = require_text(checkpoint_path, "checkpoint path");
    const std::string path = require_text(out_csv, "output CSV path");
    const ogmp::ppo::PolicyCheckpoint loaded =
        ogmp::ppo::load_policy_checkpoint(ckpt);
    ogmp::harness::GridOptions options;
    options.cells_a = cells_a;
    options.cells_b = cells_b;
    options.episodes_per_cell = episodes_per_cell;
    options.mean_action = cfg.eval_mean_action;
    options.seed = seed;
    const ogmp::harness::GridResult grid =
        ogmp::harness::mode_versatility_grid(loaded.policy, cfg.env,
                                             parse_mode(mode), options);
    ogmp::harness::write_grid_csv(path, grid);
  });
}

}  // extern "C"
