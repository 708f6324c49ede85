#include "ogmp/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "ogmp/dataset.hpp"
#include "ogmp/encoder.hpp"
#include "ogmp/error.hpp"
#include "ogmp/rng.hpp"

namespace ogmp::harness {
namespace {

namespace fs = std::filesystem;

// Seed-derivation stages for the auxiliary pipeline artifacts.
constexpr std::uint64_t kDatasetStage = 11;
constexpr std::uint64_t kEncoderStage = 12;
// Per-episode evaluation substream offsets (distinct from the trainer's
// 1000+/2000+ env blocks, so training and evaluation never share draws).
constexpr std::uint64_t kEvalEnvBlock = 100;
constexpr std::uint64_t kEvalActionBlock = 200;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoFailure, "cannot open for writing: " + path);
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "failed writing: " + path);
}

double population_std(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

std::string sanitize_token(const std::string& token) {
  std::string out = token;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
          c == '+' || c == '-')) {
      c = '_';
    }
  }
  return out;
}

std::string sanitize_message(const std::string& msg) {
  std::string out = msg;
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return out;
}

double strict_parse_double(const std::string& token, const char* axis) {
  const char* begin = token.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  require(end == begin + token.size() && !token.empty() && std::isfinite(v),
          ErrorCode::ConfigError,
          std::string("sweep axis '") + axis + "' needs a numeric value (got '" +
              token + "')");
  return v;
}

sim::ObservationMask parse_mask_token(const std::string& token) {
  sim::ObservationMask mask;
  mask.proprioception = true;  // proprioception is never ablated
  mask.scan = false;
  mask.latent = false;
  mask.clock = false;
  std::stringstream ss(token);
  std::string part;
  bool any = false;
  while (std::getline(ss, part, '+')) {
    if (part == "h") {
      mask.scan = true;
    } else if (part == "z") {
      mask.latent = true;
    } else if (part == "c") {
      mask.clock = true;
    } else {
      fail(ErrorCode::ConfigError,
           "sweep axis 'obs_mask' values combine 'h', 'z', 'c' with '+' "
           "(got '" + token + "')");
    }
    any = true;
  }
  require(any, ErrorCode::ConfigError,
          "sweep axis 'obs_mask' needs at least one component");
  return mask;
}

double grid_value(const terrain::Interval& iv, int i, int n) {
  if (n == 1) return iv.mid();
  return iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) /
                     static_cast<double>(n - 1);
}

ppo::TrainSetup make_train_setup(const config::RunConfig& cfg,
                                 std::uint64_t seed,
                                 const std::string& out_dir) {
  ppo::TrainSetup setup;
  setup.ppo = cfg.ppo;
  setup.make_env = [env = cfg.env](int) -> std::unique_ptr<ppo::RolloutEnv> {
    return std::make_unique<ppo::ParkourRolloutEnv>(env);
  };
  setup.seed = seed;
  setup.out_dir = out_dir;
  setup.checkpoint_every = cfg.checkpoint_every;
  setup.init_log_std = cfg.init_log_std;
  return setup;
}

/// Cruising start used for the mode dataset: nominal height, command-level
/// forward speed, level base. Keeping one canonical start (and the
/// standardized obstacle placement inside the generator) keeps the modal
/// manifolds low-dimensional enough for the 2-D bottleneck.
lti::Vector cruise_state(const sim::EnvConfig& env) {
  lti::Vector x0 = lti::Vector::Zero(lti::kSrbStateDim);
  x0[lti::kPz] = env.physics.nominal_height;
  x0[lti::kVx] = env.oracle_params.default_cross_v;
  x0[lti::kSrbStateDim - 1] = 1.0;
  return x0;
}

}  // namespace

double EpisodeTrace::total_return() const {
  double s = 0.0;
  for (double r : rewards) s += r;
  return s;
}

double EpisodeTrace::tracking_cost() const {
  double s = 0.0;
  for (double e : tracking_error) s += e;
  return s;
}

double EpisodeTrace::max_heading_speed() const {
  double m = 0.0;
  for (double v : heading_speed) m = std::max(m, v);
  return m;
}

double EpisodeTrace::max_heading_accel() const {
  double m = 0.0;
  for (double a : heading_accel) m = std::max(m, std::abs(a));
  return m;
}

void EpisodeTrace::validate() const {
  const std::size_t n = rewards.size();
  require(heading_speed.size() == n && heading_accel.size() == n &&
              tracking_error.size() == n,
          ErrorCode::LengthMismatch,
          "episode trace series must share one length");
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(rewards[i]) && std::isfinite(heading_speed[i]) &&
                std::isfinite(heading_accel[i]) &&
                std::isfinite(tracking_error[i]),
            ErrorCode::NaNDetected, "episode trace contains non-finite values");
  }
  require(std::isfinite(final_p_x), ErrorCode::NaNDetected,
          "episode trace contains non-finite values");
}

MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces,
                              const sim::PhysicsConfig& physics,
                              long time_limit) {
  require(!traces.empty(), ErrorCode::EmptyInput,
          "metrics need at least one episode");
  require(time_limit > 0, ErrorCode::InvalidArgument,
          "time limit must be positive");
  physics.validate();

  MetricsReport rep;
  const double n = static_cast<double>(traces.size());
  for (const EpisodeTrace& tr : traces) {
    tr.validate();
    rep.max_heading_accel_g += tr.max_heading_accel() / physics.srb.gravity;
    rep.max_heading_speed += tr.max_heading_speed();
    rep.episode_length_frac +=
        static_cast<double>(tr.steps()) / static_cast<double>(time_limit);
    rep.mean_return += tr.total_return();
    rep.j_tilde += -tr.tracking_cost();
    rep.j_true += tr.final_p_x;
    rep.rho_term_frac += tr.termination == sim::Termination::kRhoViolation;
    rep.fall_frac += tr.termination == sim::Termination::kFall;
    rep.timeout_frac += tr.termination == sim::Termination::kTimeLimit;
  }
  rep.max_heading_accel_g /= n;
  rep.max_heading_speed /= n;
  rep.episode_length_frac /= n;
  rep.mean_return /= n;
  rep.j_tilde /= n;
  rep.j_true /= n;
  rep.rho_term_frac /= n;
  rep.fall_frac /= n;
  rep.timeout_frac /= n;
  rep.froude = rep.max_heading_speed * rep.max_heading_speed /
               (physics.srb.gravity * physics.srb.leg_length);
  return rep;
}

void EvalOptions::validate() const {
  require(n_episodes > 0, ErrorCode::EmptyInput,
          "evaluation needs at least one episode");
}

EvalResult evaluate_policy(const nn::GaussianPolicy& policy,
                           const sim::EnvConfig& env_config,
                           const EvalOptions& options) {
  options.validate();
  policy.validate();
  env_config.validate();

  sim::ParkourEnv env(env_config);
  require(policy.obs_dim() == env.obs_dim(), ErrorCode::DimensionMismatch,
          "policy input size does not match the environment observation");
  require(policy.action_dim() == sim::kActionDim, ErrorCode::DimensionMismatch,
          "policy output size does not match the environment action");

  EvalResult result;
  result.traces.reserve(static_cast<std::size_t>(options.n_episodes));
  for (int ep = 0; ep < options.n_episodes; ++ep) {
    RngStream seed_stream = RngStream(options.seed)
                                .substream(kEvalEnvBlock +
                                           static_cast<std::uint64_t>(ep));
    RngStream action_rng = RngStream(options.seed)
                               .substream(kEvalActionBlock +
                                          static_cast<std::uint64_t>(ep));
    EpisodeTrace tr;
    tr.env_seed = seed_stream.next_u64();
    lti::Vector obs = env.reset(tr.env_seed);
    while (true) {
      lti::Vector a = options.mean_action
                          ? nn::forward(policy.mean, obs)
                          : nn::sample(policy, obs, action_rng).action;
      sim::StepResult r = env.step(sim::Action::from_vector(a));
      tr.rewards.push_back(r.reward);
      tr.heading_speed.push_back(r.info.heading_speed);
      tr.heading_accel.push_back(r.info.heading_accel);
      tr.tracking_error.push_back(r.info.tracking_error);
      tr.final_p_x = r.info.p_x;
      obs = r.observation;
      if (r.termination != sim::Termination::kNone) {
        tr.termination = r.termination;
        break;
      }
      require(tr.steps() <= env_config.time_limit + 1,
              ErrorCode::InternalSolverFailure,
              "episode ran past the time limit without terminating");
    }
    result.traces.push_back(std::move(tr));
  }
  result.report =
      compute_metrics(result.traces, env_config.physics, env_config.time_limit);
  return result;
}

EvalResult eval_policy(const std::string& checkpoint_path,
                       const sim::EnvConfig& env_config,
                       const EvalOptions& options) {
  ppo::PolicyCheckpoint ckpt = ppo::load_policy_checkpoint(checkpoint_path);
  return evaluate_policy(ckpt.policy, env_config, options);
}

void write_eval_csv(const std::string& path,
                    const std::vector<EpisodeTrace>& traces) {
  std::ofstream out = open_out(path);
  out << "episode,env_seed,steps,total_return,final_p_x,cum_tracking_error,"
         "max_heading_speed,max_heading_accel,termination\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const EpisodeTrace& tr = traces[i];
    out << i << ',' << tr.env_seed << ',' << tr.steps() << ','
        << format_double(tr.total_return()) << ','
        << format_double(tr.final_p_x) << ','
        << format_double(tr.tracking_cost()) << ','
        << format_double(tr.max_heading_speed()) << ','
        << format_double(tr.max_heading_accel()) << ','
        << sim::termination_name(tr.termination) << '\n';
  }
  finish_out(out, path);
}

void write_report_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out = open_out(path);
  out << "max_heading_accel_g,max_heading_speed,froude,episode_length_frac,"
         "mean_return,j_tilde,j_true,rho_term_frac,fall_frac,timeout_frac\n";
  out << format_double(report.max_heading_accel_g) << ','
      << format_double(report.max_heading_speed) << ','
      << format_double(report.froude) << ','
      << format_double(report.episode_length_frac) << ','
      << format_double(report.mean_return) << ','
      << format_double(report.j_tilde) << ','
      << format_double(report.j_true) << ','
      << format_double(report.rho_term_frac) << ','
      << format_double(report.fall_frac) << ','
      << format_double(report.timeout_frac) << '\n';
  finish_out(out, path);
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRho:
      return "rho";
    case SweepAxis::kOracle:
      return "oracle";
    case SweepAxis::kHorizon:
      return "horizon";
    case SweepAxis::kObsMask:
      return "obs_mask";
  }
  fail(ErrorCode::InvalidArgument, "unknown sweep axis");
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "rho") return SweepAxis::kRho;
  if (name == "oracle") return SweepAxis::kOracle;
  if (name == "horizon") return SweepAxis::kHorizon;
  if (name == "obs_mask") return SweepAxis::kObsMask;
  fail(ErrorCode::ConfigError,
       "sweep axis must be one of rho, oracle, horizon, obs_mask (got '" +
           name + "')");
}

std::vector<std::string> default_axis_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRho:
      return {"0.05", "0.1", "0.3", "0.5", "0.8", "1e10"};
    case SweepAxis::kOracle:
      return {"li", "lqr", "prev"};
    case SweepAxis::kHorizon:
      return {"7", "15", "30"};
    case SweepAxis::kObsMask:
      return {"z", "z+c", "h", "h+c", "h+z", "h+z+c"};
  }
  fail(ErrorCode::InvalidArgument, "unknown sweep axis");
}

config::RunConfig apply_axis_value(const config::RunConfig& base,
                                   SweepAxis axis, const std::string& value) {
  config::RunConfig cfg = base;
  switch (axis) {
    case SweepAxis::kRho:
      cfg.env.rho = strict_parse_double(value, "rho");
      break;
    case SweepAxis::kOracle:
      cfg.env.oracle_kind =
          oracle::OracleKind::defaults(config::oracle_kind_from_name(value));
      break;
    case SweepAxis::kHorizon: {
      double v = strict_parse_double(value, "horizon");
      require(v > 0 && v == std::floor(v), ErrorCode::ConfigError,
              "sweep axis 'horizon' needs a positive integer (got '" + value +
                  "')");
      cfg.env.horizon_steps = static_cast<int>(v);
      break;
    }
    case SweepAxis::kObsMask:
      cfg.env.mask = parse_mask_token(value);
      break;
  }
  cfg.validate();
  return cfg;
}

SweepResult sweep(const config::RunConfig& base, SweepAxis axis,
                  const std::vector<std::string>& values,
                  const std::string& out_dir) {
  require(!values.empty(), ErrorCode::EmptyInput,
          "sweep needs at least one axis value");
  base.validate();
  require(!out_dir.empty(), ErrorCode::ConfigError,
          "sweep needs an output directory");

  SweepResult result;
  result.axis = axis;
  for (const std::string& value : values) {
    config::RunConfig cfg;
    std::string cfg_error;
    bool cfg_ok = true;
    try {
      cfg = apply_axis_value(base, axis, value);
    } catch (const std::exception& e) {
      cfg_ok = false;
      cfg_error = e.what();
    }
    for (std::uint64_t seed : base.seeds) {
      SweepCell cell;
      cell.value = value;
      cell.seed = seed;
      if (!cfg_ok) {
        cell.error = cfg_error;
        result.cells.push_back(cell);
        continue;
      }
      try {
        const std::string cell_dir = out_dir + "/" + sweep_axis_name(axis) +
                                     "_" + sanitize_token(value) + "/seed" +
                                     std::to_string(seed);
        ppo::TrainResult trained =
            ppo::train(make_train_setup(cfg, seed, cell_dir));
        EvalOptions eval_options;
        eval_options.n_episodes = cfg.eval_episodes;
        eval_options.mean_action = cfg.eval_mean_action;
        eval_options.seed = seed;
        EvalResult eval =
            evaluate_policy(trained.policy, cfg.env, eval_options);
        write_eval_csv(cell_dir + "/eval_episodes.csv", eval.traces);
        write_report_csv(cell_dir + "/eval_report.csv", eval.report);
        cell.ok = true;
        cell.report = eval.report;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      result.cells.push_back(cell);
    }
  }
  return result;
}

void write_sweep_csv(const std::string& long_path,
                     const std::string& pivot_path,
                     const SweepResult& result) {
  const char* axis = sweep_axis_name(result.axis);
  std::ofstream out = open_out(long_path);
  out << "axis,value,seed,status,error,mean_return,j_tilde,j_true,"
         "episode_length_frac,max_heading_speed,max_heading_accel_g,froude,"
         "rho_term_frac,fall_frac,timeout_frac\n";
  for (const SweepCell& cell : result.cells) {
    out << axis << ',' << cell.value << ',' << cell.seed << ','
        << (cell.ok ? "ok" : "failed") << ',' << sanitize_message(cell.error);
    if (cell.ok) {
      const MetricsReport& r = cell.report;
      out << ',' << format_double(r.mean_return) << ','
          << format_double(r.j_tilde) << ',' << format_double(r.j_true) << ','
          << format_double(r.episode_length_frac) << ','
          << format_double(r.max_heading_speed) << ','
          << format_double(r.max_heading_accel_g) << ','
          << format_double(r.froude) << ',' << format_double(r.rho_term_frac)
          << ',' << format_double(r.fall_frac) << ','
          << format_double(r.timeout_frac) << '\n';
    } else {
      out << ",,,,,,,,,,\n";
    }
  }
  finish_out(out, long_path);

  // Pivot: one row per value, in first-appearance order.
  std::vector<std::string> order;
  for (const SweepCell& cell : result.cells) {
    if (std::find(order.begin(), order.end(), cell.value) == order.end()) {
      order.push_back(cell.value);
    }
  }
  std::ofstream pivot = open_out(pivot_path);
  pivot << "axis,value,n_ok,n_failed,mean_return_mean,mean_return_std,"
           "j_tilde_mean,j_tilde_std,j_true_mean,j_true_std\n";
  for (const std::string& value : order) {
    std::vector<double> returns, j_tildes, j_trues;
    int n_failed = 0;
    for (const SweepCell& cell : result.cells) {
      if (cell.value != value) continue;
      if (!cell.ok) {
        ++n_failed;
        continue;
      }
      returns.push_back(cell.report.mean_return);
      j_tildes.push_back(cell.report.j_tilde);
      j_trues.push_back(cell.report.j_true);
    }
    auto mean = [](const std::vector<double>& xs) {
      if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
      double s = 0.0;
      for (double x : xs) s += x;
      return s / static_cast<double>(xs.size());
    };
    const double mr = mean(returns), mjt = mean(j_tildes), mj = mean(j_trues);
    pivot << axis << ',' << value << ',' << returns.size() << ',' << n_failed
          << ',' << format_double(mr) << ','
          << format_double(population_std(returns, mr)) << ','
          << format_double(mjt) << ','
          << format_double(population_std(j_tildes, mjt)) << ','
          << format_double(mj) << ','
          << format_double(population_std(j_trues, mj)) << '\n';
  }
  finish_out(pivot, pivot_path);
}

terrain::Track single_obstacle_track(const terrain::ModeSpec& spec,
                                     double offset, double length) {
  require(length > 0 && std::isfinite(length), ErrorCode::InvalidArgument,
          "track length must be positive");
  terrain::Track track;
  track.length = length;
  track.seed = 0;
  if (spec.mode == terrain::Mode::kPace ||
      spec.mode == terrain::Mode::kSettle) {
    track.segments.push_back({terrain::SegmentKind::kFlat, 0.0, length, 0.0,
                              0.0});
    track.validate();
    return track;
  }
  require(spec.mode == terrain::Mode::kJump ||
              spec.mode == terrain::Mode::kLeap,
          ErrorCode::InvalidArgument,
          "single-obstacle tracks support pace, jump, and leap modes");
  require(offset > 0 && spec.a > 0 && offset + spec.a < length,
          ErrorCode::InfeasibleLayout,
          "obstacle does not fit between the start line and the track end");
  track.segments.push_back(
      {terrain::SegmentKind::kFlat, 0.0, offset, 0.0, 0.0});
  if (spec.mode == terrain::Mode::kJump) {
    track.segments.push_back(
        {terrain::SegmentKind::kBlock, offset, spec.a, spec.b, 0.0});
  } else {
    track.segments.push_back(
        {terrain::SegmentKind::kGap, offset, spec.a, 0.0, spec.b});
  }
  track.segments.push_back({terrain::SegmentKind::kFlat, offset + spec.a,
                            length - offset - spec.a, 0.0, 0.0});
  track.validate();
  return track;
}

void GridOptions::validate() const {
  require(cells_a >= 1 && cells_b >= 1, ErrorCode::InvalidArgument,
          "grid needs at least one cell per axis");
  require(episodes_per_cell >= 1, ErrorCode::InvalidArgument,
          "grid needs at least one episode per cell");
  require(obstacle_offset > 0, ErrorCode::InvalidArgument,
          "obstacle offset must be positive");
}

GridResult mode_versatility_grid(const nn::GaussianPolicy& policy,
                                 const sim::EnvConfig& env_config,
                                 terrain::Mode mode,
                                 const GridOptions& options) {
  options.validate();
  require(mode == terrain::Mode::kJump || mode == terrain::Mode::kLeap,
          ErrorCode::InvalidArgument,
          "versatility grid supports jump (blocks) and leap (gaps)");

  const terrain::ModeParamRanges test = env_config.ranges.test_box();
  GridResult result;
  result.mode = mode;
  if (mode == terrain::Mode::kJump) {
    result.a_train = env_config.ranges.jump_w;
    result.b_train = env_config.ranges.jump_h;
  } else {
    result.a_train = env_config.ranges.leap_w;
    result.b_train = env_config.ranges.leap_d;
  }
  const terrain::Interval a_iv =
      mode == terrain::Mode::kJump ? test.jump_w : test.leap_w;
  const terrain::Interval b_iv =
      mode == terrain::Mode::kJump ? test.jump_h : test.leap_d;

  std::uint64_t cell_index = 0;
  for (int ia = 0; ia < options.cells_a; ++ia) {
    const double a = grid_value(a_iv, ia, options.cells_a);
    for (int ib = 0; ib < options.cells_b; ++ib, ++cell_index) {
      const double b = grid_value(b_iv, ib, options.cells_b);
      const terrain::ModeSpec spec = mode == terrain::Mode::kJump
                                         ? terrain::ModeSpec::jump(a, b)
                                         : terrain::ModeSpec::leap(a, b);
      sim::EnvConfig cell_env = env_config;
      cell_env.fixed_track =
          std::make_shared<const terrain::Track>(single_obstacle_track(
              spec, options.obstacle_offset, env_config.track_length));
      RngStream cell_stream = RngStream(options.seed).substream(cell_index);
      EvalOptions eval_options;
      eval_options.n_episodes = options.episodes_per_cell;
      eval_options.mean_action = options.mean_action;
      eval_options.seed = cell_stream.next_u64();
      EvalResult eval = evaluate_policy(policy, cell_env, eval_options);

      GridCell cell;
      cell.spec = spec;
      cell.mean_return = eval.report.mean_return;
      cell.in_training_box =
          result.a_train.contains(a) && result.b_train.contains(b);
      result.cells.push_back(cell);
    }
  }
  return result;
}

void write_grid_csv(const std::string& path, const GridResult& result) {
  std::ofstream out = open_out(path);
  out << "mode,a,b,mean_return,in_training_box,a_train_lo,a_train_hi,"
         "b_train_lo,b_train_hi\n";
  for (const GridCell& cell : result.cells) {
    out << terrain::mode_name(cell.spec.mode) << ','
        << format_double(cell.spec.a) << ',' << format_double(cell.spec.b)
        << ',' << format_double(cell.mean_return) << ','
        << (cell.in_training_box ? 1 : 0) << ','
        << format_double(result.a_train.lo) << ','
        << format_double(result.a_train.hi) << ','
        << format_double(result.b_train.lo) << ','
        << format_double(result.b_train.hi) << '\n';
  }
  finish_out(out, path);
}

void write_oracle_viz_csv(const std::string& path,
                          const config::RunConfig& config,
                          const terrain::ModeSpec& spec) {
  config.validate();
  const sim::EnvConfig& env = config.env;
  const oracle::Oracle orc(env.oracle_kind, env.physics.srb,
                           env.oracle_params);

  // Obstacle right ahead of the start, matching the dataset generator's
  // standardized placement, so the export shows what the encoder was fed.
  const double obstacle_offset = 0.2;
  const terrain::Track track =
      single_obstacle_track(spec, obstacle_offset, env.track_length);
  const double command_v = spec.mode == terrain::Mode::kPace
                               ? spec.a
                               : env.oracle_params.default_cross_v;

  oracle::OracleQuery query;
  query.x_t = cruise_state(env);
  query.mode = spec;
  const double lookahead =
      command_v * env.horizon_steps * env.oracle_params.dt + 2.0;
  query.window = oracle::make_terrain_window(track, 0.0, lookahead);
  query.horizon = env.horizon_steps;
  query.command_v = command_v;
  const oracle::ReferenceTrajectory ref = orc.query(query);

  std::ofstream out = open_out(path);
  out << "step,phase,p_x,p_z,theta,v_x,v_z,omega\n";
  for (std::size_t k = 0; k < ref.states.size(); ++k) {
    const std::size_t phase_idx = std::min(k, ref.phases.size() - 1);
    const char* phase =
        ref.phases[phase_idx] == oracle::Phase::kFlight ? "flight" : "contact";
    const lti::Vector& x = ref.states[k];
    out << k << ',' << phase << ',' << format_double(x[lti::kPx]) << ','
        << format_double(x[lti::kPz]) << ',' << format_double(x[lti::kTheta])
        << ',' << format_double(x[lti::kVx]) << ','
        << format_double(x[lti::kVz]) << ',' << format_double(x[lti::kOmega])
        << '\n';
  }
  finish_out(out, path);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure, "cannot open for hashing: " + path);
  std::uint64_t hash = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
  }
  require(in.eof() && !in.bad(), ErrorCode::IoFailure,
          "failed reading for hashing: " + path);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

std::string write_manifest(const std::string& dir) {
  require(fs::is_directory(dir), ErrorCode::IoFailure,
          "manifest target is not a directory: " + dir);
  std::vector<std::string> paths;
  for (const fs::directory_entry& entry :
       fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());

  nlohmann::ordered_json manifest;
  manifest["artifacts"] = nlohmann::ordered_json::object();
  for (const std::string& rel : paths) {
    manifest["artifacts"][rel] = file_hash_hex(dir + "/" + rel);
  }
  const std::string manifest_path = dir + "/manifest.json";
  std::ofstream out = open_out(manifest_path);
  out << manifest.dump(2) << '\n';
  finish_out(out, manifest_path);
  return manifest_path;
}

ExperimentResult run_experiment(const config::RunConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);

  {
    std::ofstream out = open_out(config.out_dir + "/resolved_config.json");
    out << config::resolved_config_json(config);
    finish_out(out, config.out_dir + "/resolved_config.json");
  }

  const oracle::Oracle orc(config.env.oracle_kind, config.env.physics.srb,
                           config.env.oracle_params);
  const std::vector<lti::Vector> starts = {cruise_state(config.env)};
  const dataset::Dataset data = dataset::generate_mode_dataset(
      orc, config.env.ranges, starts, config.dataset_n_per_mode,
      config.env.horizon_steps, config.derived_seed(kDatasetStage));
  dataset::write_dataset_csv(data, config.out_dir + "/dataset.csv",
                             config.env.ranges);

  const encoder::EncoderTraining enc = encoder::train_encoder(
      data, config.encoder_hyper, config.derived_seed(kEncoderStage));
  encoder::save_encoder(config.out_dir + "/encoder.bin", enc.params);
  encoder::write_latent_csv(config.out_dir + "/latent.csv",
                            encoder::encode_dataset(enc.params, data));

  ExperimentResult result;
  result.out_dir = config.out_dir;
  std::ofstream summary = open_out(config.out_dir + "/summary.csv");
  summary << "seed,mean_return,j_tilde,j_true,episode_length_frac,"
             "max_heading_speed,max_heading_accel_g,froude,encoder_holdout_"
             "rmse\n";
  for (std::uint64_t seed : config.seeds) {
    const std::string seed_dir =
        config.out_dir + "/seed" + std::to_string(seed);
    ppo::TrainResult trained =
        ppo::train(make_train_setup(config, seed, seed_dir));
    EvalOptions eval_options;
    eval_options.n_episodes = config.eval_episodes;
    eval_options.mean_action = config.eval_mean_action;
    eval_options.seed = seed;
    EvalResult eval = evaluate_policy(trained.policy, config.env, eval_options);
    write_eval_csv(seed_dir + "/eval_episodes.csv", eval.traces);
    write_report_csv(seed_dir + "/eval_report.csv", eval.report);
    result.reports.push_back(eval.report);
    summary << seed << ',' << format_double(eval.report.mean_return) << ','
            << format_double(eval.report.j_tilde) << ','
            << format_double(eval.report.j_true) << ','
            << format_double(eval.report.episode_length_frac) << ','
            << format_double(eval.report.max_heading_speed) << ','
            << format_double(eval.report.max_heading_accel_g) << ','
            << format_double(eval.report.froude) << ','
            << format_double(enc.holdout_rmse) << '\n';
  }
  finish_out(summary, config.out_dir + "/summary.csv");
  result.manifest_path = write_manifest(config.out_dir);
  return result;
}

}  // namespace ogmp::harness
