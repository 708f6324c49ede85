#include "ogmp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "ogmp/error.hpp"
#include "ogmp/rng.hpp"

namespace ogmp::config {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& msg) {
  fail(ErrorCode::ConfigError, msg);
}

/// Wraps one JSON object. Typed reads mark keys as consumed; finish()
/// rejects whatever is left, so a typo raises an error naming the field
/// instead of silently falling back to a default.
class Section {
 public:
  Section(const json& node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) {
      config_fail("field '" + path_ + "' must be an object");
    }
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const char* key) const { return node_.contains(key); }

  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) {
        config_fail("field '" + key_path(key) + "' must be a number");
      }
      out = v->get<double>();
    }
  }

  void read(const char* key, int& out) {
    long wide = out;
    read(key, wide);
    out = static_cast<int>(wide);
  }

  void read(const char* key, long& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) {
        config_fail("field '" + key_path(key) + "' must be an integer");
      }
      out = v->get<long>();
    }
  }

  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) {
        config_fail("field '" + key_path(key) + "' must be a boolean");
      }
      out = v->get<bool>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) {
        config_fail("field '" + key_path(key) + "' must be a string");
      }
      out = v->get<std::string>();
    }
  }

  void read_seeds(const char* key, std::vector<std::uint64_t>& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) {
      config_fail("field '" + key_path(key) +
                  "' must be a non-empty array of seeds");
    }
    out.clear();
    for (const auto& e : *v) {
      if (e.is_number_unsigned()) {
        out.push_back(e.get<std::uint64_t>());
      } else if (e.is_number_integer() && e.get<long long>() >= 0) {
        out.push_back(static_cast<std::uint64_t>(e.get<long long>()));
      } else {
        config_fail("field '" + key_path(key) +
                    "' must contain non-negative integers");
      }
    }
  }

  void read_interval(const char* key, terrain::Interval& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() ||
        !(*v)[1].is_number()) {
      config_fail("field '" + key_path(key) + "' must be an array [lo, hi]");
    }
    out.lo = (*v)[0].get<double>();
    out.hi = (*v)[1].get<double>();
  }

  Eigen::VectorXd read_vector(const char* key, long expected) {
    const json* v = take(key);
    require(v != nullptr, ErrorCode::ConfigError,
            "missing field '" + key_path(key) + "'");
    if (!v->is_array() || static_cast<long>(v->size()) != expected) {
      config_fail("field '" + key_path(key) + "' must be an array of " +
                  std::to_string(expected) + " numbers");
    }
    Eigen::VectorXd out(expected);
    for (long i = 0; i < expected; ++i) {
      if (!(*v)[i].is_number()) {
        config_fail("field '" + key_path(key) + "' must be an array of " +
                    std::to_string(expected) + " numbers");
      }
      out[i] = (*v)[i].get<double>();
    }
    return out;
  }

  Section child(const char* key) {
    const json* v = take(key);
    require(v != nullptr, ErrorCode::ConfigError,
            "missing field '" + key_path(key) + "'");
    return Section(*v, key_path(key));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (consumed_.find(it.key()) == consumed_.end()) {
        config_fail("unknown field '" + key_path(it.key()) + "'");
      }
    }
  }

 private:
  const json* take(const char* key) {
    auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    consumed_.insert(key);
    return &*it;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> consumed_;
};

void parse_physics(Section parent, sim::PhysicsConfig& p) {
  parent.read("mass", p.srb.mass);
  parent.read("inertia", p.srb.inertia);
  parent.read("gravity", p.srb.gravity);
  parent.read("leg_length", p.srb.leg_length);
  parent.read("control_dt", p.control_dt);
  parent.read("substeps", p.substeps);
  parent.read("friction_mu", p.friction_mu);
  parent.read("nominal_height", p.nominal_height);
  parent.read("hip_drop", p.hip_drop);
  parent.read("stance_half_width", p.stance_half_width);
  parent.read("fz_max_factor", p.fz_max_factor);
  parent.read("fx_max_factor", p.fx_max_factor);
  parent.read("tau_max", p.tau_max);
  parent.read("swing_range", p.swing_range);
  parent.read("swing_time_constant", p.swing_time_constant);
  parent.read("release_threshold", p.release_threshold);
  parent.read("base_scrape_clearance", p.base_scrape_clearance);
  parent.finish();
}

void parse_ranges(Section sec, terrain::ModeParamRanges& r) {
  sec.read_interval("pace_v", r.pace_v);
  sec.read_interval("jump_w", r.jump_w);
  sec.read_interval("jump_h", r.jump_h);
  sec.read_interval("leap_w", r.leap_w);
  sec.read_interval("leap_d", r.leap_d);
  sec.read_interval("flip_r", r.flip_r);
  sec.read_interval("flip_h", r.flip_h);
  sec.read("test_dilation", r.test_dilation);
  sec.finish();
}

void parse_oracle(Section sec, oracle::OracleKind& kind) {
  std::string name = oracle::oracle_kind_name(kind.id);
  sec.read("kind", name);
  oracle::OracleKind parsed = oracle::OracleKind::defaults(
      oracle_kind_from_name(name));
  if (sec.has("q_x_diag")) {
    parsed.Q_x = sec.read_vector("q_x_diag", lti::kSrbCoreDim).asDiagonal();
  }
  if (sec.has("r_diag")) {
    parsed.R = sec.read_vector("r_diag", lti::kSrbCoreDim).asDiagonal();
  }
  sec.read("q_e", parsed.Q_e);
  sec.read("preview_window", parsed.preview_window);
  sec.finish();
  kind = parsed;
}

void parse_oracle_params(Section sec, oracle::OracleParams& p) {
  sec.read("crouch_depth", p.crouch_depth);
  sec.read("crouch_steps", p.crouch_steps);
  sec.read("clearance_margin", p.clearance_margin);
  sec.read("blend_steps", p.blend_steps);
  sec.read("step_threshold", p.step_threshold);
  sec.read("default_cross_v", p.default_cross_v);
  sec.read("max_preview", p.max_preview);
  sec.finish();
}

void parse_env(Section sec, sim::EnvConfig& env) {
  sec.read("rho", env.rho);
  if (sec.has("W")) {
    env.W.w = sec.read_vector("W", lti::kSrbStateDim);
  }
  sec.read("horizon_steps", env.horizon_steps);
  sec.read("time_limit", env.time_limit);
  if (sec.has("obs_mask")) {
    Section m = sec.child("obs_mask");
    m.read("proprioception", env.mask.proprioception);
    m.read("latent", env.mask.latent);
    m.read("clock", env.mask.clock);
    m.read("scan", env.mask.scan);
    m.finish();
  }
  sec.read("scan_span", env.scan_span);
  sec.read("lookahead", env.lookahead);
  sec.read("command_v", env.command_v);
  sec.read("fall_height", env.fall_height);
  sec.read("track_length", env.track_length);
  sec.read("obstacle_density", env.obstacle_density);
  sec.read("frame_stack", env.frame_stack);
  sec.finish();
}

void parse_ppo(Section sec, RunConfig& cfg) {
  sec.read("gamma", cfg.ppo.gamma);
  sec.read("lam", cfg.ppo.lam);
  sec.read("clip", cfg.ppo.clip);
  sec.read("epochs", cfg.ppo.epochs);
  sec.read("minibatch", cfg.ppo.minibatch);
  sec.read("value_coef", cfg.ppo.value_coef);
  sec.read("entropy_coef", cfg.ppo.entropy_coef);
  sec.read("lr", cfg.ppo.lr);
  sec.read("total_steps", cfg.ppo.total_steps);
  sec.read("n_envs", cfg.ppo.n_envs);
  sec.read("steps_per_env", cfg.ppo.steps_per_env);
  sec.read("init_log_std", cfg.init_log_std);
  sec.read("checkpoint_every", cfg.checkpoint_every);
  sec.finish();
}

void parse_encoder(Section sec, encoder::EncoderHyper& h) {
  sec.read("hidden", h.hidden);
  sec.read("epochs", h.epochs);
  sec.read("minibatch", h.minibatch);
  sec.read("lr", h.lr);
  sec.read("holdout_fraction", h.holdout_fraction);
  sec.finish();
}

ordered_json interval_json(const terrain::Interval& iv) {
  return ordered_json::array({iv.lo, iv.hi});
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json diagonal_json(const Eigen::MatrixXd& m) {
  ordered_json out = ordered_json::array();
  for (long i = 0; i < m.rows(); ++i) out.push_back(m(i, i));
  return out;
}

}  // namespace

void RunConfig::validate() const {
  require(!out_dir.empty(), ErrorCode::ConfigError,
          "field 'out_dir' must be a non-empty path");
  require(!seeds.empty(), ErrorCode::ConfigError,
          "field 'seeds' must list at least one seed");
  require(eval_episodes >= 0, ErrorCode::ConfigError,
          "field 'eval.n_episodes' must be non-negative");
  require(dataset_n_per_mode >= 1, ErrorCode::ConfigError,
          "field 'dataset.n_per_mode' must be positive");
  require(checkpoint_every >= 0, ErrorCode::ConfigError,
          "field 'ppo.checkpoint_every' must be non-negative");
  require(std::isfinite(init_log_std), ErrorCode::ConfigError,
          "field 'ppo.init_log_std' must be finite");
  env.validate();
  ppo.validate();
  encoder_hyper.validate();
}

std::uint64_t RunConfig::derived_seed(std::uint64_t stage) const {
  require(!seeds.empty(), ErrorCode::ConfigError,
          "field 'seeds' must list at least one seed");
  RngStream stream = RngStream(seeds.front()).substream(stage);
  return stream.next_u64();
}

oracle::OracleKindId oracle_kind_from_name(const std::string& name) {
  if (name == "li") return oracle::OracleKindId::kLinearInterp;
  if (name == "lqr") return oracle::OracleKindId::kLqr;
  if (name == "prev") return oracle::OracleKindId::kPreview;
  config_fail("field 'oracle.kind' must be one of \"li\", \"lqr\", "
              "\"prev\" (got \"" + name + "\")");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) config_fail("input is not valid JSON");
  if (!root.is_object()) config_fail("top-level config must be a JSON object");

  RunConfig cfg;
  cfg.env = sim::EnvConfig::defaults();

  Section sec(root, "");
  require(sec.has("out_dir"), ErrorCode::ConfigError,
          "missing required field 'out_dir'");
  sec.read("out_dir", cfg.out_dir);
  require(sec.has("seeds"), ErrorCode::ConfigError,
          "missing required field 'seeds'");
  sec.read_seeds("seeds", cfg.seeds);

  if (sec.has("physics")) parse_physics(sec.child("physics"), cfg.env.physics);
  if (sec.has("ranges")) parse_ranges(sec.child("ranges"), cfg.env.ranges);
  if (sec.has("oracle")) parse_oracle(sec.child("oracle"), cfg.env.oracle_kind);
  if (sec.has("oracle_params")) {
    parse_oracle_params(sec.child("oracle_params"), cfg.env.oracle_params);
  }
  if (sec.has("env")) parse_env(sec.child("env"), cfg.env);
  if (sec.has("ppo")) parse_ppo(sec.child("ppo"), cfg);
  if (sec.has("eval")) {
    Section e = sec.child("eval");
    e.read("n_episodes", cfg.eval_episodes);
    e.read("mean_action", cfg.eval_mean_action);
    e.finish();
  }
  if (sec.has("dataset")) {
    Section d = sec.child("dataset");
    d.read("n_per_mode", cfg.dataset_n_per_mode);
    d.finish();
  }
  if (sec.has("encoder")) parse_encoder(sec.child("encoder"), cfg.encoder_hyper);
  sec.finish();

  // The oracle plans at the control rate about the simulator's nominal
  // height; these are a single source of truth, not independent knobs.
  cfg.env.oracle_params.dt = cfg.env.physics.control_dt;
  cfg.env.oracle_params.nominal_height = cfg.env.physics.nominal_height;

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure,
          "cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  require(!in.bad(), ErrorCode::IoFailure, "cannot read config file: " + path);
  return parse_run_config(text.str());
}

std::string resolved_config_json(const RunConfig& config) {
  const sim::EnvConfig& env = config.env;
  ordered_json root;
  root["out_dir"] = config.out_dir;
  root["seeds"] = config.seeds;

  ordered_json physics;
  physics["mass"] = env.physics.srb.mass;
  physics["inertia"] = env.physics.srb.inertia;
  physics["gravity"] = env.physics.srb.gravity;
  physics["leg_length"] = env.physics.srb.leg_length;
  physics["control_dt"] = env.physics.control_dt;
  physics["substeps"] = env.physics.substeps;
  physics["friction_mu"] = env.physics.friction_mu;
  physics["nominal_height"] = env.physics.nominal_height;
  physics["hip_drop"] = env.physics.hip_drop;
  physics["stance_half_width"] = env.physics.stance_half_width;
  physics["fz_max_factor"] = env.physics.fz_max_factor;
  physics["fx_max_factor"] = env.physics.fx_max_factor;
  physics["tau_max"] = env.physics.tau_max;
  physics["swing_range"] = env.physics.swing_range;
  physics["swing_time_constant"] = env.physics.swing_time_constant;
  physics["release_threshold"] = env.physics.release_threshold;
  physics["base_scrape_clearance"] = env.physics.base_scrape_clearance;
  root["physics"] = physics;

  ordered_json ranges;
  ranges["pace_v"] = interval_json(env.ranges.pace_v);
  ranges["jump_w"] = interval_json(env.ranges.jump_w);
  ranges["jump_h"] = interval_json(env.ranges.jump_h);
  ranges["leap_w"] = interval_json(env.ranges.leap_w);
  ranges["leap_d"] = interval_json(env.ranges.leap_d);
  ranges["flip_r"] = interval_json(env.ranges.flip_r);
  ranges["flip_h"] = interval_json(env.ranges.flip_h);
  ranges["test_dilation"] = env.ranges.test_dilation;
  root["ranges"] = ranges;

  ordered_json oracle_obj;
  oracle_obj["kind"] = oracle::oracle_kind_name(env.oracle_kind.id);
  oracle_obj["q_x_diag"] = diagonal_json(env.oracle_kind.Q_x);
  oracle_obj["r_diag"] = diagonal_json(env.oracle_kind.R);
  oracle_obj["q_e"] = env.oracle_kind.Q_e;
  oracle_obj["preview_window"] = env.oracle_kind.preview_window;
  root["oracle"] = oracle_obj;

  ordered_json oracle_params;
  oracle_params["crouch_depth"] = env.oracle_params.crouch_depth;
  oracle_params["crouch_steps"] = env.oracle_params.crouch_steps;
  oracle_params["clearance_margin"] = env.oracle_params.clearance_margin;
  oracle_params["blend_steps"] = env.oracle_params.blend_steps;
  oracle_params["step_threshold"] = env.oracle_params.step_threshold;
  oracle_params["default_cross_v"] = env.oracle_params.default_cross_v;
  oracle_params["max_preview"] = env.oracle_params.max_preview;
  root["oracle_params"] = oracle_params;

  ordered_json env_obj;
  env_obj["rho"] = env.rho;
  env_obj["W"] = vector_json(env.W.w);
  env_obj["horizon_steps"] = env.horizon_steps;
  env_obj["time_limit"] = env.time_limit;
  ordered_json mask;
  mask["proprioception"] = env.mask.proprioception;
  mask["latent"] = env.mask.latent;
  mask["clock"] = env.mask.clock;
  mask["scan"] = env.mask.scan;
  env_obj["obs_mask"] = mask;
  env_obj["scan_span"] = env.scan_span;
  env_obj["lookahead"] = env.lookahead;
  env_obj["command_v"] = env.command_v;
  env_obj["fall_height"] = env.fall_height;
  env_obj["track_length"] = env.track_length;
  env_obj["obstacle_density"] = env.obstacle_density;
  env_obj["frame_stack"] = env.frame_stack;
  root["env"] = env_obj;

  ordered_json ppo;
  ppo["gamma"] = config.ppo.gamma;
  ppo["lam"] = config.ppo.lam;
  ppo["clip"] = config.ppo.clip;
  ppo["epochs"] = config.ppo.epochs;
  ppo["minibatch"] = config.ppo.minibatch;
  ppo["value_coef"] = config.ppo.value_coef;
  ppo["entropy_coef"] = config.ppo.entropy_coef;
  ppo["lr"] = config.ppo.lr;
  ppo["total_steps"] = config.ppo.total_steps;
  ppo["n_envs"] = config.ppo.n_envs;
  ppo["steps_per_env"] = config.ppo.steps_per_env;
  ppo["init_log_std"] = config.init_log_std;
  ppo["checkpoint_every"] = config.checkpoint_every;
  root["ppo"] = ppo;

  ordered_json eval;
  eval["n_episodes"] = config.eval_episodes;
  eval["mean_action"] = config.eval_mean_action;
  root["eval"] = eval;

  ordered_json dataset_obj;
  dataset_obj["n_per_mode"] = config.dataset_n_per_mode;
  root["dataset"] = dataset_obj;

  ordered_json enc;
  enc["hidden"] = config.encoder_hyper.hidden;
  enc["epochs"] = config.encoder_hyper.epochs;
  enc["minibatch"] = config.encoder_hyper.minibatch;
  enc["lr"] = config.encoder_hyper.lr;
  enc["holdout_fraction"] = config.encoder_hyper.holdout_fraction;
  root["encoder"] = enc;

  return root.dump(2) + "\n";
}

}  // namespace ogmp::config
