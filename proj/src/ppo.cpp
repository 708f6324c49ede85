#include "ogmp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <utility>

namespace ogmp::ppo {

namespace {

bool true_terminal(sim::Termination kind) {
  return kind == sim::Termination::kRhoViolation ||
         kind == sim::Termination::kFall;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EnvStep ParkourRolloutEnv::step(const Vector& action) {
  sim::StepResult r = env_.step(sim::Action::from_vector(action));
  EnvStep out;
  out.observation = std::move(r.observation);
  out.reward = r.reward;
  out.termination = r.termination;
  out.progress = r.info.p_x;
  out.tracking_error = r.info.tracking_error;
  return out;
}

void PpoConfig::validate() const {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::InvalidArgument,
          "gamma must lie in [0, 1]");
  require(lam >= 0.0 && lam <= 1.0, ErrorCode::InvalidArgument,
          "lambda must lie in [0, 1]");
  require(clip > 0.0, ErrorCode::InvalidArgument, "clip must be positive");
  require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be >= 1");
  require(minibatch >= 1, ErrorCode::InvalidArgument,
          "minibatch must be >= 1");
  require(value_coef >= 0.0 && entropy_coef >= 0.0,
          ErrorCode::InvalidArgument, "loss coefficients must be >= 0");
  require(lr > 0.0, ErrorCode::InvalidArgument, "lr must be positive");
  require(total_steps >= 1, ErrorCode::InvalidArgument,
          "total_steps must be >= 1");
  require(n_envs >= 1, ErrorCode::InvalidArgument, "n_envs must be >= 1");
  require(steps_per_env >= 1, ErrorCode::InvalidArgument,
          "steps_per_env must be >= 1");
}

void RolloutBatch::validate() const {
  require(n_envs >= 1 && steps_per_env >= 1, ErrorCode::InvalidArgument,
          "batch dimensions must be positive");
  const long n = static_cast<long>(n_envs) * steps_per_env;
  require(size() == n, ErrorCode::LengthMismatch,
          "transition count does not match n_envs * steps_per_env");
  require(static_cast<long>(observations.size()) == n &&
              static_cast<long>(actions.size()) == n &&
              static_cast<long>(logps.size()) == n &&
              static_cast<long>(values.size()) == n &&
              static_cast<long>(terminations.size()) == n,
          ErrorCode::LengthMismatch, "parallel transition arrays disagree");
  require(run_begin.size() == run_end.size() &&
              run_begin.size() == run_bootstrap.size(),
          ErrorCode::LengthMismatch, "run arrays disagree");
  require(!run_begin.empty(), ErrorCode::EmptyInput, "batch records no runs");
  long cursor = 0;
  for (std::size_t r = 0; r < run_begin.size(); ++r) {
    require(run_begin[r] == cursor, ErrorCode::InvalidArgument,
            "runs must tile the batch contiguously");
    require(run_end[r] > run_begin[r] && run_end[r] <= n,
            ErrorCode::InvalidArgument, "run bounds out of order");
    cursor = run_end[r];
  }
  require(cursor == n, ErrorCode::InvalidArgument,
          "runs must cover every transition");
}

GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      double bootstrap_value,
                      const std::vector<sim::Termination>& kinds,
                      double gamma, double lam) {
  require(!rewards.empty(), ErrorCode::EmptyInput, "empty reward sequence");
  require(rewards.size() == values.size() && rewards.size() == kinds.size(),
          ErrorCode::LengthMismatch,
          "rewards, values, and termination kinds must align");
  const long n = static_cast<long>(rewards.size());
  for (long t = 0; t + 1 < n; ++t) {
    require(kinds[t] == sim::Termination::kNone, ErrorCode::InvalidArgument,
            "only the final step of a run may terminate");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double carry = 0.0;
  for (long t = n - 1; t >= 0; --t) {
    const bool last = (t == n - 1);
    const double next_value =
        last ? (true_terminal(kinds[t]) ? 0.0 : bootstrap_value)
             : values[t + 1];
    const double delta = rewards[t] + gamma * next_value - values[t];
    carry = delta + (last ? 0.0 : gamma * lam * carry);
    out.advantages[t] = carry;
    out.returns[t] = carry + values[t];
  }
  return out;
}

void finish_gae(RolloutBatch& batch, double gamma, double lam) {
  batch.validate();
  const long n = batch.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);
  for (std::size_t r = 0; r < batch.run_begin.size(); ++r) {
    const long b = batch.run_begin[r];
    const long e = batch.run_end[r];
    std::vector<double> rewards(batch.rewards.begin() + b,
                                batch.rewards.begin() + e);
    std::vector<double> values(batch.values.begin() + b,
                               batch.values.begin() + e);
    std::vector<sim::Termination> kinds(batch.terminations.begin() + b,
                                        batch.terminations.begin() + e);
    GaeResult g = compute_gae(rewards, values, batch.run_bootstrap[r], kinds,
                              gamma, lam);
    std::copy(g.advantages.begin(), g.advantages.end(),
              batch.advantages.begin() + b);
    std::copy(g.returns.begin(), g.returns.end(), batch.returns.begin() + b);
  }
}

void normalize_advantages(RolloutBatch& batch) {
  require(static_cast<long>(batch.advantages.size()) == batch.size() &&
              batch.size() > 0,
          ErrorCode::InvalidArgument,
          "advantages not computed; run finish_gae first");
  const long n = batch.size();
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double scale = 1.0 / std::max(std::sqrt(var), 1e-8);
  for (double& a : batch.advantages) a = (a - mean) * scale;
}

PpoStats ppo_loss(const RolloutBatch& batch, const std::vector<long>& idx,
                  const nn::GaussianPolicy& policy,
                  const nn::MlpParams& value_net, const PpoConfig& cfg,
                  Vector* mean_grad, Vector* log_std_grad,
                  Vector* value_grad) {
  require(!idx.empty(), ErrorCode::EmptyInput, "empty minibatch");
  require(static_cast<long>(batch.advantages.size()) == batch.size() &&
              static_cast<long>(batch.returns.size()) == batch.size(),
          ErrorCode::InvalidArgument,
          "advantages/returns not computed; run finish_gae first");
  policy.validate();
  value_net.validate();
  require(value_net.output_dim() == 1, ErrorCode::DimensionMismatch,
          "value network must produce a scalar");
  const double n = static_cast<double>(idx.size());
  if (mean_grad != nullptr) {
    mean_grad->setZero(policy.mean.flat.size());
  }
  if (log_std_grad != nullptr) {
    log_std_grad->setZero(policy.log_std.size());
  }
  if (value_grad != nullptr) {
    value_grad->setZero(value_net.flat.size());
  }
  PpoStats stats;
  double policy_sum = 0.0;
  double value_sum = 0.0;
  double kl_sum = 0.0;
  long clipped = 0;
  for (long i : idx) {
    require(i >= 0 && i < batch.size(), ErrorCode::OutOfRange,
            "minibatch index outside the batch");
    const Vector& obs = batch.observations[i];
    const Vector& act = batch.actions[i];
    nn::PolicyLogpGrad plg = nn::policy_logp_grad(policy, obs, act);
    const double ratio = std::exp(plg.logp - batch.logps[i]);
    require(std::isfinite(ratio), ErrorCode::NaNDetected,
            "non-finite probability ratio");
    const double adv = batch.advantages[i];
    const double surr1 = ratio * adv;
    const double clipped_ratio =
        std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double surr2 = clipped_ratio * adv;
    policy_sum += -std::min(surr1, surr2);
    // Gradient flows through logp only on the unclipped branch (ties
    // included), matching the subgradient of -min(surr1, surr2).
    const double logp_coef = (surr1 <= surr2) ? -adv * ratio : 0.0;
    if (mean_grad != nullptr) {
      mean_grad->noalias() += logp_coef * plg.mean_param_grads;
    }
    if (log_std_grad != nullptr) {
      log_std_grad->noalias() += logp_coef * plg.log_std_grads;
    }
    if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;
    kl_sum += batch.logps[i] - plg.logp;

    const double v = nn::forward(value_net, obs)(0);
    require(std::isfinite(v), ErrorCode::NaNDetected,
            "non-finite value prediction");
    const double err = v - batch.returns[i];
    value_sum += err * err;
    if (value_grad != nullptr) {
      Vector upstream(1);
      upstream(0) = cfg.value_coef * 2.0 * err;
      nn::Gradients g = nn::backward(value_net, obs, upstream);
      value_grad->noalias() += g.param_grads;
    }
  }
  if (mean_grad != nullptr) *mean_grad /= n;
  if (log_std_grad != nullptr) {
    *log_std_grad /= n;
    log_std_grad->array() -= cfg.entropy_coef;
  }
  if (value_grad != nullptr) *value_grad /= n;
  stats.policy_loss = policy_sum / n;
  stats.value_loss = value_sum / n;
  stats.entropy = nn::gaussian_entropy(policy);
  stats.clip_fraction = static_cast<double>(clipped) / n;
  stats.approx_kl = kl_sum / n;
  stats.loss = stats.policy_loss + cfg.value_coef * stats.value_loss -
               cfg.entropy_coef * stats.entropy;
  require(std::isfinite(stats.loss), ErrorCode::NaNDetected,
          "non-finite loss");
  return stats;
}

RolloutBatch collect_rollouts(std::vector<EnvSlot>& slots,
                              const nn::GaussianPolicy& policy,
                              const nn::MlpParams& value_net,
                              int steps_per_env, EpisodeStats* stats) {
  require(!slots.empty(), ErrorCode::EmptyInput, "no environment slots");
  require(steps_per_env >= 1, ErrorCode::InvalidArgument,
          "steps_per_env must be >= 1");
  const int n_envs = static_cast<int>(slots.size());
  RolloutBatch b;
  b.n_envs = n_envs;
  b.steps_per_env = steps_per_env;
  const long total = static_cast<long>(n_envs) * steps_per_env;
  b.observations.resize(total);
  b.actions.resize(total);
  b.logps.assign(total, 0.0);
  b.rewards.assign(total, 0.0);
  b.values.assign(total, 0.0);
  b.terminations.assign(total, sim::Termination::kNone);

  EpisodeStats acc;
  double ret_sum = 0.0;
  double jt_sum = 0.0;
  double jtrue_sum = 0.0;
  for (int e = 0; e < n_envs; ++e) {
    EnvSlot& s = slots[e];
    require(s.env != nullptr, ErrorCode::InvalidArgument,
            "environment slot not initialized");
    require(s.observation.size() == s.env->obs_dim(),
            ErrorCode::DimensionMismatch,
            "slot observation does not match the environment");
    long run_start = b.index(e, 0);
    for (int t = 0; t < steps_per_env; ++t) {
      const long i = b.index(e, t);
      b.observations[i] = s.observation;
      b.values[i] = nn::forward(value_net, s.observation)(0);
      nn::SampleResult sampled =
          nn::sample(policy, s.observation, s.action_stream);
      EnvStep es = s.env->step(sampled.action);
      b.actions[i] = std::move(sampled.action);
      b.logps[i] = sampled.logp;
      b.rewards[i] = es.reward;
      b.terminations[i] = es.termination;
      s.episode_return += es.reward;
      s.episode_tracking += es.tracking_error;
      s.last_progress = es.progress;
      s.episode_steps += 1;

      const bool terminal = es.termination != sim::Termination::kNone;
      if (terminal || t == steps_per_env - 1) {
        double bootstrap = 0.0;
        if (!true_terminal(es.termination)) {
          bootstrap = nn::forward(value_net, es.observation)(0);
        }
        b.run_begin.push_back(run_start);
        b.run_end.push_back(i + 1);
        b.run_bootstrap.push_back(bootstrap);
        run_start = i + 1;
      }
      if (terminal) {
        acc.finished += 1;
        ret_sum += s.episode_return;
        jt_sum += -s.episode_tracking;
        jtrue_sum += s.last_progress - s.start_progress;
        switch (es.termination) {
          case sim::Termination::kRhoViolation:
            acc.rho_terms += 1;
            break;
          case sim::Termination::kFall:
            acc.fall_terms += 1;
            break;
          case sim::Termination::kTimeLimit:
            acc.timeout_terms += 1;
            break;
          case sim::Termination::kNone:
            break;
        }
        s.observation = s.env->reset(s.seed_stream.next_u64());
        s.episode_return = 0.0;
        s.episode_tracking = 0.0;
        s.episode_steps = 0;
        s.start_progress = 0.0;
        s.last_progress = 0.0;
      } else {
        s.observation = std::move(es.observation);
      }
    }
  }
  if (acc.finished > 0) {
    const double n = static_cast<double>(acc.finished);
    acc.mean_return = ret_sum / n;
    acc.mean_j_tilde = jt_sum / n;
    acc.mean_j_true = jtrue_sum / n;
  }
  if (stats != nullptr) *stats = acc;
  return b;
}

void TrainSetup::validate() const {
  ppo.validate();
  require(static_cast<bool>(make_env), ErrorCode::InvalidArgument,
          "environment factory is required");
  require(checkpoint_every >= 0, ErrorCode::InvalidArgument,
          "checkpoint_every must be >= 0");
}

TrainResult train(const TrainSetup& setup) {
  setup.validate();
  const PpoConfig& cfg = setup.ppo;

  std::unique_ptr<RolloutEnv> probe = setup.make_env(0);
  require(probe != nullptr, ErrorCode::InvalidArgument,
          "environment factory returned null");
  const int obs_dim = probe->obs_dim();
  const int act_dim = probe->action_dim();

  std::vector<EnvSlot> slots(cfg.n_envs);
  for (int e = 0; e < cfg.n_envs; ++e) {
    EnvSlot& s = slots[e];
    s.env = (e == 0) ? std::move(probe) : setup.make_env(e);
    require(s.env != nullptr, ErrorCode::InvalidArgument,
            "environment factory returned null");
    require(s.env->obs_dim() == obs_dim && s.env->action_dim() == act_dim,
            ErrorCode::DimensionMismatch,
            "environments disagree on observation or action size");
    s.seed_stream = RngStream(setup.seed).substream(1000 + e);
    s.action_stream = RngStream(setup.seed).substream(2000 + e);
    s.observation = s.env->reset(s.seed_stream.next_u64());
  }

  RngStream policy_rng = RngStream(setup.seed).substream(1);
  nn::GaussianPolicy policy =
      nn::GaussianPolicy::make(obs_dim, act_dim, policy_rng,
                               setup.init_log_std);
  RngStream value_rng = RngStream(setup.seed).substream(2);
  nn::MlpParams value_net = nn::MlpParams::make_default(obs_dim, 1, value_rng);
  RngStream shuffle_rng = RngStream(setup.seed).substream(3);

  nn::AdamState mean_opt =
      nn::AdamState::make(static_cast<int>(policy.mean.flat.size()), cfg.lr);
  nn::AdamState log_std_opt = nn::AdamState::make(act_dim, cfg.lr);
  nn::AdamState value_opt =
      nn::AdamState::make(static_cast<int>(value_net.flat.size()), cfg.lr);

  const long batch_steps =
      static_cast<long>(cfg.n_envs) * cfg.steps_per_env;
  const long iterations = (cfg.total_steps + batch_steps - 1) / batch_steps;
  if (!setup.out_dir.empty()) {
    std::filesystem::create_directories(setup.out_dir);
  }

  TrainResult out;
  long steps_done = 0;
  Vector mean_grad;
  Vector log_std_grad;
  Vector value_grad;
  for (long it = 1; it <= iterations; ++it) {
    EpisodeStats ep;
    RolloutBatch batch =
        collect_rollouts(slots, policy, value_net, cfg.steps_per_env, &ep);
    finish_gae(batch, cfg.gamma, cfg.lam);
    normalize_advantages(batch);
    steps_done += batch.size();

    std::vector<long> order(batch.size());
    std::iota(order.begin(), order.end(), 0L);
    double clip_acc = 0.0;
    double entropy_acc = 0.0;
    long minibatches = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (long i = batch.size() - 1; i > 0; --i) {
        const long j = shuffle_rng.uniform_int(0, i);
        std::swap(order[i], order[j]);
      }
      for (long start = 0; start < batch.size(); start += cfg.minibatch) {
        const long stop = std::min<long>(batch.size(), start + cfg.minibatch);
        std::vector<long> idx(order.begin() + start, order.begin() + stop);
        PpoStats st = ppo_loss(batch, idx, policy, value_net, cfg, &mean_grad,
                               &log_std_grad, &value_grad);
        nn::adam_update(mean_opt, policy.mean.flat, mean_grad);
        nn::adam_update(log_std_opt, policy.log_std, log_std_grad);
        nn::adam_update(value_opt, value_net.flat, value_grad);
        policy.clamp_log_std();
        clip_acc += st.clip_fraction;
        entropy_acc += st.entropy;
        ++minibatches;
      }
    }

    IterationMetrics m;
    m.iter = it;
    m.steps = steps_done;
    if (ep.finished > 0) {
      const double n = static_cast<double>(ep.finished);
      m.mean_return = ep.mean_return;
      m.j_tilde = ep.mean_j_tilde;
      m.j_true = ep.mean_j_true;
      m.rho_term_frac = static_cast<double>(ep.rho_terms) / n;
      m.fall_frac = static_cast<double>(ep.fall_terms) / n;
      m.timeout_frac = static_cast<double>(ep.timeout_terms) / n;
    } else {
      // No episode finished this iteration; report the in-progress averages
      // so the CSV never goes silent on long episodes.
      double ret = 0.0;
      double jt = 0.0;
      double jtrue = 0.0;
      for (const EnvSlot& s : slots) {
        ret += s.episode_return;
        jt += -s.episode_tracking;
        jtrue += s.last_progress - s.start_progress;
      }
      m.mean_return = ret / cfg.n_envs;
      m.j_tilde = jt / cfg.n_envs;
      m.j_true = jtrue / cfg.n_envs;
    }
    m.clip_frac = clip_acc / static_cast<double>(minibatches);
    m.entropy = entropy_acc / static_cast<double>(minibatches);
    out.metrics.push_back(m);

    if (!setup.out_dir.empty() && setup.checkpoint_every > 0 &&
        it % setup.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_iter%06ld.bin", it);
      save_policy_checkpoint(setup.out_dir + "/" + name, policy, value_net,
                             it);
    }
  }

  if (!setup.out_dir.empty()) {
    save_policy_checkpoint(setup.out_dir + "/policy_final.bin", policy,
                           value_net, iterations);
    write_metrics_csv(setup.out_dir + "/metrics.csv", out.metrics);
  }
  out.policy = std::move(policy);
  out.value_net = std::move(value_net);
  out.total_steps = steps_done;
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationMetrics>& metrics) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::IoFailure, "cannot open metrics file");
  f << "iter,steps,mean_return,J_tilde,J_true,rho_term_frac,fall_frac,"
       "timeout_frac,clip_frac,entropy\n";
  for (const IterationMetrics& m : metrics) {
    f << m.iter << ',' << m.steps << ',' << format_double(m.mean_return)
      << ',' << format_double(m.j_tilde) << ',' << format_double(m.j_true)
      << ',' << format_double(m.rho_term_frac) << ','
      << format_double(m.fall_frac) << ',' << format_double(m.timeout_frac)
      << ',' << format_double(m.clip_frac) << ',' << format_double(m.entropy)
      << '\n';
  }
  require(f.good(), ErrorCode::IoFailure, "failed writing metrics file");
}

namespace {

Vector int_vector(const std::vector<int>& values) {
  Vector v(static_cast<long>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v(static_cast<long>(i)) = static_cast<double>(values[i]);
  }
  return v;
}

std::vector<int> vector_int(const Vector& v) {
  std::vector<int> out(static_cast<std::size_t>(v.size()));
  for (long i = 0; i < v.size(); ++i) {
    const double x = v(i);
    require(x > 0.0 && x == std::floor(x), ErrorCode::IoFailure,
            "corrupt layer-size record");
    out[static_cast<std::size_t>(i)] = static_cast<int>(x);
  }
  return out;
}

std::vector<nn::Activation> default_activations(std::size_t layer_count) {
  std::vector<nn::Activation> acts(layer_count, nn::Activation::kTanh);
  acts.back() = nn::Activation::kIdentity;
  return acts;
}

}  // namespace

void save_policy_checkpoint(const std::string& path,
                            const nn::GaussianPolicy& policy,
                            const nn::MlpParams& value_net, long iteration) {
  policy.validate();
  value_net.validate();
  std::vector<nn::TensorRecord> records;
  records.push_back({"policy_mean_flat",
                     {static_cast<long>(policy.mean.flat.size())},
                     policy.mean.flat});
  records.push_back({"policy_log_std",
                     {static_cast<long>(policy.log_std.size())},
                     policy.log_std});
  records.push_back({"policy_layer_sizes",
                     {static_cast<long>(policy.mean.layer_sizes.size())},
                     int_vector(policy.mean.layer_sizes)});
  records.push_back({"value_flat",
                     {static_cast<long>(value_net.flat.size())},
                     value_net.flat});
  records.push_back({"value_layer_sizes",
                     {static_cast<long>(value_net.layer_sizes.size())},
                     int_vector(value_net.layer_sizes)});
  Vector iter(1);
  iter(0) = static_cast<double>(iteration);
  records.push_back({"iteration", {1}, iter});
  char extra[64];
  std::snprintf(extra, sizeof(extra), "{\"iteration\": %ld}", iteration);
  nn::save_tensors(path, records, extra);
}

PolicyCheckpoint load_policy_checkpoint(const std::string& path) {
  std::vector<nn::TensorRecord> records = nn::load_tensors(path);
  auto find = [&records, &path](const std::string& name) -> const Vector& {
    for (const nn::TensorRecord& r : records) {
      if (r.name == name) return r.data;
    }
    fail(ErrorCode::IoFailure, "checkpoint " + path + " lacks record " + name);
  };
  PolicyCheckpoint ck;
  std::vector<int> policy_layers = vector_int(find("policy_layer_sizes"));
  require(policy_layers.size() >= 2, ErrorCode::IoFailure,
          "policy layer list too short");
  ck.policy.mean.layer_sizes = policy_layers;
  ck.policy.mean.activations = default_activations(policy_layers.size() - 1);
  ck.policy.mean.flat = find("policy_mean_flat");
  ck.policy.log_std = find("policy_log_std");
  std::vector<int> value_layers = vector_int(find("value_layer_sizes"));
  require(value_layers.size() >= 2, ErrorCode::IoFailure,
          "value layer list too short");
  ck.value_net.layer_sizes = value_layers;
  ck.value_net.activations = default_activations(value_layers.size() - 1);
  ck.value_net.flat = find("value_flat");
  const Vector& iter = find("iteration");
  require(iter.size() == 1, ErrorCode::IoFailure, "bad iteration record");
  ck.iteration = static_cast<long>(iter(0));
  ck.policy.validate();
  ck.value_net.validate();
  return ck;
}

}  // namespace ogmp::ppo
