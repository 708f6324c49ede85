#include "ogmp/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "ogmp/lti.hpp"

namespace ogmp::encoder {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector normalize(const EncoderParams& e, const Vector& window) {
  return (window - e.feature_mean).cwiseQuotient(e.feature_std);
}

}  // namespace

void EncoderParams::validate() const {
  enc.validate();
  dec.validate();
  require(horizon >= 1, ErrorCode::InvalidArgument,
          "encoder horizon must be >= 1");
  require(enc.input_dim() == window_dim() && dec.output_dim() == window_dim(),
          ErrorCode::DimensionMismatch,
          "encoder window size disagrees with the horizon");
  require(enc.output_dim() == kLatentDim && dec.input_dim() == kLatentDim,
          ErrorCode::DimensionMismatch, "latent dimension must be 2");
  require(feature_mean.size() == window_dim() &&
              feature_std.size() == window_dim(),
          ErrorCode::DimensionMismatch,
          "normalizer length disagrees with the window size");
  require((feature_std.array() > 0.0).all(), ErrorCode::InvalidArgument,
          "normalizer scales must be positive");
}

EncoderParams EncoderParams::random(int horizon, int hidden, RngStream& rng) {
  require(horizon >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  require(hidden >= 1, ErrorCode::InvalidArgument, "hidden must be >= 1");
  EncoderParams e;
  e.horizon = horizon;
  const int d = e.window_dim();
  e.enc = nn::MlpParams::random_init(
      {d, hidden, kLatentDim},
      {nn::Activation::kTanh, nn::Activation::kIdentity}, rng);
  e.dec = nn::MlpParams::random_init(
      {kLatentDim, hidden, d},
      {nn::Activation::kTanh, nn::Activation::kIdentity}, rng);
  e.feature_mean = Vector::Zero(d);
  e.feature_std = Vector::Ones(d);
  return e;
}

Vector trajectory_window(const std::vector<Vector>& states, double dt) {
  require(states.size() >= 2, ErrorCode::InvalidArgument,
          "a trajectory window needs at least two states");
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  const int n = static_cast<int>(states.size());
  for (const Vector& x : states) {
    require(x.size() == lti::kSrbStateDim, ErrorCode::DimensionMismatch,
            "window states must be full model states");
  }
  Vector w(kWindowCoords * n);
  for (int k = 0; k < n; ++k) {
    w[k] = states[k][lti::kPz];
    w[n + k] = states[k][lti::kTheta];
  }
  for (int k = 0; k < n; ++k) {
    const int j = std::min(k, n - 2);  // repeat the last difference
    w[2 * n + k] = (states[j + 1][lti::kPz] - states[j][lti::kPz]) / dt;
    w[3 * n + k] =
        (states[j + 1][lti::kTheta] - states[j][lti::kTheta]) / dt;
  }
  return w;
}

Vector encode(const EncoderParams& e, const Vector& traj_window) {
  e.validate();
  require(traj_window.size() == e.window_dim(), ErrorCode::DimensionMismatch,
          "window length does not match the trained horizon");
  return nn::forward(e.enc, normalize(e, traj_window));
}

Vector reconstruct(const EncoderParams& e, const Vector& traj_window) {
  e.validate();
  require(traj_window.size() == e.window_dim(), ErrorCode::DimensionMismatch,
          "window length does not match the trained horizon");
  const Vector z = nn::forward(e.enc, normalize(e, traj_window));
  const Vector out = nn::forward(e.dec, z);
  return out.cwiseProduct(e.feature_std) + e.feature_mean;
}

double reconstruction_rmse(const EncoderParams& e,
                           const std::vector<Vector>& windows) {
  e.validate();
  require(!windows.empty(), ErrorCode::EmptyInput, "no windows given");
  double sq_sum = 0.0;
  long count = 0;
  for (const Vector& w : windows) {
    require(w.size() == e.window_dim(), ErrorCode::DimensionMismatch,
            "window length does not match the trained horizon");
    const Vector x = normalize(e, w);
    const Vector y = nn::forward(e.dec, nn::forward(e.enc, x));
    sq_sum += (y - x).squaredNorm();
    count += x.size();
  }
  return std::sqrt(sq_sum / static_cast<double>(count));
}

void EncoderHyper::validate() const {
  require(hidden >= 1, ErrorCode::InvalidArgument, "hidden must be >= 1");
  require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be >= 1");
  require(minibatch >= 1, ErrorCode::InvalidArgument,
          "minibatch must be >= 1");
  require(lr > 0.0, ErrorCode::InvalidArgument, "lr must be positive");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          ErrorCode::InvalidArgument, "holdout_fraction must sit in [0, 1)");
}

EncoderTraining train_encoder(const dataset::Dataset& data,
                              const EncoderHyper& hyper, std::uint64_t seed) {
  data.validate();
  hyper.validate();

  std::vector<Vector> windows;
  windows.reserve(data.trajectories.size());
  for (const dataset::Trajectory& t : data.trajectories) {
    windows.push_back(trajectory_window(t.states, data.dt));
  }
  const long n = static_cast<long>(windows.size());
  const long d = windows.front().size();

  RngStream split_rng = RngStream(seed).substream(1);
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  for (long i = n - 1; i > 0; --i) {
    std::swap(order[i], order[split_rng.uniform_int(0, i)]);
  }
  long holdout = std::lround(hyper.holdout_fraction * static_cast<double>(n));
  holdout = std::min(holdout, n - 1);  // always keep a training sample
  std::vector<long> train_idx(order.begin(), order.end() - holdout);
  std::vector<long> test_idx(order.end() - holdout, order.end());

  EncoderTraining out;
  out.params.horizon = data.horizon;
  const int window_dim = out.params.window_dim();
  require(window_dim == d, ErrorCode::DimensionMismatch,
          "window size disagrees with the dataset horizon");

  // Per-coordinate normalizer from the training split only.
  Vector mean = Vector::Zero(d);
  for (long i : train_idx) mean += windows[i];
  mean /= static_cast<double>(train_idx.size());
  Vector var = Vector::Zero(d);
  for (long i : train_idx) {
    var += (windows[i] - mean).cwiseAbs2();
  }
  var /= static_cast<double>(train_idx.size());
  out.params.feature_mean = mean;
  out.params.feature_std = var.cwiseSqrt().cwiseMax(1e-8);

  RngStream init_rng = RngStream(seed).substream(2);
  out.params.enc = nn::MlpParams::random_init(
      {window_dim, hyper.hidden, kLatentDim},
      {nn::Activation::kTanh, nn::Activation::kIdentity}, init_rng);
  out.params.dec = nn::MlpParams::random_init(
      {kLatentDim, hyper.hidden, window_dim},
      {nn::Activation::kTanh, nn::Activation::kIdentity}, init_rng);
  out.params.validate();

  std::vector<Vector> normalized(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    normalized[i] = normalize(out.params, windows[i]);
  }

  nn::AdamState enc_opt =
      nn::AdamState::make(static_cast<int>(out.params.enc.flat.size()),
                          hyper.lr);
  nn::AdamState dec_opt =
      nn::AdamState::make(static_cast<int>(out.params.dec.flat.size()),
                          hyper.lr);
  RngStream shuffle_rng = RngStream(seed).substream(3);
  Vector enc_grad(out.params.enc.flat.size());
  Vector dec_grad(out.params.dec.flat.size());
  std::vector<long> sweep = train_idx;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (long i = static_cast<long>(sweep.size()) - 1; i > 0; --i) {
      std::swap(sweep[i], sweep[shuffle_rng.uniform_int(0, i)]);
    }
    double epoch_sq = 0.0;
    long epoch_coords = 0;
    for (std::size_t start = 0; start < sweep.size();
         start += static_cast<std::size_t>(hyper.minibatch)) {
      const std::size_t stop =
          std::min(sweep.size(), start + static_cast<std::size_t>(
                                             hyper.minibatch));
      enc_grad.setZero();
      dec_grad.setZero();
      const double batch = static_cast<double>(stop - start);
      for (std::size_t s = start; s < stop; ++s) {
        const Vector& x = normalized[sweep[s]];
        const Vector z = nn::forward(out.params.enc, x);
        const Vector y = nn::forward(out.params.dec, z);
        const Vector err = y - x;
        epoch_sq += err.squaredNorm();
        epoch_coords += d;
        // L = mean over batch of ||y - x||^2 / d.
        const Vector upstream = (2.0 / (batch * d)) * err;
        nn::Gradients gd = nn::backward(out.params.dec, z, upstream);
        dec_grad += gd.param_grads;
        nn::Gradients ge = nn::backward(out.params.enc, x, gd.input_grad);
        enc_grad += ge.param_grads;
      }
      nn::adam_update(enc_opt, out.params.enc.flat, enc_grad);
      nn::adam_update(dec_opt, out.params.dec.flat, dec_grad);
    }
    out.loss_curve.push_back(epoch_sq / static_cast<double>(epoch_coords));
  }

  if (!test_idx.empty()) {
    std::vector<Vector> held;
    held.reserve(test_idx.size());
    for (long i : test_idx) held.push_back(windows[i]);
    out.holdout_rmse = reconstruction_rmse(out.params, held);
  }
  return out;
}

double cluster_separation(const std::vector<LatentPoint>& points) {
  require(!points.empty(), ErrorCode::EmptyInput, "no latent points");
  struct Group {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> members;
  };
  std::vector<terrain::Mode> labels;
  std::vector<Group> groups;
  for (const LatentPoint& p : points) {
    require(p.z.allFinite(), ErrorCode::NaNDetected,
            "non-finite latent point");
    std::size_t g = 0;
    while (g < labels.size() && labels[g] != p.mode_label) ++g;
    if (g == labels.size()) {
      labels.push_back(p.mode_label);
      groups.emplace_back();
    }
    groups[g].sum += p.z;
    groups[g].members.push_back(p.z);
  }
  require(labels.size() >= 2, ErrorCode::DegenerateInput,
          "cluster separation needs at least two modes");
  std::vector<Eigen::Vector2d> centroids;
  double intra = 0.0;
  for (const Group& g : groups) {
    require(g.members.size() >= 2, ErrorCode::DegenerateInput,
            "every mode needs at least two points");
    const Eigen::Vector2d c = g.sum / static_cast<double>(g.members.size());
    centroids.push_back(c);
    double sq = 0.0;
    for (const Eigen::Vector2d& z : g.members) sq += (z - c).squaredNorm();
    intra += std::sqrt(sq / static_cast<double>(g.members.size()));
  }
  intra /= static_cast<double>(groups.size());
  double inter = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    for (std::size_t j = i + 1; j < centroids.size(); ++j) {
      inter += (centroids[i] - centroids[j]).norm();
      ++pairs;
    }
  }
  inter /= static_cast<double>(pairs);
  if (intra < 1e-12) {
    return inter < 1e-12 ? 0.0
                         : std::numeric_limits<double>::infinity();
  }
  return inter / intra;
}

std::vector<LatentPoint> encode_dataset(const EncoderParams& e,
                                        const dataset::Dataset& data) {
  data.validate();
  std::vector<LatentPoint> points;
  points.reserve(data.trajectories.size());
  for (const dataset::Trajectory& t : data.trajectories) {
    const Vector z = encode(e, trajectory_window(t.states, data.dt));
    points.push_back({Eigen::Vector2d(z[0], z[1]), t.mode.mode});
  }
  return points;
}

void write_latent_csv(const std::string& path,
                      const std::vector<LatentPoint>& points) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::IoFailure, "cannot open " + path);
  f << "z1,z2,mode_label\n";
  for (const LatentPoint& p : points) {
    f << format_double(p.z[0]) << ',' << format_double(p.z[1]) << ','
      << terrain::mode_name(p.mode_label) << '\n';
  }
  require(f.good(), ErrorCode::IoFailure, "failed writing " + path);
}

void save_encoder(const std::string& path, const EncoderParams& e) {
  e.validate();
  auto int_vector = [](const std::vector<int>& values) {
    Vector v(static_cast<long>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      v(static_cast<long>(i)) = static_cast<double>(values[i]);
    }
    return v;
  };
  Vector horizon(1);
  horizon(0) = static_cast<double>(e.horizon);
  std::vector<nn::TensorRecord> records;
  records.push_back({"enc_flat", {static_cast<long>(e.enc.flat.size())},
                     e.enc.flat});
  records.push_back({"enc_layer_sizes",
                     {static_cast<long>(e.enc.layer_sizes.size())},
                     int_vector(e.enc.layer_sizes)});
  records.push_back({"dec_flat", {static_cast<long>(e.dec.flat.size())},
                     e.dec.flat});
  records.push_back({"dec_layer_sizes",
                     {static_cast<long>(e.dec.layer_sizes.size())},
                     int_vector(e.dec.layer_sizes)});
  records.push_back({"feature_mean",
                     {static_cast<long>(e.feature_mean.size())},
                     e.feature_mean});
  records.push_back({"feature_std",
                     {static_cast<long>(e.feature_std.size())},
                     e.feature_std});
  records.push_back({"horizon", {1}, horizon});
  char extra[64];
  std::snprintf(extra, sizeof(extra), "{\"horizon\": %d}", e.horizon);
  nn::save_tensors(path, records, extra);
}

EncoderParams load_encoder(const std::string& path) {
  std::vector<nn::TensorRecord> records = nn::load_tensors(path);
  auto find = [&records, &path](const std::string& name) -> const Vector& {
    for (const nn::TensorRecord& r : records) {
      if (r.name == name) return r.data;
    }
    fail(ErrorCode::IoFailure, "encoder file " + path + " lacks " + name);
  };
  auto vector_int = [](const Vector& v) {
    std::vector<int> out(static_cast<std::size_t>(v.size()));
    for (long i = 0; i < v.size(); ++i) {
      const double x = v(i);
      require(x > 0.0 && x == std::floor(x), ErrorCode::IoFailure,
              "corrupt layer-size record");
      out[static_cast<std::size_t>(i)] = static_cast<int>(x);
    }
    return out;
  };
  auto activations = [](std::size_t layer_count) {
    std::vector<nn::Activation> acts(layer_count, nn::Activation::kTanh);
    acts.back() = nn::Activation::kIdentity;
    return acts;
  };
  EncoderParams e;
  e.enc.layer_sizes = vector_int(find("enc_layer_sizes"));
  require(e.enc.layer_sizes.size() >= 2, ErrorCode::IoFailure,
          "encoder layer list too short");
  e.enc.activations = activations(e.enc.layer_sizes.size() - 1);
  e.enc.flat = find("enc_flat");
  e.dec.layer_sizes = vector_int(find("dec_layer_sizes"));
  require(e.dec.layer_sizes.size() >= 2, ErrorCode::IoFailure,
          "decoder layer list too short");
  e.dec.activations = activations(e.dec.layer_sizes.size() - 1);
  e.dec.flat = find("dec_flat");
  e.feature_mean = find("feature_mean");
  e.feature_std = find("feature_std");
  const Vector& horizon = find("horizon");
  require(horizon.size() == 1, ErrorCode::IoFailure, "bad horizon record");
  e.horizon = static_cast<int>(horizon(0));
  e.validate();
  return e;
}

}  // namespace ogmp::encoder
