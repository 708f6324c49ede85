#include "ogmp/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace ogmp::nn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<Vector> forward_cached(const MlpParams& p, const Vector& input) {
  std::vector<Vector> h(p.layer_count() + 1);
  h[0] = input;
  for (int l = 0; l < p.layer_count(); ++l) {
    const int in = p.layer_sizes[l];
    const int out = p.layer_sizes[l + 1];
    Eigen::Map<const Matrix> W(p.flat.data() + p.weight_offset(l), out, in);
    Eigen::Map<const Vector> b(p.flat.data() + p.bias_offset(l), out);
    Vector z = W * h[l] + b;
    h[l + 1] = (p.activations[l] == Activation::kTanh)
                   ? Vector(z.array().tanh())
                   : z;
  }
  return h;
}

}  // namespace

int MlpParams::param_count() const {
  int n = 0;
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

int MlpParams::weight_offset(int l) const {
  int off = 0;
  for (int i = 0; i < l; ++i) {
    off += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
  }
  return off;
}

int MlpParams::bias_offset(int l) const {
  return weight_offset(l) + layer_sizes[l] * layer_sizes[l + 1];
}

void MlpParams::validate() const {
  require(layer_sizes.size() >= 2, ErrorCode::InvalidArgument,
          "MLP needs at least an input and an output layer");
  require(activations.size() == layer_sizes.size() - 1,
          ErrorCode::InvalidArgument,
          "need exactly one activation per layer");
  for (int s : layer_sizes) {
    require(s > 0, ErrorCode::InvalidArgument, "layer sizes must be positive");
  }
  require(flat.size() == param_count(), ErrorCode::LengthMismatch,
          "flat parameter vector does not match the layer shapes");
  require(flat.allFinite(), ErrorCode::NaNDetected,
          "non-finite network parameters");
}

MlpParams MlpParams::zeros(std::vector<int> layer_sizes,
                           std::vector<Activation> activations) {
  MlpParams p;
  p.layer_sizes = std::move(layer_sizes);
  p.activations = std::move(activations);
  require(p.layer_sizes.size() >= 2 &&
              p.activations.size() == p.layer_sizes.size() - 1,
          ErrorCode::InvalidArgument, "inconsistent MLP shape specification");
  p.flat = Vector::Zero(p.param_count());
  p.validate();
  return p;
}

MlpParams MlpParams::random_init(std::vector<int> layer_sizes,
                                 std::vector<Activation> activations,
                                 RngStream& rng, double final_scale) {
  MlpParams p = zeros(std::move(layer_sizes), std::move(activations));
  for (int l = 0; l < p.layer_count(); ++l) {
    const int in = p.layer_sizes[l];
    const int out = p.layer_sizes[l + 1];
    double gain = 1.0 / std::sqrt(static_cast<double>(in));
    if (l == p.layer_count() - 1) gain *= final_scale;
    for (int i = 0; i < in * out; ++i) {
      p.flat[p.weight_offset(l) + i] = rng.uniform(-gain, gain);
    }
    // Biases start at zero.
  }
  return p;
}

MlpParams MlpParams::make_default(int in, int out, RngStream& rng,
                                  double final_scale) {
  return random_init({in, 64, 64, out},
                     {Activation::kTanh, Activation::kTanh,
                      Activation::kIdentity},
                     rng, final_scale);
}

Vector forward(const MlpParams& p, const Vector& input) {
  p.validate();
  require(input.size() == p.input_dim(), ErrorCode::DimensionMismatch,
          "input length does not match the first layer");
  return forward_cached(p, input).back();
}

Gradients backward(const MlpParams& p, const Vector& input,
                   const Vector& upstream) {
  p.validate();
  require(input.size() == p.input_dim(), ErrorCode::DimensionMismatch,
          "input length does not match the first layer");
  require(upstream.size() == p.output_dim(), ErrorCode::DimensionMismatch,
          "upstream length does not match the output layer");
  const std::vector<Vector> h = forward_cached(p, input);

  Gradients g;
  g.param_grads = Vector::Zero(p.flat.size());
  Vector delta = upstream;
  for (int l = p.layer_count() - 1; l >= 0; --l) {
    const int in = p.layer_sizes[l];
    const int out = p.layer_sizes[l + 1];
    Vector dz = (p.activations[l] == Activation::kTanh)
                    ? Vector(delta.array() * (1.0 - h[l + 1].array().square()))
                    : delta;
    Eigen::Map<Matrix> gw(g.param_grads.data() + p.weight_offset(l), out, in);
    gw = dz * h[l].transpose();
    g.param_grads.segment(p.bias_offset(l), out) = dz;
    Eigen::Map<const Matrix> W(p.flat.data() + p.weight_offset(l), out, in);
    delta = W.transpose() * dz;
  }
  g.input_grad = delta;
  return g;
}

void GaussianPolicy::validate() const {
  mean.validate();
  require(log_std.size() == action_dim(), ErrorCode::LengthMismatch,
          "log_std length does not match the action dimension");
  require(log_std.allFinite(), ErrorCode::NaNDetected, "non-finite log_std");
  require(log_std.minCoeff() >= kLogStdMin - 1e-12 &&
              log_std.maxCoeff() <= kLogStdMax + 1e-12,
          ErrorCode::OutOfRange, "log_std outside its clamp range");
}

void GaussianPolicy::clamp_log_std() {
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

GaussianPolicy GaussianPolicy::make(int obs_dim, int action_dim,
                                    RngStream& rng, double init_log_std) {
  GaussianPolicy policy;
  policy.mean = MlpParams::make_default(obs_dim, action_dim, rng, 0.01);
  policy.log_std = Vector::Constant(action_dim, init_log_std);
  policy.clamp_log_std();
  policy.validate();
  return policy;
}

double gaussian_logp(const GaussianPolicy& policy, const Vector& obs,
                     const Vector& action) {
  policy.validate();
  require(action.size() == policy.action_dim(), ErrorCode::DimensionMismatch,
          "action length does not match the policy head");
  const Vector mu = forward(policy.mean, obs);
  double lp = 0.0;
  for (int d = 0; d < policy.action_dim(); ++d) {
    const double sigma = std::exp(policy.log_std[d]);
    const double z = (action[d] - mu[d]) / sigma;
    lp += -0.5 * z * z - policy.log_std[d] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const GaussianPolicy& policy) {
  double h = 0.0;
  for (int d = 0; d < policy.action_dim(); ++d) {
    h += policy.log_std[d] + 0.5 * (1.0 + kLog2Pi);
  }
  return h;
}

SampleResult sample(const GaussianPolicy& policy, const Vector& obs,
                    RngStream& rng) {
  const Vector mu = forward(policy.mean, obs);
  SampleResult out;
  out.action = Vector(policy.action_dim());
  for (int d = 0; d < policy.action_dim(); ++d) {
    out.action[d] = mu[d] + std::exp(policy.log_std[d]) * rng.normal();
  }
  out.logp = gaussian_logp(policy, obs, out.action);
  return out;
}

PolicyLogpGrad policy_logp_grad(const GaussianPolicy& policy,
                                const Vector& obs, const Vector& action) {
  policy.validate();
  require(action.size() == policy.action_dim(), ErrorCode::DimensionMismatch,
          "action length does not match the policy head");
  const Vector mu = forward(policy.mean, obs);

  PolicyLogpGrad out;
  out.log_std_grads = Vector(policy.action_dim());
  Vector upstream(policy.action_dim());
  for (int d = 0; d < policy.action_dim(); ++d) {
    const double sigma = std::exp(policy.log_std[d]);
    const double z = (action[d] - mu[d]) / sigma;
    out.logp += -0.5 * z * z - policy.log_std[d] - 0.5 * kLog2Pi;
    upstream[d] = (action[d] - mu[d]) / (sigma * sigma);
    out.log_std_grads[d] = z * z - 1.0;
  }
  out.mean_param_grads = backward(policy.mean, obs, upstream).param_grads;
  return out;
}

AdamState AdamState::make(int n, double lr, double beta1, double beta2,
                          double eps) {
  require(n > 0, ErrorCode::InvalidArgument,
          "optimizer needs a positive parameter count");
  AdamState s;
  s.m = Vector::Zero(n);
  s.v = Vector::Zero(n);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_update(AdamState& s, Eigen::Ref<Vector> params,
                 const Vector& grads) {
  require(params.size() == grads.size() && params.size() == s.m.size(),
          ErrorCode::LengthMismatch,
          "params, grads, and optimizer state must have equal lengths");
  s.step += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params -= s.lr *
            ((s.m / bc1).array() / ((s.v / bc2).array().sqrt() + s.eps))
                .matrix();
}

namespace {

constexpr char kMagic[8] = {'O', 'G', 'M', 'P', 'T', 'N', 'S', '1'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void append_pod(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));  // target platform is little-endian
}

template <typename T>
T read_pod(const std::string& buf, size_t& pos) {
  require(pos + sizeof(T) <= buf.size(), ErrorCode::IoFailure,
          "checkpoint truncated");
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

void save_tensors(const std::string& path,
                  const std::vector<TensorRecord>& records,
                  const std::string& manifest_extra_json) {
  nlohmann::json extra =
      nlohmann::json::parse(manifest_extra_json, nullptr, false);
  require(!extra.is_discarded(), ErrorCode::InvalidArgument,
          "manifest extras must be valid JSON");

  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  append_pod<uint32_t>(buf, kVersion);
  append_pod<uint32_t>(buf, static_cast<uint32_t>(records.size()));
  for (const TensorRecord& r : records) {
    long shape_count = 1;
    for (long d : r.shape) shape_count *= d;
    require(shape_count == r.data.size(), ErrorCode::LengthMismatch,
            "tensor '" + r.name + "' shape does not match its data length");
    append_pod<uint32_t>(buf, static_cast<uint32_t>(r.name.size()));
    buf.append(r.name);
    append_pod<uint32_t>(buf, static_cast<uint32_t>(r.shape.size()));
    for (long d : r.shape) append_pod<int64_t>(buf, d);
    append_pod<int64_t>(buf, static_cast<int64_t>(r.data.size()));
    for (Eigen::Index i = 0; i < r.data.size(); ++i) {
      append_pod<double>(buf, r.data[i]);
    }
  }
  const uint64_t checksum = fnv1a64(buf);
  append_pod<uint64_t>(buf, checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoFailure, "cannot open '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.close();
  require(out.good(), ErrorCode::IoFailure, "short write to '" + path + "'");

  nlohmann::json manifest;
  manifest["format"] = "ogmp-tensors";
  manifest["version"] = kVersion;
  std::ostringstream hex;
  hex << std::hex << checksum;
  manifest["checksum_fnv1a64"] = hex.str();
  manifest["records"] = nlohmann::json::array();
  for (const TensorRecord& r : records) {
    manifest["records"].push_back(
        {{"name", r.name}, {"shape", r.shape}, {"count", r.data.size()}});
  }
  manifest["extra"] = extra;
  std::ofstream mout(path + ".json", std::ios::trunc);
  require(mout.good(), ErrorCode::IoFailure,
          "cannot open '" + path + ".json'");
  mout << manifest.dump(2) << "\n";
  mout.close();
  require(mout.good(), ErrorCode::IoFailure,
          "short write to '" + path + ".json'");
}

std::vector<TensorRecord> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  require(buf.size() >= sizeof(kMagic) + 2 * sizeof(uint32_t) +
                            sizeof(uint64_t),
          ErrorCode::IoFailure, "checkpoint too short");
  const std::string body = buf.substr(0, buf.size() - sizeof(uint64_t));
  size_t tail = body.size();
  const uint64_t stored = read_pod<uint64_t>(buf, tail);
  require(fnv1a64(body) == stored, ErrorCode::ChecksumMismatch,
          "checkpoint payload does not match its checksum");

  size_t pos = 0;
  require(std::memcmp(body.data(), kMagic, sizeof(kMagic)) == 0,
          ErrorCode::IoFailure, "bad checkpoint magic");
  pos += sizeof(kMagic);
  const uint32_t version = read_pod<uint32_t>(body, pos);
  require(version == kVersion, ErrorCode::IoFailure,
          "unsupported checkpoint version");
  const uint32_t count = read_pod<uint32_t>(body, pos);

  std::vector<TensorRecord> records(count);
  for (uint32_t i = 0; i < count; ++i) {
    TensorRecord& r = records[i];
    const uint32_t name_len = read_pod<uint32_t>(body, pos);
    require(pos + name_len <= body.size(), ErrorCode::IoFailure,
            "checkpoint truncated in a record name");
    r.name = body.substr(pos, name_len);
    pos += name_len;
    const uint32_t ndim = read_pod<uint32_t>(body, pos);
    r.shape.resize(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      r.shape[d] = static_cast<long>(read_pod<int64_t>(body, pos));
    }
    const int64_t n = read_pod<int64_t>(body, pos);
    require(n >= 0, ErrorCode::IoFailure, "negative tensor length");
    r.data = Vector(n);
    for (int64_t k = 0; k < n; ++k) {
      r.data[k] = read_pod<double>(body, pos);
    }
  }
  require(pos == body.size(), ErrorCode::IoFailure,
          "trailing bytes after the last record");
  return records;
}

}  // namespace ogmp::nn
