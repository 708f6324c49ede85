#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "ogmp/nn.hpp"

using namespace ogmp;
using namespace ogmp::nn;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Independent finite-difference oracle for d(upstream . forward)/d theta.
double scalar_loss(const MlpParams& p, const Vector& input,
                   const Vector& upstream) {
  return upstream.dot(forward(p, input));
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).lpNorm<Eigen::Infinity>() /
         std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

uint64_t test_fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string temp_path(const char* stem) {
  return std::string("/tmp/ogmp_nn_test_") + stem + ".bin";
}

}  // namespace

TEST_CASE("forward: zero weights with bias b outputs b") {
  MlpParams p = MlpParams::zeros({3, 2}, {Activation::kIdentity});
  p.flat[p.bias_offset(0) + 0] = 0.7;
  p.flat[p.bias_offset(0) + 1] = -1.3;
  Vector y = forward(p, vec({5.0, -2.0, 9.0}));
  CHECK(y[0] == doctest::Approx(0.7));
  CHECK(y[1] == doctest::Approx(-1.3));
}

TEST_CASE("forward: single identity layer is the exact affine map") {
  MlpParams p = MlpParams::zeros({2, 2}, {Activation::kIdentity});
  // Column-major weight block: W = [[1, 3], [2, 4]].
  p.flat[0] = 1.0;
  p.flat[1] = 2.0;
  p.flat[2] = 3.0;
  p.flat[3] = 4.0;
  p.flat[p.bias_offset(0) + 0] = 0.5;
  p.flat[p.bias_offset(0) + 1] = -0.5;
  Vector y = forward(p, vec({1.0, 1.0}));
  CHECK(y[0] == doctest::Approx(1.0 + 3.0 + 0.5));
  CHECK(y[1] == doctest::Approx(2.0 + 4.0 - 0.5));
}

TEST_CASE("forward: tanh outputs stay inside (-1, 1) for huge inputs") {
  RngStream rng(11);
  MlpParams p = MlpParams::random_init({4, 8, 3},
                                       {Activation::kTanh, Activation::kTanh},
                                       rng);
  Vector y = forward(p, vec({1e6, -1e6, 1e8, 1e5}));
  for (int i = 0; i < y.size(); ++i) {
    CHECK(y[i] > -1.0);
    CHECK(y[i] < 1.0);
  }
}

TEST_CASE("forward: rejects mismatched input length") {
  MlpParams p = MlpParams::zeros({3, 2}, {Activation::kIdentity});
  CHECK_THROWS_AS((void)forward(p, vec({1.0, 2.0})), Error);
  try {
    (void)forward(p, vec({1.0, 2.0}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("backward: identity layer gives the rank-one weight gradient") {
  MlpParams p = MlpParams::zeros({3, 2}, {Activation::kIdentity});
  p.flat[0] = 0.4;   // W(0,0)
  p.flat[1] = -0.2;  // W(1,0)
  p.flat[2] = 0.1;   // W(0,1)
  p.flat[3] = 0.3;   // W(1,1)
  p.flat[4] = 0.8;   // W(0,2)
  p.flat[5] = -0.6;  // W(1,2)
  const Vector input = vec({1.0, -2.0, 3.0});
  const Vector upstream = vec({2.0, -1.0});
  Gradients g = backward(p, input, upstream);

  // d(u . (Wx + b)) / dW = u x^T, flattened column-major.
  Eigen::Map<const Matrix> gw(g.param_grads.data(), 2, 3);
  Matrix expected = upstream * input.transpose();
  CHECK((gw - expected).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  // Bias gradient is the upstream itself.
  CHECK(g.param_grads[p.bias_offset(0) + 0] == doctest::Approx(2.0));
  CHECK(g.param_grads[p.bias_offset(0) + 1] == doctest::Approx(-1.0));
  // Input gradient is W^T u.
  Eigen::Map<const Matrix> W(p.flat.data(), 2, 3);
  CHECK((g.input_grad - W.transpose() * upstream).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  RngStream rng(5);
  MlpParams p = MlpParams::random_init({4, 6, 2},
                                       {Activation::kTanh,
                                        Activation::kIdentity},
                                       rng);
  Gradients g = backward(p, vec({0.3, -0.1, 0.7, 0.2}), vec({0.0, 0.0}));
  CHECK(g.param_grads.norm() == doctest::Approx(0.0));
  CHECK(g.input_grad.norm() == doctest::Approx(0.0));
}

TEST_CASE("backward matches central finite differences on 10 random nets") {
  const std::vector<std::vector<int>> shapes = {
      {3, 5, 2},       {4, 8, 8, 3}, {2, 6, 1}, {5, 4, 4, 2}, {1, 7, 1},
      {6, 6, 6},       {2, 9, 4},    {3, 3, 3, 3}, {4, 5, 6}, {7, 8, 2}};
  const double h = 1e-5;
  for (size_t c = 0; c < shapes.size(); ++c) {
    RngStream rng(1000 + static_cast<uint64_t>(c));
    std::vector<Activation> acts(shapes[c].size() - 1, Activation::kTanh);
    if (c % 2 == 0) acts.back() = Activation::kIdentity;
    MlpParams p = MlpParams::random_init(shapes[c], acts, rng);
    // Make the weights less tiny so gradients are well scaled.
    for (int i = 0; i < p.flat.size(); ++i) p.flat[i] *= 2.0;

    Vector input(shapes[c].front());
    for (int i = 0; i < input.size(); ++i) input[i] = rng.uniform(-1.0, 1.0);
    Vector upstream(shapes[c].back());
    for (int i = 0; i < upstream.size(); ++i) {
      upstream[i] = rng.uniform(-1.0, 1.0);
    }

    Gradients g = backward(p, input, upstream);

    Vector fd_params(p.flat.size());
    for (int i = 0; i < p.flat.size(); ++i) {
      MlpParams plus = p;
      MlpParams minus = p;
      plus.flat[i] += h;
      minus.flat[i] -= h;
      fd_params[i] = (scalar_loss(plus, input, upstream) -
                      scalar_loss(minus, input, upstream)) /
                     (2.0 * h);
    }
    Vector fd_input(input.size());
    for (int i = 0; i < input.size(); ++i) {
      Vector plus = input;
      Vector minus = input;
      plus[i] += h;
      minus[i] -= h;
      fd_input[i] = (scalar_loss(p, plus, upstream) -
                     scalar_loss(p, minus, upstream)) /
                    (2.0 * h);
    }
    INFO("net ", c);
    CHECK(rel_err(g.param_grads, fd_params) < 1e-4);
    CHECK(rel_err(g.input_grad, fd_input) < 1e-4);
  }
}

TEST_CASE("gaussian_logp closed-form checkpoints") {
  const int kD = 3;
  GaussianPolicy policy;
  policy.mean = MlpParams::zeros({4, kD}, {Activation::kIdentity});
  policy.log_std = Vector::Zero(kD);
  const Vector obs = vec({0.1, 0.2, 0.3, 0.4});
  const double log2pi = std::log(2.0 * M_PI);

  // Action at the mean with unit sigma.
  const double at_mean = gaussian_logp(policy, obs, Vector::Zero(kD));
  CHECK(at_mean == doctest::Approx(-0.5 * kD * log2pi));

  // One sigma away in every dimension costs D/2 more.
  const double off_one = gaussian_logp(policy, obs, Vector::Ones(kD));
  CHECK(at_mean - off_one == doctest::Approx(0.5 * kD));

  // Doubling sigma at the mean pays D log 2 of normalization.
  GaussianPolicy wide = policy;
  wide.log_std = Vector::Constant(kD, std::log(2.0));
  const double wide_at_mean = gaussian_logp(wide, obs, Vector::Zero(kD));
  CHECK(at_mean - wide_at_mean == doctest::Approx(kD * std::log(2.0)));
}

TEST_CASE("gaussian_entropy: unit sigma baseline and the log-sigma shift") {
  GaussianPolicy policy;
  policy.mean = MlpParams::zeros({2, 4}, {Activation::kIdentity});
  policy.log_std = Vector::Zero(4);
  const double base = gaussian_entropy(policy);
  CHECK(base == doctest::Approx(4.0 * 0.5 * (1.0 + std::log(2.0 * M_PI))));
  policy.log_std = Vector::Constant(4, std::log(2.0));
  CHECK(gaussian_entropy(policy) - base == doctest::Approx(4.0 * std::log(2.0)));
}

TEST_CASE("sample: tight sigma clamps the action to the mean") {
  RngStream rng(77);
  GaussianPolicy policy = GaussianPolicy::make(3, 2, rng, -20.0);
  // The clamp floor caps sigma at e^-5 ~ 6.7e-3.
  CHECK(policy.log_std.minCoeff() == doctest::Approx(kLogStdMin));
  const Vector obs = vec({0.5, -0.5, 0.25});
  const Vector mu = forward(policy.mean, obs);
  RngStream draw = rng.substream(1);
  for (int k = 0; k < 20; ++k) {
    SampleResult s = sample(policy, obs, draw);
    CHECK((s.action - mu).lpNorm<Eigen::Infinity>() < 0.1);
    CHECK(s.logp == doctest::Approx(gaussian_logp(policy, obs, s.action)));
  }
}

TEST_CASE("sample: identical seeds reproduce identical draws") {
  RngStream init(123);
  GaussianPolicy policy = GaussianPolicy::make(4, 3, init);
  const Vector obs = vec({0.1, -0.2, 0.3, -0.4});
  RngStream a(999);
  RngStream b(999);
  for (int k = 0; k < 50; ++k) {
    SampleResult sa = sample(policy, obs, a);
    SampleResult sb = sample(policy, obs, b);
    CHECK((sa.action - sb.action).norm() == 0.0);
    CHECK(sa.logp == sb.logp);
  }
}

TEST_CASE("sample: empirical mean of 1e5 draws concentrates on mu") {
  GaussianPolicy policy;
  policy.mean = MlpParams::zeros({1, 2}, {Activation::kIdentity});
  policy.mean.flat[policy.mean.bias_offset(0) + 0] = 0.3;
  policy.mean.flat[policy.mean.bias_offset(0) + 1] = -0.2;
  policy.log_std = Vector::Zero(2);
  const Vector obs = vec({0.0});

  const int kN = 100000;
  RngStream rng(2024);
  Vector acc = Vector::Zero(2);
  for (int k = 0; k < kN; ++k) acc += sample(policy, obs, rng).action;
  acc /= static_cast<double>(kN);
  const double bound = 3.0 / std::sqrt(static_cast<double>(kN));
  CHECK(std::abs(acc[0] - 0.3) < bound);
  CHECK(std::abs(acc[1] + 0.2) < bound);
}

TEST_CASE("policy logp gradients match finite differences end to end") {
  const double h = 1e-5;
  for (uint64_t c = 0; c < 4; ++c) {
    RngStream rng(400 + c);
    GaussianPolicy policy = GaussianPolicy::make(5, 3, rng, -0.3);
    // Undo the tiny final-layer scaling so mean gradients are well scaled.
    for (int i = 0; i < policy.mean.flat.size(); ++i) {
      policy.mean.flat[i] *= 3.0;
    }
    Vector obs(5);
    for (int i = 0; i < 5; ++i) obs[i] = rng.uniform(-1.0, 1.0);
    Vector action(3);
    for (int i = 0; i < 3; ++i) action[i] = rng.uniform(-1.0, 1.0);

    PolicyLogpGrad g = policy_logp_grad(policy, obs, action);
    CHECK(g.logp == doctest::Approx(gaussian_logp(policy, obs, action)));

    Vector fd_mean(policy.mean.flat.size());
    for (int i = 0; i < policy.mean.flat.size(); ++i) {
      GaussianPolicy plus = policy;
      GaussianPolicy minus = policy;
      plus.mean.flat[i] += h;
      minus.mean.flat[i] -= h;
      fd_mean[i] = (gaussian_logp(plus, obs, action) -
                    gaussian_logp(minus, obs, action)) /
                   (2.0 * h);
    }
    Vector fd_log_std(3);
    for (int i = 0; i < 3; ++i) {
      GaussianPolicy plus = policy;
      GaussianPolicy minus = policy;
      plus.log_std[i] += h;
      minus.log_std[i] -= h;
      fd_log_std[i] = (gaussian_logp(plus, obs, action) -
                       gaussian_logp(minus, obs, action)) /
                      (2.0 * h);
    }
    INFO("policy ", c);
    CHECK(rel_err(g.mean_param_grads, fd_mean) < 1e-4);
    CHECK(rel_err(g.log_std_grads, fd_log_std) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves parameters fixed but advances time") {
  AdamState s = AdamState::make(3, 1e-2);
  Vector params = vec({1.0, -2.0, 0.5});
  const Vector before = params;
  adam_update(s, params, Vector::Zero(3));
  CHECK((params - before).norm() == doctest::Approx(0.0));
  CHECK(s.step == 1);
}

TEST_CASE("adam: first step moves each weight by -lr * sign(grad)") {
  AdamState s = AdamState::make(3, 1e-3);
  Vector params = Vector::Zero(3);
  const Vector grads = vec({10.0, -5.0, 0.5});
  adam_update(s, params, grads);
  for (int i = 0; i < 3; ++i) {
    const double expect = -1e-3 * (grads[i] > 0 ? 1.0 : -1.0);
    CHECK(params[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("adam: deterministic given identical inputs, rejects bad lengths") {
  AdamState s1 = AdamState::make(4);
  AdamState s2 = AdamState::make(4);
  Vector p1 = vec({0.1, 0.2, 0.3, 0.4});
  Vector p2 = p1;
  const Vector g = vec({-1.0, 0.5, 2.0, -0.25});
  for (int k = 0; k < 10; ++k) {
    adam_update(s1, p1, g);
    adam_update(s2, p2, g);
  }
  CHECK((p1 - p2).norm() == 0.0);

  Vector short_grads = vec({1.0, 2.0});
  try {
    adam_update(s1, p1, short_grads);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("log_std stays clamped through aggressive updates") {
  RngStream rng(9);
  GaussianPolicy policy = GaussianPolicy::make(2, 3, rng);
  AdamState s = AdamState::make(3, 0.5);
  for (int k = 0; k < 100; ++k) {
    const Vector push = (k % 2 == 0) ? Vector::Constant(3, 50.0)
                                     : Vector::Constant(3, -50.0);
    adam_update(s, policy.log_std, push);
    policy.clamp_log_std();
    CHECK(policy.log_std.minCoeff() >= kLogStdMin);
    CHECK(policy.log_std.maxCoeff() <= kLogStdMax);
  }
}

TEST_CASE("random_init: bounded weights, zero biases, scaled final layer") {
  RngStream rng(31);
  MlpParams p = MlpParams::make_default(10, 4, rng, 0.01);
  CHECK(p.layer_sizes == std::vector<int>({10, 64, 64, 4}));
  const double g0 = 1.0 / std::sqrt(10.0);
  for (int i = 0; i < 10 * 64; ++i) {
    CHECK(std::abs(p.flat[p.weight_offset(0) + i]) <= g0);
  }
  for (int i = 0; i < 64; ++i) {
    CHECK(p.flat[p.bias_offset(0) + i] == 0.0);
  }
  const double g2 = 0.01 / std::sqrt(64.0);
  for (int i = 0; i < 64 * 4; ++i) {
    CHECK(std::abs(p.flat[p.weight_offset(2) + i]) <= g2);
  }
}

TEST_CASE("checkpoint: roundtrip preserves every bit and the manifest lists the records") {
  RngStream rng(55);
  GaussianPolicy policy = GaussianPolicy::make(6, 2, rng);
  MlpParams value = MlpParams::make_default(6, 1, rng);

  std::vector<TensorRecord> records;
  records.push_back({"policy_mean", {policy.mean.flat.size()},
                     policy.mean.flat});
  records.push_back({"policy_log_std", {2}, policy.log_std});
  records.push_back({"value", {value.flat.size()}, value.flat});

  const std::string path = temp_path("roundtrip");
  save_tensors(path, records, R"({"iteration": 17})");

  std::vector<TensorRecord> loaded = load_tensors(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].name == "policy_mean");
  CHECK(loaded[1].name == "policy_log_std");
  CHECK(loaded[2].name == "value");
  CHECK((loaded[0].data - policy.mean.flat).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded[1].data - policy.log_std).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded[2].data - value.flat).lpNorm<Eigen::Infinity>() == 0.0);

  std::ifstream mf(path + ".json");
  REQUIRE(mf.good());
  nlohmann::json manifest = nlohmann::json::parse(mf);
  CHECK(manifest["format"] == "ogmp-tensors");
  CHECK(manifest["records"].size() == 3);
  CHECK(manifest["records"][0]["name"] == "policy_mean");
  CHECK(manifest["extra"]["iteration"] == 17);
}

TEST_CASE("checkpoint: corrupted payload fails the checksum") {
  std::vector<TensorRecord> records;
  records.push_back({"w", {4}, vec({1.0, 2.0, 3.0, 4.0})});
  const std::string path = temp_path("corrupt");
  save_tensors(path, records);

  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  in.close();
  bytes[bytes.size() / 2] ^= 0x01;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  out.close();

  try {
    (void)load_tensors(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChecksumMismatch);
  }
}

TEST_CASE("checkpoint: truncation and bad magic are structural failures") {
  std::vector<TensorRecord> records;
  records.push_back({"w", {3}, vec({1.0, 2.0, 3.0})});
  const std::string path = temp_path("trunc");
  save_tensors(path, records);

  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes.substr(0, 10);
  out.close();
  try {
    (void)load_tensors(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }

  // A structurally valid file whose magic is wrong (checksum intact).
  std::string body = "WRONGMAG";
  const uint32_t version = 1;
  const uint32_t count = 0;
  body.append(reinterpret_cast<const char*>(&version), 4);
  body.append(reinterpret_cast<const char*>(&count), 4);
  const uint64_t sum = test_fnv1a64(body);
  body.append(reinterpret_cast<const char*>(&sum), 8);
  const std::string bad = temp_path("badmagic");
  std::ofstream bout(bad, std::ios::binary | std::ios::trunc);
  bout << body;
  bout.close();
  try {
    (void)load_tensors(bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}
