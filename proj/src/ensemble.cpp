// Copyright 2026 The hgdagger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "hgdagger/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hgdagger/errors.hpp"
#include "hgdagger/seeding.hpp"
#include "hgdagger/text.hpp"

namespace hgdagger::nn
{

namespace
{

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

Vector observation_vector(const sim::Observation & obs)
{
  const auto values = obs.to_array();
  Vector v(sim::kObservationSize);
  for (int i = 0; i < sim::kObservationSize; ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument("observation contains a non-finite value");
    }
    v[i] = values[i];
  }
  return v;
}

// tanh through the vectorized exp; saturates cleanly to +-1.
template <typename Derived>
void tanh_in_place(Eigen::MatrixBase<Derived> & z)
{
  z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

// Preallocated buffers for one batch width.
struct Workspace
{
  std::vector<Matrix> activations;
  Matrix delta;
  Matrix back;

  void resize(const Mlp & net, Eigen::Index batch)
  {
    const auto sizes = net.layer_sizes();
    activations.resize(sizes.size());
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      if (activations[l].rows() != sizes[l] || activations[l].cols() != batch) {
        activations[l].resize(sizes[l], batch);
      }
    }
  }
};

double loss_and_gradient_into(
  const Mlp & net, const Matrix & inputs, const Matrix & targets, Workspace & ws,
  MlpGradient & grad)
{
  const std::size_t layers = net.weights.size();
  ws.resize(net, inputs.cols());
  ws.activations[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix & out = ws.activations[l + 1];
    out.noalias() = net.weights[l] * ws.activations[l];
    out.colwise() += net.biases[l];
    if (l + 1 < layers) {
      tanh_in_place(out);
    }
  }
  ws.delta = ws.activations[layers] - targets;
  const double count = static_cast<double>(ws.delta.size());
  const double loss = ws.delta.squaredNorm() / count;
  ws.delta *= 2.0 / count;

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = ws.delta * ws.activations[l].transpose();
    grad.biases[l] = ws.delta.rowwise().sum();
    if (l > 0) {
      ws.back.noalias() = net.weights[l].transpose() * ws.delta;
      ws.delta = ws.back.array() * (1.0 - ws.activations[l].array().square());
    }
  }
  return loss;
}

struct AdamState
{
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
  long step{0};

  explicit AdamState(const Mlp & net)
  {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      m_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      v_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      m_b.push_back(Vector::Zero(net.biases[l].size()));
      v_b.push_back(Vector::Zero(net.biases[l].size()));
    }
  }
};

template <typename Param, typename Moment>
void adam_update(
  Param & param, const Param & grad, Moment & m, Moment & v, double lr, double c1, double c2)
{
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
}

void apply_gradient(
  Mlp & net, const MlpGradient & grad, const TrainConfig & config, AdamState & adam)
{
  if (config.optimizer == Optimizer::sgd) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      net.weights[l] -= config.learning_rate * grad.weights[l];
      net.biases[l] -= config.learning_rate * grad.biases[l];
    }
    return;
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam.step));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    adam_update(net.weights[l], grad.weights[l], adam.m_w[l], adam.v_w[l], config.learning_rate, c1, c2);
    adam_update(net.biases[l], grad.biases[l], adam.m_b[l], adam.v_b[l], config.learning_rate, c1, c2);
  }
}

Ensemble empty_ensemble(const TrainConfig & config)
{
  Ensemble ensemble;
  ensemble.input = Normalizer::identity(config.layer_sizes.front());
  ensemble.output = Normalizer::identity(config.layer_sizes.back());
  return ensemble;
}

}  // namespace

std::vector<int> Mlp::layer_sizes() const
{
  std::vector<int> sizes;
  if (weights.empty()) {
    return sizes;
  }
  sizes.push_back(static_cast<int>(weights.front().cols()));
  for (const auto & w : weights) {
    sizes.push_back(static_cast<int>(w.rows()));
  }
  return sizes;
}

std::size_t Mlp::parameter_count() const
{
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return count;
}

Matrix Mlp::forward(const Matrix & inputs) const
{
  Matrix a = inputs;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix z = weights[l] * a;
    z.colwise() += biases[l];
    if (l + 1 < weights.size()) {
      tanh_in_place(z);
    }
    a = std::move(z);
  }
  return a;
}

double mse_loss(const Mlp & net, const Matrix & inputs, const Matrix & targets)
{
  const Matrix diff = net.forward(inputs) - targets;
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

double mse_loss_and_gradient(
  const Mlp & net, const Matrix & inputs, const Matrix & targets, MlpGradient & grad)
{
  Workspace ws;
  return loss_and_gradient_into(net, inputs, targets, ws, grad);
}

Mlp random_mlp(std::span<const int> layer_sizes, double init_scale, std::mt19937_64 & rng)
{
  Mlp net;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = init_scale / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Matrix w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        w(r, c) = uniform(rng);
      }
    }
    Vector b(fan_out);
    for (int r = 0; r < fan_out; ++r) {
      b[r] = uniform(rng);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

const char * to_string(Optimizer optimizer) { return optimizer == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer optimizer_from_string(const std::string & text)
{
  if (text == "sgd") {
    return Optimizer::sgd;
  }
  if (text == "adam") {
    return Optimizer::adam;
  }
  throw std::invalid_argument("unknown optimizer '" + text + "'");
}

void validate(const TrainConfig & config)
{
  if (!(config.learning_rate > 0.0) || config.minibatch_size <= 0 || config.epochs_per_fit <= 0 ||
      !(config.weight_init_scale > 0.0)) {
    throw std::invalid_argument("training config fields must be positive");
  }
  if (config.members < 2) {
    throw std::invalid_argument("an ensemble needs at least two members");
  }
  if (config.layer_sizes.size() < 2 || config.layer_sizes.front() != sim::kObservationSize ||
      config.layer_sizes.back() != sim::kActionSize) {
    throw std::invalid_argument("layer sizes must run from 7 inputs to 2 outputs");
  }
  for (int size : config.layer_sizes) {
    if (size <= 0) {
      throw std::invalid_argument("layer sizes must be positive");
    }
  }
}

Normalizer Normalizer::identity(int dims)
{
  return {Vector::Zero(dims), Vector::Ones(dims)};
}

Normalizer Normalizer::fit(const Matrix & columns, double scale_floor)
{
  const double n = static_cast<double>(columns.cols());
  Normalizer norm;
  norm.mean = columns.rowwise().sum() / n;
  const Matrix centered = columns.colwise() - norm.mean;
  norm.scale = (centered.array().square().rowwise().sum() / n).sqrt().matrix();
  norm.scale = norm.scale.cwiseMax(scale_floor);
  return norm;
}

Vector Normalizer::apply(const Vector & raw) const
{
  return ((raw - mean).array() / scale.array()).matrix();
}

Matrix Normalizer::apply(const Matrix & raw) const
{
  return ((raw.colwise() - mean).array().colwise() / scale.array()).matrix();
}

Vector Normalizer::invert(const Vector & normalized) const
{
  return (normalized.array() * scale.array()).matrix() + mean;
}

Ensemble init_ensemble(const TrainConfig & config)
{
  validate(config);
  Ensemble ensemble = empty_ensemble(config);
  for (int m = 0; m < config.members; ++m) {
    std::mt19937_64 rng(derive_seed(config.rng_seed, {static_cast<std::uint64_t>(m)}));
    ensemble.members.push_back(random_mlp(config.layer_sizes, config.weight_init_scale, rng));
  }
  return ensemble;
}

Prediction predict(const Ensemble & ensemble, const sim::Observation & obs)
{
  const Vector x = ensemble.input.apply(observation_vector(obs));
  const std::size_t k = ensemble.members.size();
  Matrix outputs(sim::kActionSize, static_cast<Eigen::Index>(k));
  for (std::size_t m = 0; m < k; ++m) {
    outputs.col(static_cast<Eigen::Index>(m)) = ensemble.members[m].forward(x);
  }
  const Vector mean = outputs.rowwise().sum() / static_cast<double>(k);

  Prediction prediction;
  for (int d = 0; d < sim::kActionSize; ++d) {
    prediction.normalized_mean[d] = mean[d];
    double sum_sq = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double e = outputs(d, static_cast<Eigen::Index>(m)) - mean[d];
      sum_sq += e * e;
    }
    prediction.variance[d] = k > 1 ? sum_sq / static_cast<double>(k - 1) : 0.0;
  }
  const Vector action = ensemble.output.invert(mean);
  prediction.mean_action = sim::clamp_action({action[0], action[1]});
  return prediction;
}

double doubt_from_variance(const std::array<double, sim::kActionSize> & variance)
{
  double sum = 0.0;
  for (double v : variance) {
    sum += v * v;
  }
  return std::sqrt(sum);
}

double doubt(const Ensemble & ensemble, const sim::Observation & obs)
{
  return doubt_from_variance(predict(ensemble, obs).variance);
}

std::vector<double> doubt_batch(const Ensemble & ensemble, std::span<const sim::Observation> obs)
{
  const auto n = static_cast<Eigen::Index>(obs.size());
  Matrix raw(sim::kObservationSize, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    raw.col(i) = observation_vector(obs[static_cast<std::size_t>(i)]);
  }
  const Matrix x = ensemble.input.apply(raw);
  const std::size_t k = ensemble.members.size();
  std::vector<Matrix> outputs;
  outputs.reserve(k);
  Matrix mean = Matrix::Zero(sim::kActionSize, n);
  for (const auto & member : ensemble.members) {
    outputs.push_back(member.forward(x));
    mean += outputs.back();
  }
  mean /= static_cast<double>(k);
  Matrix sum_sq = Matrix::Zero(sim::kActionSize, n);
  for (const auto & out : outputs) {
    sum_sq.array() += (out - mean).array().square();
  }
  std::vector<double> result(obs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::array<double, sim::kActionSize> variance{};
    for (int d = 0; d < sim::kActionSize; ++d) {
      variance[d] = k > 1 ? sum_sq(d, i) / static_cast<double>(k - 1) : 0.0;
    }
    result[static_cast<std::size_t>(i)] = doubt_from_variance(variance);
  }
  return result;
}

Ensemble fit(const Dataset & dataset, const TrainConfig & config)
{
  validate(config);
  if (dataset.empty()) {
    throw std::invalid_argument("cannot fit an ensemble on an empty dataset");
  }
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Matrix raw_x(sim::kObservationSize, n);
  Matrix raw_y(sim::kActionSize, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto & sample = dataset.samples[static_cast<std::size_t>(i)];
    raw_x.col(i) = observation_vector(sample.observation);
    raw_y(0, i) = sample.label.steer;
    raw_y(1, i) = sample.label.speed_cmd;
  }

  Ensemble ensemble = empty_ensemble(config);
  ensemble.input = Normalizer::fit(raw_x, kInputScaleFloor);
  ensemble.output = Normalizer::fit(raw_y, kOutputScaleFloor);
  const Matrix x = ensemble.input.apply(raw_x);
  const Matrix y = ensemble.output.apply(raw_y);

  const Eigen::Index batch = std::min<Eigen::Index>(config.minibatch_size, n);
  Matrix batch_x(sim::kObservationSize, batch);
  Matrix batch_y(sim::kActionSize, batch);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

  for (int m = 0; m < config.members; ++m) {
    std::mt19937_64 rng(derive_seed(config.rng_seed, {static_cast<std::uint64_t>(m)}));
    Mlp net = random_mlp(config.layer_sizes, config.weight_init_scale, rng);
    AdamState adam(net);
    MlpGradient grad;
    Workspace ws;
    MemberLoss loss;
    loss.initial = mse_loss(net, x, y);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 0; epoch < config.epochs_per_fit; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0.0;
      Eigen::Index batches = 0;
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index count = std::min(batch, n - start);
        if (count != batch_x.cols()) {
          batch_x.resize(Eigen::NoChange, count);
          batch_y.resize(Eigen::NoChange, count);
        }
        for (Eigen::Index j = 0; j < count; ++j) {
          const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
          batch_x.col(j) = x.col(src);
          batch_y.col(j) = y.col(src);
        }
        epoch_loss += loss_and_gradient_into(net, batch_x, batch_y, ws, grad);
        ++batches;
        apply_gradient(net, grad, config, adam);
        if (batch_x.cols() != batch) {
          batch_x.resize(Eigen::NoChange, batch);
          batch_y.resize(Eigen::NoChange, batch);
        }
      }
      loss.epoch_mean.push_back(epoch_loss / static_cast<double>(batches));
    }
    loss.final = mse_loss(net, x, y);
    ensemble.members.push_back(std::move(net));
    ensemble.training_loss.push_back(std::move(loss));
  }
  return ensemble;
}

void write_checkpoint(std::ostream & out, const Ensemble & ensemble)
{
  if (ensemble.members.empty()) {
    throw std::invalid_argument("cannot checkpoint an empty ensemble");
  }
  auto write_vector = [&out](const char * tag, const Vector & v) {
    out << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out << ' ' << format_real(v[i]);
    }
    out << '\n';
  };
  const auto sizes = ensemble.members.front().layer_sizes();
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "members " << ensemble.members.size() << '\n';
  out << "layers " << sizes.size();
  for (int s : sizes) {
    out << ' ' << s;
  }
  out << '\n';
  write_vector("input_mean", ensemble.input.mean);
  write_vector("input_scale", ensemble.input.scale);
  write_vector("output_mean", ensemble.output.mean);
  write_vector("output_scale", ensemble.output.scale);
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const Mlp & net = ensemble.members[m];
    if (net.layer_sizes() != sizes) {
      throw std::invalid_argument("ensemble members disagree on layer sizes");
    }
    out << "member " << m << '\n';
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      const Matrix & w = net.weights[l];
      out << "weight " << l;
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          out << ' ' << format_real(w(r, c));
        }
      }
      out << '\n';
      out << "bias " << l;
      for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
        out << ' ' << format_real(net.biases[l][r]);
      }
      out << '\n';
    }
  }
}

Ensemble read_checkpoint(std::istream & in)
{
  std::string line;
  auto next_fields = [&](const char * expected) {
    if (!std::getline(in, line)) {
      throw FormatError(std::string("checkpoint truncated before '") + expected + "'");
    }
    auto fields = split_whitespace(line);
    if (fields.empty() || fields[0] != expected) {
      throw FormatError(std::string("checkpoint: expected '") + expected + "'");
    }
    return fields;
  };
  auto header = next_fields(kCheckpointMagic);
  if (header.size() != 2 || parse_integer(header[1]) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version");
  }
  auto members_line = next_fields("members");
  const long long members = parse_integer(members_line.at(1));
  auto layers_line = next_fields("layers");
  const long long layer_count = parse_integer(layers_line.at(1));
  if (layer_count < 2 || static_cast<long long>(layers_line.size()) != layer_count + 2 || members < 1) {
    throw FormatError("checkpoint: malformed layer or member count");
  }
  std::vector<int> sizes;
  for (long long i = 0; i < layer_count; ++i) {
    sizes.push_back(static_cast<int>(parse_integer(layers_line[static_cast<std::size_t>(i + 2)])));
    if (sizes.back() <= 0) {
      throw FormatError("checkpoint: non-positive layer size");
    }
  }
  auto read_vector = [&](const char * tag, Eigen::Index expected) {
    auto fields = next_fields(tag);
    if (static_cast<Eigen::Index>(fields.size()) != expected + 1) {
      throw FormatError(std::string("checkpoint: wrong length for ") + tag);
    }
    Vector v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
      v[i] = parse_real(fields[static_cast<std::size_t>(i + 1)]);
    }
    return v;
  };
  Ensemble ensemble;
  ensemble.input.mean = read_vector("input_mean", sizes.front());
  ensemble.input.scale = read_vector("input_scale", sizes.front());
  ensemble.output.mean = read_vector("output_mean", sizes.back());
  ensemble.output.scale = read_vector("output_scale", sizes.back());
  if ((ensemble.input.scale.array() <= 0.0).any() || (ensemble.output.scale.array() <= 0.0).any()) {
    throw FormatError("checkpoint: normalizer scales must be positive");
  }
  for (long long m = 0; m < members; ++m) {
    next_fields("member");
    Mlp net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      auto fields = next_fields("weight");
      const Eigen::Index rows = sizes[l + 1];
      const Eigen::Index cols = sizes[l];
      if (static_cast<Eigen::Index>(fields.size()) != rows * cols + 2) {
        throw FormatError("checkpoint: wrong weight count");
      }
      Matrix w(rows, cols);
      std::size_t k = 2;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          w(r, c) = parse_real(fields[k++]);
        }
      }
      auto bias_fields = next_fields("bias");
      if (static_cast<Eigen::Index>(bias_fields.size()) != rows + 2) {
        throw FormatError("checkpoint: wrong bias count");
      }
      Vector b(rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        b[r] = parse_real(bias_fields[static_cast<std::size_t>(r + 2)]);
      }
      if (!w.allFinite() || !b.allFinite()) {
        throw FormatError("checkpoint: non-finite parameter");
      }
      net.weights.push_back(std::move(w));
      net.biases.push_back(std::move(b));
    }
    ensemble.members.push_back(std::move(net));
  }
  return ensemble;
}

void save_checkpoint(const std::filesystem::path & path, const Ensemble & ensemble)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  write_checkpoint(out, ensemble);
}

Ensemble load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  return read_checkpoint(in);
}

}  // namespace hgdagger::nn
