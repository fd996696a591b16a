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
#ifndef HGDAGGER__ENSEMBLE_HPP_
#define HGDAGGER__ENSEMBLE_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hgdagger/dataset.hpp"
#include "hgdagger/sim.hpp"

namespace hgdagger::nn
{

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fully connected network with tanh hidden layers and a linear output.
/// weights[l] has shape (layer_sizes[l+1], layer_sizes[l]).
struct Mlp
{
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::vector<int> layer_sizes() const;
  std::size_t parameter_count() const;

  /// Inputs are column vectors; returns one output column per input column.
  Matrix forward(const Matrix & inputs) const;
};

struct MlpGradient
{
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Mean squared error over every entry of the output batch.
double mse_loss(const Mlp & net, const Matrix & inputs, const Matrix & targets);

/// Same loss, with its gradient by backpropagation written into grad.
double mse_loss_and_gradient(
  const Mlp & net, const Matrix & inputs, const Matrix & targets, MlpGradient & grad);

/// Uniform weights and biases in [-s, s] with s = init_scale / sqrt(fan_in).
Mlp random_mlp(std::span<const int> layer_sizes, double init_scale, std::mt19937_64 & rng);

enum class Optimizer { sgd, adam };

const char * to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string & text);

struct TrainConfig
{
  double learning_rate{1e-3};
  int minibatch_size{64};
  int epochs_per_fit{200};
  double weight_init_scale{1.0};
  std::uint64_t rng_seed{0};
  int members{5};
  std::vector<int> layer_sizes{sim::kObservationSize, 64, 64, sim::kActionSize};
  Optimizer optimizer{Optimizer::adam};
};

/// Throws std::invalid_argument on a non-positive field or a malformed
/// architecture.
void validate(const TrainConfig & config);

/// Per-dimension affine map to zero mean and unit scale.
struct Normalizer
{
  Vector mean;
  Vector scale;

  static Normalizer identity(int dims);
  /// Scales are floored so a constant column never produces a zero divisor.
  static Normalizer fit(const Matrix & columns, double scale_floor);

  Vector apply(const Vector & raw) const;
  Matrix apply(const Matrix & raw) const;
  Vector invert(const Vector & normalized) const;
};

// Lower bounds on normalizer scales, in raw units. Near-constant channels
// (speed under the synthetic expert) would otherwise dominate the input
// geometry.
inline constexpr double kInputScaleFloor = 0.5;
inline constexpr double kOutputScaleFloor = 0.05;

struct MemberLoss
{
  double initial{0.0};
  double final{0.0};
  std::vector<double> epoch_mean;
};

struct Ensemble
{
  std::vector<Mlp> members;
  Normalizer input;
  Normalizer output;
  // Filled by fit(); not persisted in checkpoints.
  std::vector<MemberLoss> training_loss;

  std::size_t size() const { return members.size(); }
};

Ensemble init_ensemble(const TrainConfig & config);

struct Prediction
{
  sim::Action mean_action;
  // Per-output sample variance across members (divisor K - 1), in
  // normalized output units.
  std::array<double, sim::kActionSize> variance{};
  std::array<double, sim::kActionSize> normalized_mean{};
};

/// Throws std::invalid_argument on a non-finite observation.
Prediction predict(const Ensemble & ensemble, const sim::Observation & obs);

/// Euclidean norm of the per-output variance vector.
double doubt_from_variance(const std::array<double, sim::kActionSize> & variance);

double doubt(const Ensemble & ensemble, const sim::Observation & obs);

/// Batched doubt, one value per observation.
std::vector<double> doubt_batch(const Ensemble & ensemble, std::span<const sim::Observation> obs);

/// Every member retrained from a fresh initialization on the whole dataset.
/// Throws std::invalid_argument for an empty dataset.
Ensemble fit(const Dataset & dataset, const TrainConfig & config);

// Text checkpoint: versioned header, layer sizes, normalizers, then per
// member one row-major line per weight matrix and bias vector.
inline constexpr const char * kCheckpointMagic = "hgdagger-ensemble";
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream & out, const Ensemble & ensemble);
Ensemble read_checkpoint(std::istream & in);
void save_checkpoint(const std::filesystem::path & path, const Ensemble & ensemble);
Ensemble load_checkpoint(const std::filesystem::path & path);

}  // namespace hgdagger::nn

#endif  // HGDAGGER__ENSEMBLE_HPP_
