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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hgdagger/ensemble.hpp"

namespace hgdagger::nn
{
namespace
{

sim::Observation random_observation(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {1.5 * u(rng), 0.3 * u(rng), 5.0 + u(rng), 1.5 + u(rng), 1.5 - u(rng), 30 + 20 * u(rng),
          30 + 20 * u(rng)};
}

Eigen::VectorXd column(const sim::Observation & obs)
{
  const auto a = obs.to_array();
  return Eigen::Map<const Eigen::VectorXd>(a.data(), sim::kObservationSize);
}

// Member whose output is the constant (a, b) regardless of input.
Mlp constant_member(double a, double b)
{
  Mlp m;
  m.weights.push_back(Matrix::Zero(3, sim::kObservationSize));
  m.biases.push_back(Vector::Zero(3));
  m.weights.push_back(Matrix::Zero(2, 3));
  Vector bias(2);
  bias << a, b;
  m.biases.push_back(bias);
  return m;
}

Ensemble identity_ensemble(std::vector<Mlp> members)
{
  Ensemble e;
  e.members = std::move(members);
  e.input = Normalizer::identity(sim::kObservationSize);
  e.output = Normalizer::identity(sim::kActionSize);
  return e;
}

TEST(Mlp, BackpropMatchesCentralDifferences)
{
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes{width(rng)};
    const int hidden = 1 + trial % 2;
    for (int h = 0; h < hidden; ++h) sizes.push_back(width(rng));
    sizes.push_back(width(rng));
    Mlp net = random_mlp(sizes, 1.0, rng);
    Matrix x(sizes.front(), 4), y(sizes.back(), 4);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (int i = 0; i < y.size(); ++i) y.data()[i] = u(rng);

    MlpGradient grad;
    mse_loss_and_gradient(net, x, y, grad);

    const double h = 1e-6;
    auto check = [&](double & param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = mse_loss(net, x, y);
      param = saved - h;
      const double down = mse_loss(net, x, y);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-4) << "trial " << trial;
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      for (int i = 0; i < net.weights[l].size(); ++i) {
        check(net.weights[l].data()[i], grad.weights[l].data()[i]);
      }
      for (int i = 0; i < net.biases[l].size(); ++i) {
        check(net.biases[l].data()[i], grad.biases[l].data()[i]);
      }
    }
  }
}

TEST(Predict, TwoMemberMeanAndVariance)
{
  const Ensemble e = identity_ensemble({constant_member(0, 0), constant_member(2, 0)});
  const Prediction p = predict(e, {});
  EXPECT_EQ(p.normalized_mean[0], 1.0);
  EXPECT_EQ(p.normalized_mean[1], 0.0);
  EXPECT_EQ(p.variance[0], 2.0);
  EXPECT_EQ(p.variance[1], 0.0);
}

TEST(Predict, DoubtFromVarianceThreeFour) { EXPECT_EQ(doubt_from_variance({3.0, 4.0}), 5.0); }

TEST(Predict, IdenticalMembersHaveZeroDoubt)
{
  std::mt19937_64 rng(1);
  const std::vector<int> sizes{7, 8, 2};
  const Mlp m = random_mlp(sizes, 1.0, rng);
  const Ensemble e = identity_ensemble({m, m, m});
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(doubt(e, random_observation(rng)), 0.0, 1e-12);
  }
}

TEST(Predict, MeanAndDoubtMatchBruteForce)
{
  TrainConfig config;
  config.layer_sizes = {7, 16, 16, 2};
  config.rng_seed = 4;
  Ensemble e = init_ensemble(config);
  e.input.mean = Vector::Constant(7, 0.3);
  e.input.scale = Vector::Constant(7, 2.0);
  e.output.mean = Vector::Constant(2, -0.1);
  e.output.scale = Vector::Constant(2, 0.5);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const sim::Observation obs = random_observation(rng);
    const Vector z = ((column(obs).array() - 0.3) / 2.0).matrix();
    std::vector<Vector> outs;
    for (const auto & m : e.members) outs.push_back(m.forward(z).col(0));
    Vector mean = Vector::Zero(2);
    for (const auto & o : outs) mean += o;
    mean /= static_cast<double>(outs.size());
    Vector var = Vector::Zero(2);
    for (const auto & o : outs) var += (o - mean).cwiseAbs2();
    var /= static_cast<double>(outs.size() - 1);

    const Prediction p = predict(e, obs);
    EXPECT_NEAR(p.normalized_mean[0], mean[0], 1e-12);
    EXPECT_NEAR(p.normalized_mean[1], mean[1], 1e-12);
    EXPECT_NEAR(doubt(e, obs), var.norm(), 1e-12);
    const sim::Action raw{mean[0] * 0.5 - 0.1, mean[1] * 0.5 - 0.1};
    EXPECT_NEAR(p.mean_action.steer, sim::clamp_action(raw).steer, 1e-12);
    EXPECT_NEAR(p.mean_action.speed_cmd, sim::clamp_action(raw).speed_cmd, 1e-12);
  }
}

TEST(Predict, MemberOrderDoesNotMatter)
{
  TrainConfig config;
  config.layer_sizes = {7, 8, 2};
  const Ensemble e = init_ensemble(config);
  Ensemble r = e;
  std::reverse(r.members.begin(), r.members.end());
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto obs = random_observation(rng);
    EXPECT_NEAR(doubt(e, obs), doubt(r, obs), 1e-12);
    EXPECT_NEAR(predict(e, obs).mean_action.steer, predict(r, obs).mean_action.steer, 1e-12);
  }
}

TEST(Predict, BatchedDoubtMatchesSingle)
{
  TrainConfig config;
  config.layer_sizes = {7, 8, 2};
  const Ensemble e = init_ensemble(config);
  std::mt19937_64 rng(3);
  std::vector<sim::Observation> obs;
  for (int i = 0; i < 40; ++i) obs.push_back(random_observation(rng));
  const auto batch = doubt_batch(e, obs);
  ASSERT_EQ(batch.size(), obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_NEAR(batch[i], doubt(e, obs[i]), 1e-12);
  }
}

TEST(Predict, RejectsNonFiniteObservation)
{
  const Ensemble e = init_ensemble(TrainConfig{});
  sim::Observation obs;
  obs.y = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(predict(e, obs), std::invalid_argument);
}

TEST(Init, SeededMembersDifferAndRespectBounds)
{
  TrainConfig config;
  config.rng_seed = 12;
  const Ensemble a = init_ensemble(config);
  const Ensemble b = init_ensemble(config);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t l = 0; l < a.members[k].weights.size(); ++l) {
      EXPECT_EQ(a.members[k].weights[l], b.members[k].weights[l]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(a.members[k].weights[l].cols()));
      EXPECT_LE(a.members[k].weights[l].cwiseAbs().maxCoeff(), bound);
    }
    for (std::size_t j = k + 1; j < a.size(); ++j) {
      EXPECT_NE(a.members[k].weights[0], a.members[j].weights[0]);
    }
  }
}

TEST(Config, RejectsBadFields)
{
  TrainConfig config;
  config.learning_rate = 0.0;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = TrainConfig{};
  config.members = 1;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = TrainConfig{};
  config.layer_sizes = {6, 64, 2};
  EXPECT_THROW(validate(config), std::invalid_argument);
}

Dataset linear_dataset(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Dataset d;
  for (int i = 0; i < n; ++i) {
    const auto obs = random_observation(rng);
    d.append({obs, {0.2 * obs.y - 0.5 * obs.theta, 4.0 + 0.1 * obs.d_left / 10.0}, 0});
  }
  return d;
}

TrainConfig small_config()
{
  TrainConfig config;
  config.layer_sizes = {7, 16, 16, 2};
  config.epochs_per_fit = 60;
  config.members = 3;
  config.rng_seed = 21;
  return config;
}

TEST(Fit, ConstantTargetIsLearned)
{
  Dataset d;
  const sim::Observation obs{-1.5, 0.0, 5.0, 1.5, 1.5, 30.0, 60.0};
  for (int i = 0; i < 64; ++i) d.append({obs, {0.1, 5.0}, 0});
  TrainConfig config = small_config();
  config.epochs_per_fit = 300;
  const Ensemble e = fit(d, config);
  const Prediction p = predict(e, obs);
  EXPECT_LT(std::abs(p.normalized_mean[0]), 1e-2);
  EXPECT_LT(std::abs(p.normalized_mean[1]), 1e-2);
}

TEST(Fit, LossDropsOnLinearData)
{
  const Ensemble e = fit(linear_dataset(200, 5), small_config());
  ASSERT_EQ(e.training_loss.size(), 3u);
  for (const auto & loss : e.training_loss) {
    EXPECT_LT(loss.final, loss.initial);
    EXPECT_LT(loss.epoch_mean.back(), loss.epoch_mean.front());
  }
}

TEST(Fit, BitReproducible)
{
  const Dataset d = linear_dataset(150, 6);
  const Ensemble a = fit(d, small_config());
  const Ensemble b = fit(d, small_config());
  std::ostringstream sa, sb;
  write_checkpoint(sa, a);
  write_checkpoint(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Fit, RejectsEmptyDataset) { EXPECT_THROW(fit(Dataset{}, small_config()), std::invalid_argument); }

TEST(Checkpoint, RoundTripIsExact)
{
  const Ensemble e = fit(linear_dataset(100, 7), small_config());
  std::stringstream io;
  write_checkpoint(io, e);
  const Ensemble r = read_checkpoint(io);
  ASSERT_EQ(r.size(), e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    for (std::size_t l = 0; l < e.members[k].weights.size(); ++l) {
      EXPECT_EQ(r.members[k].weights[l], e.members[k].weights[l]);
      EXPECT_EQ(r.members[k].biases[l], e.members[k].biases[l]);
    }
  }
  EXPECT_EQ(r.input.mean, e.input.mean);
  EXPECT_EQ(r.output.scale, e.output.scale);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto obs = random_observation(rng);
    EXPECT_EQ(doubt(r, obs), doubt(e, obs));
  }
}

TEST(Checkpoint, RejectsWrongMagic)
{
  std::istringstream in("not-a-checkpoint 1\n");
  EXPECT_THROW(read_checkpoint(in), std::exception);
}

TEST(DatasetFile, RoundTripIsExact)
{
  const Dataset d = linear_dataset(50, 9);
  std::stringstream io;
  write_dataset(io, d);
  const std::string first = io.str();
  const Dataset r = read_dataset(io);
  std::ostringstream again;
  write_dataset(again, r);
  EXPECT_EQ(again.str(), first);
  ASSERT_EQ(r.size(), d.size());
  EXPECT_EQ(r.samples[3].label, d.samples[3].label);
  EXPECT_EQ(r.samples[3].observation.d_left, d.samples[3].observation.d_left);
}

TEST(InterventionFile, RoundTripIsExact)
{
  InterventionLog log;
  log.entries = {{0.125, 1, 0, 2.5}, {1.0 / 3.0, 2, 7, 10.1}};
  std::stringstream io;
  write_intervention_log(io, log);
  const InterventionLog r = read_intervention_log(io);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.entries[1].doubt, 1.0 / 3.0);
  EXPECT_EQ(r.entries[1].rollout, 7);
  EXPECT_EQ(r.entries[0].time, 2.5);
}

}  // namespace
}  // namespace hgdagger::nn
