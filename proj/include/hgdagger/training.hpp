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
#ifndef HGDAGGER__TRAINING_HPP_
#define HGDAGGER__TRAINING_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "hgdagger/dataset.hpp"
#include "hgdagger/ensemble.hpp"
#include "hgdagger/experts.hpp"
#include "hgdagger/sim.hpp"

namespace hgdagger::training
{

/// Deterministic stream of training scenarios and start states keyed by
/// (stream, epoch, rollout).
struct ScenarioSource
{
  std::uint64_t base_seed{0};
  double road_length{500.0};

  std::uint64_t seed(int stream, int epoch, int rollout) const;
  sim::Scenario scenario(int stream, int epoch, int rollout) const;
};

/// Start of a training rollout: x = 0 in a random lane, lightly perturbed.
sim::EgoState initial_state(std::uint64_t seed);

struct LoopConfig
{
  int epochs{5};
  int max_rollouts_per_epoch{200};
  int labels_per_epoch{1000};
  int bc_labels{4000};
  std::uint64_t rng_seed{0};
  double road_length{500.0};
  double dt{sim::kControlDt};
  double max_episode_time{120.0};
  nn::TrainConfig train;

  /// Throws std::invalid_argument on a non-positive field.
  void validate() const;
  static LoopConfig paper_scale();
};

struct DaggerSchedule
{
  double beta_0{0.85};
  double decay{0.85};

  /// beta_0 * decay^(epoch - 1), epochs counted from 1.
  double beta(int epoch) const;
  void validate() const;
};

enum class RolloutMode { expert_only, dagger, gated };

enum class Termination { end_of_road, collision, timeout, label_budget, left_road_extent };

const char * to_string(Termination termination);

struct StepRecord
{
  int tick{0};
  sim::EgoState state;
  sim::Observation observation;
  sim::Action expert_action;
  sim::Action novice_action;
  sim::Action executed;
  bool expert_control{false};
  bool labeled{false};
  bool intervention{false};
  double doubt{0.0};
};

struct RolloutTrace
{
  int epoch{0};
  int rollout{0};
  std::uint64_t scenario_seed{0};
  std::vector<StepRecord> steps;
  // States visited, including the one after the last step.
  std::vector<sim::EgoState> trajectory;
  Termination termination{Termination::end_of_road};
};

struct RolloutOptions
{
  RolloutMode mode{RolloutMode::gated};
  int epoch{0};
  int rollout{0};
  std::size_t label_budget{std::numeric_limits<std::size_t>::max()};
  double dt{sim::kControlDt};
  double max_time{120.0};
  double beta{1.0};
  std::uint64_t coin_seed{0};
};

/// One data-gathering rollout. Labels are appended to labels (tagged with
/// the epoch) and takeover doubts to interventions. The novice may be null
/// only in expert_only mode.
RolloutTrace run_rollout(
  experts::Expert & expert, const nn::Ensemble * novice, const sim::Scenario & scenario,
  const sim::EgoState & start, const RolloutOptions & options, Dataset & labels,
  InterventionLog & interventions);

struct EpochStats
{
  int epoch{0};
  int rollouts{0};
  std::size_t labels{0};
  std::size_t dataset_size{0};
  std::size_t interventions{0};
  std::size_t steps{0};
  std::size_t expert_steps{0};
  double beta{0.0};
};

struct BcResult
{
  Dataset dataset;
  nn::Ensemble ensemble;
  std::vector<RolloutTrace> traces;
};

/// Expert-only collection of exactly label_count labels.
Dataset collect_expert_labels(
  experts::Expert & expert, const ScenarioSource & source, std::size_t label_count,
  const LoopConfig & config, int stream, std::vector<RolloutTrace> * traces = nullptr);

BcResult run_bc(
  experts::Expert & expert, const ScenarioSource & source, const LoopConfig & config,
  bool keep_traces = false);

/// Behavioral cloning at a matched label budget: d_bc topped up with fresh
/// expert-only labels until it holds target_size samples, then refit with
/// the seed of the final refinement epoch.
BcResult run_matched_bc(
  experts::Expert & expert, const Dataset & d_bc, std::size_t target_size,
  const ScenarioSource & source, const LoopConfig & config);

struct DaggerResult
{
  std::vector<nn::Ensemble> policies;
  Dataset dataset;
  std::vector<double> betas;
  std::vector<EpochStats> epochs;
  std::vector<RolloutTrace> traces;
};

DaggerResult run_dagger(
  experts::Expert & expert, const nn::Ensemble & novice_init, const Dataset & d_bc,
  const DaggerSchedule & schedule, const ScenarioSource & source, const LoopConfig & config,
  bool keep_traces = false);

enum class TauStatus { learned, no_interventions };

struct HgResult
{
  nn::Ensemble policy;
  std::vector<nn::Ensemble> policies;
  Dataset dataset;
  InterventionLog interventions;
  std::optional<double> tau;
  TauStatus tau_status{TauStatus::no_interventions};
  std::vector<EpochStats> epochs;
  std::vector<RolloutTrace> traces;
};

HgResult run_hg_dagger(
  experts::Expert & expert, const nn::Ensemble & novice_init, const Dataset & d_bc,
  const ScenarioSource & source, const LoopConfig & config, bool keep_traces = false);

/// Mean doubt over the last ceil(N/4) log entries. Throws
/// UndefinedThreshold on an empty log.
double compute_tau(const InterventionLog & log);

/// Seed used for the ensemble fit that closes the given epoch (0 = BC).
std::uint64_t fit_seed(const LoopConfig & config, int epoch);

// Stream ids for ScenarioSource.
inline constexpr int kStreamBc = 0;
// DAgger and HG-DAgger draw the same scenarios so only the gating differs.
inline constexpr int kStreamRefine = 1;
inline constexpr int kStreamMatchedBc = 2;

}  // namespace hgdagger::training

#endif  // HGDAGGER__TRAINING_HPP_
