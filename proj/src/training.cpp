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
#include "hgdagger/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hgdagger/errors.hpp"
#include "hgdagger/seeding.hpp"

namespace hgdagger::training
{

namespace
{

constexpr std::uint64_t kFitStream = 0x66697400;

}  // namespace

std::uint64_t ScenarioSource::seed(int stream, int epoch, int rollout) const
{
  return derive_seed(
    base_seed, {static_cast<std::uint64_t>(stream), static_cast<std::uint64_t>(epoch),
                static_cast<std::uint64_t>(rollout)});
}

sim::Scenario ScenarioSource::scenario(int stream, int epoch, int rollout) const
{
  return sim::generate_scenario(seed(stream, epoch, rollout), road_length);
}

sim::EgoState initial_state(std::uint64_t seed)
{
  std::mt19937_64 rng(derive_seed(seed, {0x1a1fULL}));
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> lateral(-0.5, 0.5);
  std::uniform_real_distribution<double> heading(-0.1, 0.1);
  std::uniform_real_distribution<double> speed(4.0, 5.0);
  sim::EgoState state;
  const sim::Lane lane = coin(rng) ? sim::Lane::left : sim::Lane::right;
  state.x = 0.0;
  state.y = sim::lane_center(lane) + lateral(rng);
  state.theta = heading(rng);
  state.s = speed(rng);
  return state;
}

void LoopConfig::validate() const
{
  if (epochs <= 0 || max_rollouts_per_epoch <= 0 || labels_per_epoch <= 0 || bc_labels <= 0 ||
      !(dt > 0.0) || !(max_episode_time > 0.0)) {
    throw std::invalid_argument("loop config fields must be positive");
  }
  if (road_length < sim::kMinRoadLength) {
    throw std::invalid_argument("loop road_length below the simulator minimum");
  }
  nn::validate(train);
}

LoopConfig LoopConfig::paper_scale()
{
  LoopConfig config;
  config.bc_labels = 10000;
  config.labels_per_epoch = 2000;
  config.epochs = 5;
  return config;
}

double DaggerSchedule::beta(int epoch) const
{
  return beta_0 * std::pow(decay, static_cast<double>(epoch - 1));
}

void DaggerSchedule::validate() const
{
  if (!(beta_0 >= 0.0 && beta_0 <= 1.0) || !(decay > 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("DAgger schedule needs beta_0 in [0,1] and decay in (0,1]");
  }
}

const char * to_string(Termination termination)
{
  switch (termination) {
    case Termination::end_of_road:
      return "end_of_road";
    case Termination::collision:
      return "collision";
    case Termination::timeout:
      return "timeout";
    case Termination::label_budget:
      return "label_budget";
    case Termination::left_road_extent:
      return "left_road_extent";
  }
  return "unknown";
}

RolloutTrace run_rollout(
  experts::Expert & expert, const nn::Ensemble * novice, const sim::Scenario & scenario,
  const sim::EgoState & start, const RolloutOptions & options, Dataset & labels,
  InterventionLog & interventions)
{
  if (options.mode != RolloutMode::expert_only && novice == nullptr) {
    throw std::invalid_argument("novice policy required outside expert-only rollouts");
  }
  RolloutTrace trace;
  trace.epoch = options.epoch;
  trace.rollout = options.rollout;
  trace.scenario_seed = scenario.rng_seed;
  trace.trajectory.push_back(start);

  std::mt19937_64 coin_rng(options.coin_seed);
  std::bernoulli_distribution coin(std::clamp(options.beta, 0.0, 1.0));
  expert.begin_rollout(scenario, options.rollout);

  sim::EgoState state = start;
  bool in_control = false;
  std::size_t recorded = 0;
  for (int tick = 0;; ++tick) {
    const double time = tick * options.dt;
    if (recorded >= options.label_budget) {
      trace.termination = Termination::label_budget;
      break;
    }
    if (state.x >= scenario.road_length) {
      trace.termination = Termination::end_of_road;
      break;
    }
    if (state.x < 0.0) {
      trace.termination = Termination::left_road_extent;
      break;
    }
    if (time >= options.max_time - 1e-9) {
      trace.termination = Termination::timeout;
      break;
    }

    StepRecord step;
    step.tick = tick;
    step.state = state;
    step.observation = sim::observe(state, scenario);
    if (novice != nullptr) {
      const nn::Prediction prediction = nn::predict(*novice, step.observation);
      step.novice_action = prediction.mean_action;
      step.doubt = nn::doubt_from_variance(prediction.variance);
    }
    const experts::ExpertDecision decision =
      expert.decide({tick, time, state, scenario, in_control});
    step.expert_action = sim::clamp_action(decision.action);

    switch (options.mode) {
      case RolloutMode::expert_only:
        step.expert_control = true;
        step.labeled = true;
        break;
      case RolloutMode::dagger:
        step.expert_control = coin(coin_rng);
        step.labeled = true;
        break;
      case RolloutMode::gated:
        step.expert_control = decision.wants_control;
        step.labeled = decision.wants_control;
        step.intervention = decision.wants_control && !in_control;
        break;
    }
    in_control = step.expert_control;
    step.executed = step.expert_control ? step.expert_action : step.novice_action;

    if (step.intervention) {
      interventions.entries.push_back({step.doubt, options.epoch, options.rollout, time});
    }
    if (step.labeled) {
      labels.append({step.observation, step.expert_action, options.epoch});
      ++recorded;
    }

    state = sim::step_dynamics(state, step.executed, options.dt);
    trace.steps.push_back(step);
    trace.trajectory.push_back(state);
    if (sim::colliding_obstacle(state, scenario)) {
      trace.termination = Termination::collision;
      break;
    }
  }
  return trace;
}

std::uint64_t fit_seed(const LoopConfig & config, int epoch)
{
  return derive_seed(config.rng_seed, {kFitStream, static_cast<std::uint64_t>(epoch)});
}

namespace
{

nn::TrainConfig train_config_for(const LoopConfig & config, int epoch)
{
  nn::TrainConfig train = config.train;
  train.rng_seed = fit_seed(config, epoch);
  return train;
}

}  // namespace

Dataset collect_expert_labels(
  experts::Expert & expert, const ScenarioSource & source, std::size_t label_count,
  const LoopConfig & config, int stream, std::vector<RolloutTrace> * traces)
{
  Dataset dataset;
  InterventionLog unused;
  int collisions = 0;
  int rollout = 0;
  std::ostringstream diagnostics;
  for (; rollout < config.max_rollouts_per_epoch && dataset.size() < label_count; ++rollout) {
    const sim::Scenario scenario = source.scenario(stream, 0, rollout);
    RolloutOptions options;
    options.mode = RolloutMode::expert_only;
    options.epoch = 0;
    options.rollout = rollout;
    options.label_budget = label_count - dataset.size();
    options.dt = config.dt;
    options.max_time = config.max_episode_time;
    RolloutTrace trace = run_rollout(
      expert, nullptr, scenario, initial_state(scenario.rng_seed), options, dataset, unused);
    if (trace.termination == Termination::collision) {
      ++collisions;
      diagnostics << " rollout " << rollout << " (scenario seed " << scenario.rng_seed
                  << ") collided at tick " << trace.steps.size() << ';';
    }
    if (traces != nullptr) {
      traces->push_back(std::move(trace));
    }
  }
  if (dataset.size() < label_count) {
    throw TrainingAborted(
      "expert collection stopped at " + std::to_string(dataset.size()) + " of " +
      std::to_string(label_count) + " labels after " + std::to_string(rollout) + " rollouts;" +
      diagnostics.str());
  }
  if (collisions == rollout) {
    throw TrainingAborted("expert failed to complete any rollout;" + diagnostics.str());
  }
  return dataset;
}

BcResult run_bc(
  experts::Expert & expert, const ScenarioSource & source, const LoopConfig & config,
  bool keep_traces)
{
  config.validate();
  BcResult result;
  result.dataset = collect_expert_labels(
    expert, source, static_cast<std::size_t>(config.bc_labels), config, kStreamBc,
    keep_traces ? &result.traces : nullptr);
  result.ensemble = nn::fit(result.dataset, train_config_for(config, 0));
  return result;
}

BcResult run_matched_bc(
  experts::Expert & expert, const Dataset & d_bc, std::size_t target_size,
  const ScenarioSource & source, const LoopConfig & config)
{
  config.validate();
  BcResult result;
  result.dataset = d_bc;
  if (target_size > d_bc.size()) {
    result.dataset.append(collect_expert_labels(
      expert, source, target_size - d_bc.size(), config, kStreamMatchedBc));
  }
  result.ensemble = nn::fit(result.dataset, train_config_for(config, config.epochs));
  return result;
}

DaggerResult run_dagger(
  experts::Expert & expert, const nn::Ensemble & novice_init, const Dataset & d_bc,
  const DaggerSchedule & schedule, const ScenarioSource & source, const LoopConfig & config,
  bool keep_traces)
{
  config.validate();
  schedule.validate();
  DaggerResult result;
  result.dataset = d_bc;
  nn::Ensemble novice = novice_init;
  InterventionLog unused;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double beta = schedule.beta(epoch);
    result.betas.push_back(beta);
    EpochStats stats;
    stats.epoch = epoch;
    stats.beta = beta;
    Dataset epoch_labels;
    for (int rollout = 0; rollout < config.max_rollouts_per_epoch &&
                          epoch_labels.size() < static_cast<std::size_t>(config.labels_per_epoch);
         ++rollout) {
      const sim::Scenario scenario = source.scenario(kStreamRefine, epoch, rollout);
      RolloutOptions options;
      options.mode = RolloutMode::dagger;
      options.epoch = epoch;
      options.rollout = rollout;
      options.label_budget = static_cast<std::size_t>(config.labels_per_epoch) - epoch_labels.size();
      options.dt = config.dt;
      options.max_time = config.max_episode_time;
      options.beta = beta;
      options.coin_seed = derive_seed(config.rng_seed, {0xc017ULL, static_cast<std::uint64_t>(epoch),
                                                        static_cast<std::uint64_t>(rollout)});
      RolloutTrace trace = run_rollout(
        expert, &novice, scenario, initial_state(scenario.rng_seed), options, epoch_labels, unused);
      ++stats.rollouts;
      stats.steps += trace.steps.size();
      for (const auto & step : trace.steps) {
        stats.expert_steps += step.expert_control ? 1 : 0;
      }
      if (keep_traces) {
        result.traces.push_back(std::move(trace));
      }
    }
    stats.labels = epoch_labels.size();
    result.dataset.append(epoch_labels);
    stats.dataset_size = result.dataset.size();
    novice = nn::fit(result.dataset, train_config_for(config, epoch));
    result.policies.push_back(novice);
    result.epochs.push_back(stats);
  }
  return result;
}

HgResult run_hg_dagger(
  experts::Expert & expert, const nn::Ensemble & novice_init, const Dataset & d_bc,
  const ScenarioSource & source, const LoopConfig & config, bool keep_traces)
{
  config.validate();
  if (d_bc.empty()) {
    throw std::invalid_argument("HG-DAgger needs a non-empty initial dataset");
  }
  HgResult result;
  result.dataset = d_bc;
  result.policy = novice_init;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t epoch_labels = 0;
    for (int rollout = 0; rollout < config.max_rollouts_per_epoch &&
                          epoch_labels < static_cast<std::size_t>(config.labels_per_epoch);
         ++rollout) {
      const sim::Scenario scenario = source.scenario(kStreamRefine, epoch, rollout);
      RolloutOptions options;
      options.mode = RolloutMode::gated;
      options.epoch = epoch;
      options.rollout = rollout;
      options.label_budget = static_cast<std::size_t>(config.labels_per_epoch) - epoch_labels;
      options.dt = config.dt;
      options.max_time = config.max_episode_time;
      Dataset rollout_labels;
      InterventionLog rollout_interventions;
      RolloutTrace trace = run_rollout(
        expert, &result.policy, scenario, initial_state(scenario.rng_seed), options,
        rollout_labels, rollout_interventions);
      epoch_labels += rollout_labels.size();
      result.dataset.append(rollout_labels);
      result.interventions.entries.insert(
        result.interventions.entries.end(), rollout_interventions.entries.begin(),
        rollout_interventions.entries.end());
      ++stats.rollouts;
      stats.steps += trace.steps.size();
      stats.interventions += rollout_interventions.size();
      for (const auto & step : trace.steps) {
        stats.expert_steps += step.expert_control ? 1 : 0;
      }
      if (keep_traces) {
        result.traces.push_back(std::move(trace));
      }
    }
    stats.labels = epoch_labels;
    stats.dataset_size = result.dataset.size();
    result.policy = nn::fit(result.dataset, train_config_for(config, epoch));
    result.policies.push_back(result.policy);
    result.epochs.push_back(stats);
  }

  if (result.interventions.empty()) {
    result.tau_status = TauStatus::no_interventions;
  } else {
    result.tau = compute_tau(result.interventions);
    result.tau_status = TauStatus::learned;
  }
  return result;
}

double compute_tau(const InterventionLog & log)
{
  if (log.empty()) {
    throw UndefinedThreshold("doubt threshold undefined: the intervention log is empty");
  }
  const std::size_t n = log.size();
  const std::size_t m = (n + 3) / 4;
  double sum = 0.0;
  for (std::size_t i = n - m; i < n; ++i) {
    sum += log.entries[i].doubt;
  }
  return sum / static_cast<double>(m);
}

}  // namespace hgdagger::training
