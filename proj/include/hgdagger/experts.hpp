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
#ifndef HGDAGGER__EXPERTS_HPP_
#define HGDAGGER__EXPERTS_HPP_

#include <optional>

#include "hgdagger/sim.hpp"

namespace hgdagger::experts
{

struct ExpertDecision
{
  sim::Action action;
  bool wants_control{false};
};

/// What an expert sees at one control step. The expert observes the full
/// state and the world, unlike the novice.
struct ExpertContext
{
  int tick{0};
  double time{0.0};
  const sim::EgoState & state;
  const sim::Scenario & scenario;
  bool in_control{false};
};

/// Shared interface of the scripted and the human expert: an action supply
/// plus the gating decision (take or keep control).
class Expert
{
public:
  virtual ~Expert() = default;

  /// Called before the first step of every rollout.
  virtual void begin_rollout(const sim::Scenario & /*scenario*/, int /*rollout*/) {}

  virtual ExpertDecision decide(const ExpertContext & context) = 0;
};

struct SyntheticExpertConfig
{
  double lookahead{25.0};
  double target_speed{5.0};
  double steer_gain_lateral{0.1};
  double steer_gain_heading{1.0};
  double intervene_lateral{1.0};
  double intervene_heading{0.25};
  double intervene_ttc{1.5};
  double release_lateral{0.3};
  double release_heading{0.08};
  double near_departure{2.6};

  /// Throws std::invalid_argument unless each release threshold is strictly
  /// below its intervene threshold.
  void validate() const;
};

/// Current lane unless an obstacle center lies within the lookahead ahead
/// in it, then the other lane.
sim::Lane target_lane(
  const sim::EgoState & state, const sim::Scenario & scenario, const SyntheticExpertConfig & config);

sim::Action synthetic_expert_action(
  const sim::EgoState & state, const sim::Scenario & scenario, const SyntheticExpertConfig & config);

/// Time until the ego box, moved straight along its heading at constant
/// speed, first overlaps an obstacle; empty if not within horizon seconds.
std::optional<double> straight_line_ttc(
  const sim::EgoState & state, const sim::Scenario & scenario, double horizon);

/// Two-threshold takeover/release automaton. Returns whether the expert
/// holds control after this step.
bool synthetic_gate(
  const sim::EgoState & state, const sim::Scenario & scenario, bool currently_in_control,
  const SyntheticExpertConfig & config);

class SyntheticExpert final : public Expert
{
public:
  explicit SyntheticExpert(SyntheticExpertConfig config = {});

  ExpertDecision decide(const ExpertContext & context) override;

  const SyntheticExpertConfig & config() const { return config_; }

private:
  SyntheticExpertConfig config_;
};

}  // namespace hgdagger::experts

#endif  // HGDAGGER__EXPERTS_HPP_
