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
#include "hgdagger/experts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hgdagger::experts
{

namespace
{

constexpr double kTtcStep = 0.05;

}  // namespace

void SyntheticExpertConfig::validate() const
{
  if (!(release_lateral < intervene_lateral) || !(release_heading < intervene_heading)) {
    throw std::invalid_argument("release thresholds must sit strictly below intervene thresholds");
  }
  if (!(lookahead > 0.0) || !(target_speed >= 0.0) || !(intervene_ttc > 0.0)) {
    throw std::invalid_argument("synthetic expert lookahead and ttc must be positive");
  }
}

sim::Lane target_lane(
  const sim::EgoState & state, const sim::Scenario & scenario, const SyntheticExpertConfig & config)
{
  const sim::Lane current = sim::lane_of(state.y);
  for (const auto & car : scenario.obstacles) {
    const double ahead = car.center_x - state.x;
    if (car.lane == current && ahead > 0.0 && ahead <= config.lookahead) {
      return sim::other_lane(current);
    }
  }
  return current;
}

sim::Action synthetic_expert_action(
  const sim::EgoState & state, const sim::Scenario & scenario, const SyntheticExpertConfig & config)
{
  const double y_target = sim::lane_center(target_lane(state, scenario, config));
  const double steer =
    config.steer_gain_lateral * (y_target - state.y) - config.steer_gain_heading * state.theta;
  return sim::clamp_action({steer, config.target_speed});
}

std::optional<double> straight_line_ttc(
  const sim::EgoState & state, const sim::Scenario & scenario, double horizon)
{
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  const int steps = static_cast<int>(std::ceil(horizon / kTtcStep));
  for (int i = 0; i <= steps; ++i) {
    const double t = std::min(horizon, i * kTtcStep);
    sim::EgoState moved = state;
    moved.x += state.s * t * c;
    moved.y += state.s * t * s;
    if (sim::colliding_obstacle(moved, scenario)) {
      return t;
    }
  }
  return std::nullopt;
}

bool synthetic_gate(
  const sim::EgoState & state, const sim::Scenario & scenario, bool currently_in_control,
  const SyntheticExpertConfig & config)
{
  const sim::Lane target = target_lane(state, scenario, config);
  const double error = sim::lane_center(target) - state.y;
  const bool ttc_trigger = straight_line_ttc(state, scenario, config.intervene_ttc).has_value();

  if (currently_in_control) {
    const bool settled = std::abs(error) < config.release_lateral &&
                         std::abs(state.theta) < config.release_heading && !ttc_trigger;
    return !settled;
  }

  // Lateral drift only counts inside the target lane and while the heading
  // is not already closing the error; a lane change in progress is not drift.
  const bool in_target_lane = sim::lane_of(state.y) == target;
  const bool closing = error * std::sin(state.theta) > 0.0;
  const bool drifting = in_target_lane && !closing && std::abs(error) > config.intervene_lateral;
  return drifting || std::abs(state.theta) > config.intervene_heading || ttc_trigger ||
         std::abs(state.y) > config.near_departure;
}

SyntheticExpert::SyntheticExpert(SyntheticExpertConfig config) : config_(config)
{
  config_.validate();
}

ExpertDecision SyntheticExpert::decide(const ExpertContext & context)
{
  return {
    synthetic_expert_action(context.state, context.scenario, config_),
    synthetic_gate(context.state, context.scenario, context.in_control, config_)};
}

}  // namespace hgdagger::experts
