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
#include "hgdagger/session.hpp"

#include <spdlog/spdlog.h>

#include <stdexcept>
#include <utility>

#include "hgdagger/errors.hpp"
#include "hgdagger/training.hpp"

namespace hgdagger::session
{

const char * to_string(Phase phase)
{
  switch (phase) {
    case Phase::idle:
      return "idle";
    case Phase::novice_driving:
      return "novice_driving";
    case Phase::expert_driving:
      return "expert_driving";
    case Phase::paused:
      return "paused";
    case Phase::finished:
      return "finished";
  }
  return "unknown";
}

const char * to_string(ControlHolder holder)
{
  return holder == ControlHolder::expert ? "expert" : "novice";
}

const char * to_string(ControlEventKind kind)
{
  switch (kind) {
    case ControlEventKind::take_control:
      return "take_control";
    case ControlEventKind::release_control:
      return "release_control";
    case ControlEventKind::steer_input:
      return "steer_input";
    case ControlEventKind::speed_input:
      return "speed_input";
    case ControlEventKind::pause:
      return "pause";
    case ControlEventKind::resume:
      return "resume";
  }
  return "unknown";
}

Phase phase_from_string(const std::string & text)
{
  for (Phase p : {Phase::idle, Phase::novice_driving, Phase::expert_driving, Phase::paused,
                  Phase::finished}) {
    if (text == to_string(p)) {
      return p;
    }
  }
  throw FormatError("unknown phase '" + text + "'");
}

ControlHolder control_holder_from_string(const std::string & text)
{
  if (text == "novice") {
    return ControlHolder::novice;
  }
  if (text == "expert") {
    return ControlHolder::expert;
  }
  throw FormatError("unknown control holder '" + text + "'");
}

ControlEventKind control_event_kind_from_string(const std::string & text)
{
  for (ControlEventKind k :
       {ControlEventKind::take_control, ControlEventKind::release_control,
        ControlEventKind::steer_input, ControlEventKind::speed_input, ControlEventKind::pause,
        ControlEventKind::resume}) {
    if (text == to_string(k)) {
      return k;
    }
  }
  throw FormatError("unknown control event kind '" + text + "'");
}

void ControlState::start()
{
  phase_ = Phase::novice_driving;
  holder_ = ControlHolder::novice;
  pending_ = {};
}

void ControlState::finish() { phase_ = Phase::finished; }

ApplyResult ControlState::apply(const ControlEvent & event, const sim::EgoState & state)
{
  ApplyResult result;
  auto ignore = [&]() {
    result.warning = std::string("ignored ") + to_string(event.kind) + " during " +
                     to_string(phase_);
    return result;
  };
  switch (event.kind) {
    case ControlEventKind::take_control:
      if (phase_ != Phase::novice_driving) {
        return ignore();
      }
      phase_ = Phase::expert_driving;
      holder_ = ControlHolder::expert;
      pending_ = {0.0, state.s};
      result.took_control = true;
      break;
    case ControlEventKind::release_control:
      if (phase_ != Phase::expert_driving) {
        return ignore();
      }
      phase_ = Phase::novice_driving;
      holder_ = ControlHolder::novice;
      break;
    case ControlEventKind::steer_input:
      if (phase_ != Phase::expert_driving) {
        return ignore();
      }
      pending_ = sim::clamp_action({event.value, pending_.speed_cmd});
      break;
    case ControlEventKind::speed_input:
      if (phase_ != Phase::expert_driving) {
        return ignore();
      }
      pending_ = sim::clamp_action({pending_.steer, event.value});
      break;
    case ControlEventKind::pause:
      if (!driving()) {
        return ignore();
      }
      resume_phase_ = phase_;
      phase_ = Phase::paused;
      break;
    case ControlEventKind::resume:
      if (phase_ != Phase::paused) {
        return ignore();
      }
      phase_ = resume_phase_;
      break;
  }
  result.accepted = true;
  return result;
}

Session::Session(
  std::string session_id, std::uint64_t scenario_seed,
  std::shared_ptr<const nn::Ensemble> novice, std::optional<double> tau, SessionOptions options)
: scenario_(sim::generate_scenario(scenario_seed, options.road_length)),
  start_(training::initial_state(scenario_seed)),
  novice_(std::move(novice)),
  options_(options)
{
  if (!novice_) {
    throw SessionRejected("session needs a novice policy");
  }
  if (!(options_.dt > 0.0) || !(options_.max_time > 0.0)) {
    throw SessionRejected("session dt and max_time must be positive");
  }
  state_.session_id = std::move(session_id);
  state_.tau = tau;
  state_.state = start_;
}

void Session::refresh_observation()
{
  if (state_.state.x < 0.0 || state_.state.x > scenario_.road_length) {
    state_.observation.reset();
    return;
  }
  state_.observation = sim::observe(state_.state, scenario_);
  prediction_ = nn::predict(*novice_, *state_.observation);
  state_.doubt = nn::doubt_from_variance(prediction_.variance);
}

const SessionState & Session::start()
{
  if (state_.phase != Phase::idle) {
    throw std::logic_error("session already started");
  }
  control_.start();
  trajectory_.assign(1, start_);
  state_.phase = control_.phase();
  state_.control_holder = control_.holder();
  refresh_observation();
  return state_;
}

const SessionState & Session::handle_event(const ControlEvent & event)
{
  if (state_.phase == Phase::idle || state_.phase == Phase::finished) {
    const std::string warning = std::string("ignored ") + to_string(event.kind) + " during " +
                                to_string(state_.phase);
    spdlog::warn("session {}: {}", state_.session_id, warning);
    state_.warnings.push_back(warning);
    return state_;
  }
  const ApplyResult result = control_.apply(event, state_.state);
  if (!result.accepted) {
    spdlog::warn("session {}: {}", state_.session_id, result.warning);
    state_.warnings.push_back(result.warning);
    return state_;
  }
  event_log_.push_back({state_.tick, event});
  if (result.took_control) {
    interventions_.entries.push_back(
      {state_.doubt, options_.epoch, options_.rollout, state_.sim_time});
  }
  state_.phase = control_.phase();
  state_.control_holder = control_.holder();
  state_.interventions = interventions_.entries.size();
  return state_;
}

const SessionState & Session::tick()
{
  state_.events.clear();
  state_.warnings.clear();
  if (!control_.driving()) {
    return state_;
  }
  sim::Action executed;
  if (control_.holder() == ControlHolder::expert) {
    executed = sim::clamp_action(control_.pending());
    dataset_.append({*state_.observation, executed, options_.epoch});
  } else {
    executed = prediction_.mean_action;
  }
  state_.state = sim::step_dynamics(state_.state, executed, options_.dt);
  trajectory_.push_back(state_.state);
  ++state_.tick;
  state_.sim_time = state_.tick * options_.dt;
  state_.labels = dataset_.size();

  const auto hit = sim::colliding_obstacle(state_.state, scenario_);
  if (hit) {
    sim::SafetyEvent event;
    event.kind = sim::EventKind::collision;
    event.start_time = state_.sim_time;
    event.position = state_.state.x;
    event.obstacle = *hit;
    state_.events.push_back(event);
  }
  const bool off_road = sim::is_off_road(state_.state);
  if (off_road && !off_road_) {
    sim::SafetyEvent event;
    event.kind = sim::EventKind::road_departure;
    event.start_time = state_.sim_time;
    event.position = state_.state.x;
    state_.events.push_back(event);
  }
  off_road_ = off_road;

  refresh_observation();
  if (
    hit || state_.state.x >= scenario_.road_length || state_.state.x < 0.0 ||
    state_.sim_time >= options_.max_time - 1e-9) {
    control_.finish();
  }
  state_.phase = control_.phase();
  state_.control_holder = control_.holder();
  return state_;
}

EventLogExpert::EventLogExpert(std::vector<TimedEvent> log) : log_(std::move(log)) {}

void EventLogExpert::begin_rollout(const sim::Scenario & /*scenario*/, int /*rollout*/)
{
  next_ = 0;
  control_ = ControlState();
  control_.start();
}

experts::ExpertDecision EventLogExpert::decide(const experts::ExpertContext & context)
{
  while (next_ < log_.size() && log_[next_].tick <= context.tick) {
    control_.apply(log_[next_].event, context.state);
    ++next_;
  }
  experts::ExpertDecision decision;
  decision.wants_control = control_.holder() == ControlHolder::expert;
  decision.action = control_.pending();
  return decision;
}

std::string SessionRegistry::create(
  std::uint64_t scenario_seed, std::shared_ptr<const nn::Ensemble> novice,
  std::optional<double> tau, SessionOptions options)
{
  std::lock_guard lock(mutex_);
  std::string id = "session-" + std::to_string(next_id_++);
  auto session = std::make_shared<Session>(id, scenario_seed, std::move(novice), tau, options);
  session->start();
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Session> SessionRegistry::get(const std::string & session_id) const
{
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw NotFound("unknown session '" + session_id + "'");
  }
  return it->second;
}

SessionState SessionRegistry::handle_event(
  const std::string & session_id, const ControlEvent & event)
{
  return get(session_id)->handle_event(event);
}

SessionState SessionRegistry::tick(const std::string & session_id)
{
  return get(session_id)->tick();
}

void SessionRegistry::remove(const std::string & session_id)
{
  std::lock_guard lock(mutex_);
  if (sessions_.erase(session_id) == 0) {
    throw NotFound("unknown session '" + session_id + "'");
  }
}

std::size_t SessionRegistry::size() const
{
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace hgdagger::session
