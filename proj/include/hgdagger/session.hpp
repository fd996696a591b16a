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

#ifndef HGDAGGER__SESSION_HPP_
#define HGDAGGER__SESSION_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hgdagger/dataset.hpp"
#include "hgdagger/ensemble.hpp"
#include "hgdagger/experts.hpp"
#include "hgdagger/sim.hpp"

// Human-in-the-loop HG-DAgger collection sessions.
namespace hgdagger::session
{

enum class Phase { idle, novice_driving, expert_driving, paused, finished };
enum class ControlHolder { novice, expert };

enum class ControlEventKind {
  take_control,
  release_control,
  steer_input,
  speed_input,
  pause,
  resume
};

const char * to_string(Phase phase);
const char * to_string(ControlHolder holder);
const char * to_string(ControlEventKind kind);
Phase phase_from_string(const std::string & text);
ControlHolder control_holder_from_string(const std::string & text);
/// Throws FormatError for unknown kinds.
ControlEventKind control_event_kind_from_string(const std::string & text);

struct ControlEvent
{
  ControlEventKind kind{ControlEventKind::take_control};
  // Used by steer_input and speed_input only.
  double value{0.0};
  // Client wall clock in milliseconds.
  double client_time{0.0};
};

/// An event tagged with the session tick at which it was applied.
struct TimedEvent
{
  int tick{0};
  ControlEvent event;
};

struct ApplyResult
{
  bool accepted{false};
  // Set when control passed from the novice to the expert.
  bool took_control{false};
  std::string warning;
};

/// Phase automaton and the expert's pending action. Shared by live sessions
/// and offline replay so both interpret an event log identically.
class ControlState
{
public:
  ControlState() = default;

  void start();
  void finish();
  ApplyResult apply(const ControlEvent & event, const sim::EgoState & state);

  Phase phase() const { return phase_; }
  ControlHolder holder() const { return holder_; }
  bool driving() const
  {
    return phase_ == Phase::novice_driving || phase_ == Phase::expert_driving;
  }
  const sim::Action & pending() const { return pending_; }

private:
  Phase phase_{Phase::idle};
  ControlHolder holder_{ControlHolder::novice};
  Phase resume_phase_{Phase::novice_driving};
  sim::Action pending_{};
};

struct SessionOptions
{
  double dt{sim::kControlDt};
  double max_time{120.0};
  double road_length{500.0};
  int epoch{1};
  int rollout{0};
};

struct SessionState
{
  std::string session_id;
  Phase phase{Phase::idle};
  int tick{0};
  double sim_time{0.0};
  sim::EgoState state;
  // Unset once the ego has left the observable road extent.
  std::optional<sim::Observation> observation;
  double doubt{0.0};
  std::optional<double> tau;
  ControlHolder control_holder{ControlHolder::novice};
  // Safety events that began on the last tick.
  std::vector<sim::SafetyEvent> events;
  std::vector<std::string> warnings;
  std::size_t labels{0};
  std::size_t interventions{0};
};

/// One HG-DAgger rollout driven by external control events. Not thread
/// safe; callers serialize handle_event and tick.
class Session
{
public:
  Session(
    std::string session_id, std::uint64_t scenario_seed,
    std::shared_ptr<const nn::Ensemble> novice, std::optional<double> tau,
    SessionOptions options = {});

  const SessionState & start();
  const SessionState & handle_event(const ControlEvent & event);
  /// Advances one control step. Outside driving phases nothing changes.
  const SessionState & tick();

  const SessionState & state() const { return state_; }
  const sim::Scenario & scenario() const { return scenario_; }
  const sim::EgoState & start_state() const { return start_; }
  const SessionOptions & options() const { return options_; }
  const Dataset & dataset() const { return dataset_; }
  const InterventionLog & interventions() const { return interventions_; }
  const std::vector<TimedEvent> & event_log() const { return event_log_; }
  const std::vector<sim::EgoState> & trajectory() const { return trajectory_; }

private:
  void refresh_observation();

  sim::Scenario scenario_;
  sim::EgoState start_;
  std::shared_ptr<const nn::Ensemble> novice_;
  SessionOptions options_;
  ControlState control_;
  SessionState state_;
  nn::Prediction prediction_;
  Dataset dataset_;
  InterventionLog interventions_;
  std::vector<TimedEvent> event_log_;
  std::vector<sim::EgoState> trajectory_;
  bool off_road_{false};
};

/// Expert that replays a recorded event log: events tagged with tick t are
/// applied just before the gating decision of tick t.
class EventLogExpert : public experts::Expert
{
public:
  explicit EventLogExpert(std::vector<TimedEvent> log);

  void begin_rollout(const sim::Scenario & scenario, int rollout) override;
  experts::ExpertDecision decide(const experts::ExpertContext & context) override;

private:
  std::vector<TimedEvent> log_;
  std::size_t next_{0};
  ControlState control_;
};

/// Concurrent sessions keyed by opaque id. Each session is still driven by a
/// single writer.
class SessionRegistry
{
public:
  /// Returns the new session id.
  std::string create(
    std::uint64_t scenario_seed, std::shared_ptr<const nn::Ensemble> novice,
    std::optional<double> tau, SessionOptions options = {});

  /// Throws NotFound for unknown ids.
  std::shared_ptr<Session> get(const std::string & session_id) const;
  SessionState handle_event(const std::string & session_id, const ControlEvent & event);
  SessionState tick(const std::string & session_id);
  void remove(const std::string & session_id);
  std::size_t size() const;

private:
  mutable std::mutex mutex_;
  std::uint64_t next_id_{1};
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace hgdagger::session

#endif  // HGDAGGER__SESSION_HPP_
