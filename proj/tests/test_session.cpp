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

#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgdagger/errors.hpp"
#include "hgdagger/protocol.hpp"
#include "hgdagger/server.hpp"
#include "hgdagger/session.hpp"
#include "hgdagger/training.hpp"

namespace hgdagger::session
{
namespace
{

std::shared_ptr<const nn::Ensemble> novice()
{
  static const auto policy = [] {
    nn::TrainConfig c;
    c.layer_sizes = {7, 16, 2};
    c.members = 3;
    c.rng_seed = 42;
    nn::Ensemble e = nn::init_ensemble(c);
    e.input.mean << 0, 0, 5, 1.5, 1.5, 30, 30;
    e.input.scale << 1.5, 0.3, 1, 1.5, 1.5, 20, 20;
    e.output.mean << 0, 5;
    e.output.scale << 0.02, 0.05;
    return std::make_shared<const nn::Ensemble>(e);
  }();
  return policy;
}

ControlEvent ev(ControlEventKind kind, double value = 0.0) { return {kind, value, 0.0}; }

SessionOptions short_options()
{
  SessionOptions o;
  o.max_time = 12.0;
  o.road_length = 100.0;
  return o;
}

TEST(ControlState, TransitionsAndWarnings)
{
  ControlState c;
  const sim::EgoState st{0, -1.5, 0, 4.5};
  EXPECT_FALSE(c.apply(ev(ControlEventKind::take_control), st).accepted);
  c.start();
  EXPECT_EQ(c.phase(), Phase::novice_driving);
  const auto release = c.apply(ev(ControlEventKind::release_control), st);
  EXPECT_FALSE(release.accepted);
  EXPECT_FALSE(release.warning.empty());
  EXPECT_EQ(c.holder(), ControlHolder::novice);

  const auto take = c.apply(ev(ControlEventKind::take_control), st);
  EXPECT_TRUE(take.accepted);
  EXPECT_TRUE(take.took_control);
  EXPECT_EQ(c.phase(), Phase::expert_driving);
  EXPECT_EQ(c.pending(), (sim::Action{0.0, 4.5}));

  c.apply(ev(ControlEventKind::steer_input, 2.0), st);
  c.apply(ev(ControlEventKind::steer_input, -0.1), st);
  c.apply(ev(ControlEventKind::speed_input, 20.0), st);
  EXPECT_EQ(c.pending(), (sim::Action{-0.1, sim::kSpeedMax}));

  EXPECT_TRUE(c.apply(ev(ControlEventKind::pause), st).accepted);
  EXPECT_FALSE(c.driving());
  EXPECT_FALSE(c.apply(ev(ControlEventKind::steer_input, 0.2), st).accepted);
  EXPECT_TRUE(c.apply(ev(ControlEventKind::resume), st).accepted);
  EXPECT_EQ(c.phase(), Phase::expert_driving);
  EXPECT_TRUE(c.apply(ev(ControlEventKind::release_control), st).accepted);
  EXPECT_EQ(c.holder(), ControlHolder::novice);
}

TEST(ControlState, EnumStringsRoundTrip)
{
  for (auto k : {ControlEventKind::take_control, ControlEventKind::release_control,
                 ControlEventKind::steer_input, ControlEventKind::speed_input,
                 ControlEventKind::pause, ControlEventKind::resume}) {
    EXPECT_EQ(control_event_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(control_event_kind_from_string("grab"), FormatError);
  EXPECT_EQ(phase_from_string("expert_driving"), Phase::expert_driving);
}

TEST(Session, StartsInNoviceDriving)
{
  Session s("a", 3, novice(), 0.1, short_options());
  EXPECT_EQ(s.state().phase, Phase::idle);
  const auto & st = s.start();
  EXPECT_EQ(st.phase, Phase::novice_driving);
  EXPECT_EQ(st.tick, 0);
  EXPECT_TRUE(st.observation.has_value());
  EXPECT_EQ(st.control_holder, ControlHolder::novice);
}

TEST(Session, RejectsMissingPolicy)
{
  EXPECT_THROW(Session("a", 3, nullptr, std::nullopt), SessionRejected);
  SessionOptions bad;
  bad.dt = 0.0;
  EXPECT_THROW(Session("a", 3, novice(), std::nullopt, bad), SessionRejected);
}

TEST(Session, TakeControlLogsOneIntervention)
{
  Session s("a", 3, novice(), 0.1, short_options());
  s.start();
  s.tick();
  const double doubt_before = s.state().doubt;
  s.handle_event(ev(ControlEventKind::take_control));
  ASSERT_EQ(s.interventions().size(), 1u);
  EXPECT_EQ(s.interventions().entries[0].doubt, doubt_before);
  EXPECT_EQ(s.state().control_holder, ControlHolder::expert);
  s.handle_event(ev(ControlEventKind::take_control));
  EXPECT_EQ(s.interventions().size(), 1u);
  EXPECT_FALSE(s.state().warnings.empty());
}

TEST(Session, ReleaseDuringNoviceOnlyWarns)
{
  Session s("a", 3, novice(), 0.1, short_options());
  s.start();
  const auto & st = s.handle_event(ev(ControlEventKind::release_control));
  EXPECT_EQ(st.phase, Phase::novice_driving);
  ASSERT_EQ(st.warnings.size(), 1u);
  EXPECT_TRUE(s.event_log().empty());
  EXPECT_TRUE(s.interventions().empty());
}

TEST(Session, NoviceTicksExecuteEnsembleMean)
{
  Session s("a", 5, novice(), 0.1, short_options());
  s.start();
  for (int i = 0; i < 20 && s.state().phase == Phase::novice_driving; ++i) {
    const sim::EgoState before = s.state().state;
    const sim::Action a = nn::predict(*novice(), *s.state().observation).mean_action;
    const sim::EgoState expected = sim::step_dynamics(before, a, 0.1);
    s.tick();
    EXPECT_EQ(s.state().state.x, expected.x);
    EXPECT_EQ(s.state().state.y, expected.y);
    EXPECT_EQ(s.state().labels, 0u);
  }
}

TEST(Session, LabelsExactlyTheExpertTicks)
{
  Session s("a", 6, novice(), 0.1, short_options());
  s.start();
  std::vector<int> expert_ticks;
  for (int i = 0; i < 60 && s.state().phase != Phase::finished; ++i) {
    if (i == 5 || i == 30) s.handle_event(ev(ControlEventKind::take_control));
    if (i == 12 || i == 41) s.handle_event(ev(ControlEventKind::release_control));
    if (s.state().control_holder == ControlHolder::expert) expert_ticks.push_back(i);
    const std::size_t before = s.dataset().size();
    s.tick();
    EXPECT_EQ(s.dataset().size() - before, s.state().control_holder == ControlHolder::expert ? 1u : 0u);
  }
  EXPECT_EQ(s.dataset().size(), expert_ticks.size());
  EXPECT_EQ(s.interventions().size(), 2u);
}

// Scripted session: a fixed sequence of takeovers, steering and releases.
void drive_scripted(Session & s)
{
  s.start();
  for (int i = 0; s.state().phase != Phase::finished; ++i) {
    const int phase = i % 40;
    if (phase == 8) s.handle_event(ev(ControlEventKind::take_control));
    if (phase == 9) s.handle_event(ev(ControlEventKind::steer_input, 0.05 * ((i / 40) % 3 - 1)));
    if (phase == 10) s.handle_event(ev(ControlEventKind::speed_input, 5.5));
    if (phase == 20) s.handle_event(ev(ControlEventKind::release_control));
    if (phase == 22) s.handle_event(ev(ControlEventKind::release_control));
    s.tick();
  }
}

std::string dataset_text(const Dataset & d)
{
  std::ostringstream out;
  write_dataset(out, d);
  return out.str();
}

std::string log_text(const InterventionLog & log)
{
  std::ostringstream out;
  write_intervention_log(out, log);
  return out.str();
}

TEST(Session, IdenticalEventLogsGiveIdenticalTrajectories)
{
  Session a("a", 8, novice(), 0.1, short_options());
  Session b("b", 8, novice(), 0.1, short_options());
  drive_scripted(a);
  drive_scripted(b);
  ASSERT_EQ(a.trajectory().size(), b.trajectory().size());
  for (std::size_t i = 0; i < a.trajectory().size(); ++i) {
    EXPECT_EQ(a.trajectory()[i].x, b.trajectory()[i].x);
    EXPECT_EQ(a.trajectory()[i].y, b.trajectory()[i].y);
  }
  EXPECT_EQ(dataset_text(a.dataset()), dataset_text(b.dataset()));
}

training::RolloutTrace replay(const Session & s, Dataset & labels, InterventionLog & log)
{
  EventLogExpert expert(s.event_log());
  training::RolloutOptions o;
  o.mode = training::RolloutMode::gated;
  o.epoch = s.options().epoch;
  o.rollout = s.options().rollout;
  o.dt = s.options().dt;
  o.max_time = s.options().max_time;
  return training::run_rollout(expert, novice().get(), s.scenario(), s.start_state(), o, labels, log);
}

TEST(Session, InteractiveAndOfflinePathsProduceTheSameData)
{
  for (std::uint64_t seed : {8ULL, 9ULL, 10ULL}) {
    Session s("a", seed, novice(), 0.1, short_options());
    drive_scripted(s);
    ASSERT_FALSE(s.dataset().empty());
    Dataset labels;
    InterventionLog log;
    const auto trace = replay(s, labels, log);
    EXPECT_EQ(dataset_text(labels), dataset_text(s.dataset())) << seed;
    EXPECT_EQ(log_text(log), log_text(s.interventions())) << seed;
    ASSERT_EQ(trace.trajectory.size(), s.trajectory().size());
    EXPECT_EQ(trace.trajectory.back().x, s.trajectory().back().x);
  }
}

TEST(Registry, CreateLookupRemove)
{
  SessionRegistry registry;
  const std::string id = registry.create(1, novice(), 0.1, short_options());
  EXPECT_EQ(registry.size(), 1u);
  EXPECT_EQ(registry.get(id)->state().phase, Phase::novice_driving);
  const auto st = registry.tick(id);
  EXPECT_EQ(st.tick, 1);
  EXPECT_THROW(registry.get("session-999"), NotFound);
  EXPECT_THROW(registry.handle_event("nope", ev(ControlEventKind::pause)), NotFound);
  registry.remove(id);
  EXPECT_EQ(registry.size(), 0u);
}

TEST(Wire, EventRoundTrip)
{
  const ControlEvent e{ControlEventKind::steer_input, -0.125, 1234.5};
  const ControlEvent r = wire::decode_event(wire::parse_message(wire::encode_event(e)));
  EXPECT_EQ(r.kind, e.kind);
  EXPECT_EQ(r.value, e.value);
  EXPECT_EQ(r.client_time, e.client_time);
}

TEST(Wire, StartRoundTrip)
{
  const wire::StartRequest req{77, "epoch-2", 25.0};
  const auto msg = wire::parse_message(wire::encode_start(req));
  EXPECT_EQ(wire::message_type(msg), "start");
  const auto r = wire::decode_start(msg);
  EXPECT_EQ(r.scenario_seed, 77u);
  EXPECT_EQ(r.checkpoint_id, "epoch-2");
  EXPECT_EQ(r.rate_hz, 25.0);
}

TEST(Wire, RejectsMalformedMessages)
{
  EXPECT_THROW(wire::parse_message("not json"), FormatError);
  EXPECT_THROW(wire::parse_message("[1,2]"), FormatError);
  EXPECT_THROW(wire::parse_message(R"({"type":"event"})"), FormatError);
  EXPECT_THROW(wire::parse_message(R"({"v":2,"type":"event"})"), FormatError);
  EXPECT_THROW(
    wire::decode_event(wire::parse_message(R"({"v":1,"type":"event","kind":"grab","client_time":0})")),
    FormatError);
  EXPECT_THROW(
    wire::decode_event(wire::parse_message(R"({"v":1,"type":"event","kind":"pause"})")), FormatError);
}

TEST(Wire, SnapshotCarriesSessionState)
{
  Session s("session-4", 3, novice(), 0.25, short_options());
  s.start();
  s.handle_event(ev(ControlEventKind::take_control));
  const auto & st = s.tick();
  const auto msg = wire::parse_message(wire::encode_snapshot(st, &s.scenario()));
  EXPECT_EQ(msg.at("type"), "snapshot");
  EXPECT_EQ(msg.at("session_id"), "session-4");
  EXPECT_EQ(msg.at("tick"), 1);
  EXPECT_EQ(msg.at("control_holder"), "expert");
  EXPECT_EQ(msg.at("phase"), "expert_driving");
  EXPECT_EQ(msg.at("tau"), 0.25);
  EXPECT_EQ(msg.at("observation").size(), 7u);
  EXPECT_EQ(msg.at("pose").at("x"), st.state.x);
  EXPECT_EQ(msg.at("obstacles").size(), s.scenario().obstacles.size());
  EXPECT_EQ(msg.at("labels"), 1);
  EXPECT_EQ(msg.at("interventions"), 1);
  const auto plain = wire::parse_message(wire::encode_snapshot(st));
  EXPECT_FALSE(plain.contains("obstacles"));
}

struct Captured
{
  std::mutex mutex;
  std::vector<std::shared_ptr<Session>> finished;
};

CheckpointEntry resolve(const std::string & id)
{
  if (id != "good") throw SessionRejected("unknown checkpoint " + id);
  SessionOptions o = short_options();
  o.max_time = 8.0;
  return {novice(), 0.1, o};
}

TEST(Server, RejectsUnknownCheckpoint)
{
  SessionServer server({}, resolve);
  server.start();
  LineClient client("127.0.0.1", server.port());
  client.send_line(wire::encode_start({1, "missing", 10.0}));
  const auto line = client.read_line(std::chrono::milliseconds(3000));
  ASSERT_TRUE(line.has_value());
  const auto msg = wire::parse_message(*line);
  EXPECT_EQ(msg.at("type"), "error");
  EXPECT_EQ(msg.at("code"), "session-rejected");
  server.stop();
}

TEST(Server, ProtocolErrorOnBadStart)
{
  SessionServer server({}, resolve);
  server.start();
  LineClient client("127.0.0.1", server.port());
  client.send_line("{\"v\":1,\"type\":\"event\",\"kind\":\"pause\",\"client_time\":0}");
  const auto line = client.read_line(std::chrono::milliseconds(3000));
  ASSERT_TRUE(line.has_value());
  EXPECT_EQ(wire::parse_message(*line).at("code"), "protocol-error");
  server.stop();
}

TEST(Server, PacedSessionMatchesOfflineReplay)
{
  Captured captured;
  SessionServer server({}, resolve, [&](const Session & s, bool finished) {
    if (!finished) return;
    std::lock_guard lock(captured.mutex);
    captured.finished.push_back(std::make_shared<Session>(s));
  });
  server.start();
  LineClient client("127.0.0.1", server.port());
  client.send_line(wire::encode_start({12, "good", 50.0}));

  using clock = std::chrono::steady_clock;
  std::vector<clock::time_point> arrivals;
  int snapshots = 0;
  int protocol_errors = 0;
  bool saw_obstacles = false, ended = false;
  while (auto line = client.read_line(std::chrono::milliseconds(3000))) {
    const auto msg = wire::parse_message(*line);
    const std::string type = msg.at("type");
    if (type == "end") {
      ended = true;
      break;
    }
    if (type == "error") {
      EXPECT_EQ(msg.at("code"), "protocol-error");
      ++protocol_errors;
      continue;
    }
    ASSERT_EQ(type, "snapshot") << *line;
    arrivals.push_back(clock::now());
    if (snapshots == 0) saw_obstacles = msg.contains("obstacles");
    ++snapshots;
    if (snapshots == 10) client.send_line(wire::encode_event(ev(ControlEventKind::take_control)));
    if (snapshots == 11) client.send_line(wire::encode_event(ev(ControlEventKind::speed_input, 2.0)));
    if (snapshots == 40) client.send_line(wire::encode_event(ev(ControlEventKind::release_control)));
    if (snapshots == 41) client.send_line("garbage");
  }
  EXPECT_TRUE(ended);
  EXPECT_TRUE(saw_obstacles);
  EXPECT_EQ(protocol_errors, 1);
  ASSERT_GT(arrivals.size(), 60u);

  const double span =
    std::chrono::duration<double>(arrivals.back() - arrivals[10]).count() / (arrivals.size() - 11);
  EXPECT_NEAR(span, 0.02, 0.002);

  server.stop();
  std::lock_guard lock(captured.mutex);
  ASSERT_EQ(captured.finished.size(), 1u);
  const Session & s = *captured.finished.front();
  EXPECT_EQ(s.interventions().size(), 1u);
  EXPECT_FALSE(s.dataset().empty());
  Dataset labels;
  InterventionLog log;
  replay(s, labels, log);
  EXPECT_EQ(dataset_text(labels), dataset_text(s.dataset()));
  EXPECT_EQ(log_text(log), log_text(s.interventions()));
}

}  // namespace
}  // namespace hgdagger::session
