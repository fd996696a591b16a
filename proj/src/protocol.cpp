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
#include "hgdagger/protocol.hpp"

#include <cmath>

#include "hgdagger/errors.hpp"

namespace hgdagger::session::wire
{

using nlohmann::json;

namespace
{

json envelope(const char * type)
{
  json message = json::object();
  message["v"] = kSchemaVersion;
  message["type"] = type;
  return message;
}

double number_field(const json & message, const char * key)
{
  const auto it = message.find(key);
  if (it == message.end() || !it->is_number()) {
    throw FormatError(std::string("field '") + key + "' must be a number");
  }
  const double value = it->get<double>();
  if (!std::isfinite(value)) {
    throw FormatError(std::string("field '") + key + "' must be finite");
  }
  return value;
}

json optional_number(const std::optional<double> & value)
{
  return value ? json(*value) : json(nullptr);
}

}  // namespace

json parse_message(const std::string & line)
{
  json message = json::parse(line, nullptr, false);
  if (message.is_discarded() || !message.is_object()) {
    throw FormatError("message is not a JSON object");
  }
  const auto version = message.find("v");
  if (version == message.end() || !version->is_number_integer()) {
    throw FormatError("message lacks the schema version field 'v'");
  }
  if (version->get<int>() != kSchemaVersion) {
    throw FormatError("unsupported schema version " + version->dump());
  }
  const auto type = message.find("type");
  if (type == message.end() || !type->is_string()) {
    throw FormatError("message lacks a string 'type'");
  }
  return message;
}

std::string message_type(const json & message) { return message.at("type").get<std::string>(); }

std::string encode_start(const StartRequest & request)
{
  json message = envelope("start");
  message["scenario_seed"] = request.scenario_seed;
  message["checkpoint_id"] = request.checkpoint_id;
  message["rate_hz"] = request.rate_hz;
  return message.dump();
}

StartRequest decode_start(const json & message)
{
  if (message_type(message) != "start") {
    throw FormatError("expected a start request");
  }
  StartRequest request;
  const auto seed = message.find("scenario_seed");
  if (seed == message.end() || !seed->is_number_unsigned()) {
    throw FormatError("field 'scenario_seed' must be a non-negative integer");
  }
  request.scenario_seed = seed->get<std::uint64_t>();
  const auto id = message.find("checkpoint_id");
  if (id == message.end() || !id->is_string()) {
    throw FormatError("field 'checkpoint_id' must be a string");
  }
  request.checkpoint_id = id->get<std::string>();
  if (message.contains("rate_hz")) {
    request.rate_hz = number_field(message, "rate_hz");
    if (!(request.rate_hz > 0.0)) {
      throw FormatError("field 'rate_hz' must be positive");
    }
  }
  return request;
}

std::string encode_event(const ControlEvent & event)
{
  json message = envelope("event");
  message["kind"] = to_string(event.kind);
  if (event.kind == ControlEventKind::steer_input || event.kind == ControlEventKind::speed_input) {
    message["value"] = event.value;
  }
  message["client_time"] = event.client_time;
  return message.dump();
}

ControlEvent decode_event(const json & message)
{
  if (message_type(message) != "event") {
    throw FormatError("expected a control event");
  }
  const auto kind = message.find("kind");
  if (kind == message.end() || !kind->is_string()) {
    throw FormatError("field 'kind' must be a string");
  }
  ControlEvent event;
  event.kind = control_event_kind_from_string(kind->get<std::string>());
  if (event.kind == ControlEventKind::steer_input || event.kind == ControlEventKind::speed_input) {
    event.value = number_field(message, "value");
  }
  event.client_time = number_field(message, "client_time");
  return event;
}

std::string encode_snapshot(const SessionState & state, const sim::Scenario * obstacles)
{
  json message = envelope("snapshot");
  message["session_id"] = state.session_id;
  message["tick"] = state.tick;
  message["sim_time"] = state.sim_time;
  message["pose"] = {{"x", state.state.x}, {"y", state.state.y}, {"theta", state.state.theta}};
  message["speed"] = state.state.s;
  if (state.observation) {
    const auto values = state.observation->to_array();
    message["observation"] = json(values);
  } else {
    message["observation"] = nullptr;
  }
  message["doubt"] = state.doubt;
  message["tau"] = optional_number(state.tau);
  message["control_holder"] = to_string(state.control_holder);
  message["phase"] = to_string(state.phase);
  json events = json::array();
  for (const auto & event : state.events) {
    json e = {{"kind", sim::to_string(event.kind)},
              {"start_time", event.start_time},
              {"position", event.position}};
    if (event.obstacle >= 0) {
      e["obstacle"] = event.obstacle;
    }
    events.push_back(std::move(e));
  }
  message["events"] = std::move(events);
  message["warnings"] = state.warnings;
  message["labels"] = state.labels;
  message["interventions"] = state.interventions;
  if (obstacles != nullptr) {
    json cars = json::array();
    for (const auto & car : obstacles->obstacles) {
      cars.push_back(
        {{"center_x", car.center_x},
         {"lane", sim::to_string(car.lane)},
         {"length", car.length},
         {"width", car.width}});
    }
    message["obstacles"] = std::move(cars);
    message["road_length"] = obstacles->road_length;
  }
  return message.dump();
}

std::string encode_error(const std::string & code, const std::string & text)
{
  json message = envelope("error");
  message["code"] = code;
  message["message"] = text;
  return message.dump();
}

std::string encode_end(const Session & session)
{
  json message = envelope("end");
  message["session_id"] = session.state().session_id;
  message["ticks"] = session.state().tick;
  message["labels"] = session.dataset().size();
  message["interventions"] = session.interventions().entries.size();
  return message.dump();
}

}  // namespace hgdagger::session::wire
