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

#ifndef HGDAGGER__PROTOCOL_HPP_
#define HGDAGGER__PROTOCOL_HPP_

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "hgdagger/session.hpp"
#include "hgdagger/sim.hpp"

// Newline-delimited JSON messages exchanged with operator consoles. Every
// message carries "v" (schema version) and "type".
namespace hgdagger::session::wire
{

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultRateHz = 10.0;

struct StartRequest
{
  std::uint64_t scenario_seed{0};
  std::string checkpoint_id;
  double rate_hz{kDefaultRateHz};
};

/// Parses one line and checks the schema version. Throws FormatError.
nlohmann::json parse_message(const std::string & line);
std::string message_type(const nlohmann::json & message);

std::string encode_start(const StartRequest & request);
StartRequest decode_start(const nlohmann::json & message);

std::string encode_event(const ControlEvent & event);
ControlEvent decode_event(const nlohmann::json & message);

/// Obstacles are included only when a scenario is passed (first snapshot).
std::string encode_snapshot(const SessionState & state, const sim::Scenario * obstacles = nullptr);

std::string encode_error(const std::string & code, const std::string & message);
std::string encode_end(const Session & session);

}  // namespace hgdagger::session::wire

#endif  // HGDAGGER__PROTOCOL_HPP_
