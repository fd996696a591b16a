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

#ifndef HGDAGGER__SIM_HPP_
#define HGDAGGER__SIM_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Deterministic two-lane kinematic driving simulator.
//
// Road frame: x runs along the road, y is the signed lateral offset from the
// median (left positive). The road spans y in [-3, 3]; the left lane is
// (0, 3] and the right lane is [-3, 0].
namespace hgdagger::sim
{

inline constexpr double kLaneWidth = 3.0;
inline constexpr int kNumLanes = 2;
inline constexpr double kRoadHalfWidth = kLaneWidth;
inline constexpr double kCarLength = 4.0;
inline constexpr double kCarWidth = 1.5;
inline constexpr double kWheelbase = 2.7;
inline constexpr double kSteerMax = 0.6;
inline constexpr double kSpeedMax = 8.0;
inline constexpr double kSpeedLag = 0.5;
inline constexpr double kSubStep = 0.01;
inline constexpr double kControlDt = 0.1;
inline constexpr double kGapSentinel = 60.0;
inline constexpr double kMinRoadLength = 60.0;
inline constexpr double kObstacleSpacing = 30.0;
inline constexpr double kObstacleJitter = 5.0;

enum class Lane { left, right };

double lane_center(Lane lane);
Lane lane_of(double y);
Lane other_lane(Lane lane);
const char * to_string(Lane lane);
Lane lane_from_string(const std::string & text);

struct ObstacleCar
{
  double center_x{0.0};
  Lane lane{Lane::right};
  double length{kCarLength};
  double width{kCarWidth};

  double center_y() const { return lane_center(lane); }
  double rear_x() const { return center_x - 0.5 * length; }

  bool operator==(const ObstacleCar &) const = default;
};

struct Scenario
{
  std::uint64_t rng_seed{0};
  double road_length{0.0};
  double lane_width{kLaneWidth};
  int num_lanes{kNumLanes};
  std::vector<ObstacleCar> obstacles;

  bool operator==(const Scenario &) const = default;
};

struct EgoState
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double s{0.0};
};

struct Action
{
  double steer{0.0};
  double speed_cmd{0.0};

  bool operator==(const Action &) const = default;
};

inline constexpr int kObservationSize = 7;
inline constexpr int kActionSize = 2;

struct Observation
{
  double y{0.0};
  double theta{0.0};
  double s{0.0};
  double l_left{0.0};
  double l_right{0.0};
  double d_left{kGapSentinel};
  double d_right{kGapSentinel};

  std::array<double, kObservationSize> to_array() const;
  static Observation from_array(const std::array<double, kObservationSize> & values);
};

enum class EventKind { collision, road_departure };

const char * to_string(EventKind kind);

struct SafetyEvent
{
  EventKind kind{EventKind::collision};
  double start_time{0.0};
  // Set only for road departures.
  std::optional<double> duration;
  double position{0.0};
  // Index into Scenario::obstacles for collisions, -1 otherwise.
  int obstacle{-1};
};

/// Places obstacles at nominal 30 m intervals starting at 30 m, jittered
/// uniformly by up to 5 m, each in a uniformly random lane. Throws
/// std::invalid_argument for roads shorter than 60 m.
Scenario generate_scenario(std::uint64_t seed, double road_length, bool jitter = true);

Action clamp_action(Action action);

double wrap_angle(double angle);

/// Kinematic bicycle model with a first-order speed lag, integrated by
/// classic RK4 over 0.01 s sub-steps.
EgoState step_dynamics(const EgoState & state, Action action, double dt);

/// Throws std::invalid_argument if state.x is outside [0, road_length].
Observation observe(const EgoState & state, const Scenario & scenario);

struct OrientedBox
{
  double cx{0.0};
  double cy{0.0};
  double heading{0.0};
  double length{kCarLength};
  double width{kCarWidth};
};

OrientedBox ego_box(const EgoState & state);
OrientedBox obstacle_box(const ObstacleCar & car);

/// Separating-axis test between two oriented rectangles. Touching edges count
/// as intersecting.
bool boxes_intersect(const OrientedBox & a, const OrientedBox & b);

/// Index of the first obstacle the ego overlaps, if any.
std::optional<int> colliding_obstacle(const EgoState & state, const Scenario & scenario);

bool is_off_road(const EgoState & state);

/// Collisions are reported once per obstacle at the first overlapping step;
/// departures once per maximal run with |y| > 3.
std::vector<SafetyEvent> detect_events(
  std::span<const EgoState> trajectory, const Scenario & scenario, double dt = kControlDt);

void write_scenario(std::ostream & out, const Scenario & scenario);
Scenario read_scenario(std::istream & in);

}  // namespace hgdagger::sim

#endif  // HGDAGGER__SIM_HPP_
