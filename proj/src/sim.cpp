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

#include "hgdagger/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "hgdagger/errors.hpp"
#include "hgdagger/text.hpp"

namespace hgdagger::sim
{

namespace
{

constexpr const char * kScenarioMagic = "hgdagger-scenario";
constexpr int kScenarioVersion = 1;

struct Derivative
{
  double dx, dy, dtheta, ds;
};

Derivative derivative(const EgoState & state, const Action & action)
{
  return {
    state.s * std::cos(state.theta),
    state.s * std::sin(state.theta),
    state.s / kWheelbase * std::tan(action.steer),
    (action.speed_cmd - state.s) / kSpeedLag,
  };
}

EgoState advance(const EgoState & state, const Derivative & d, double h)
{
  return {state.x + h * d.dx, state.y + h * d.dy, state.theta + h * d.dtheta, state.s + h * d.ds};
}

std::array<std::array<double, 2>, 4> corners(const OrientedBox & box)
{
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  std::array<std::array<double, 2>, 4> out{};
  const double signs[4][2] = {{1, 1}, {1, -1}, {-1, -1}, {-1, 1}};
  for (int i = 0; i < 4; ++i) {
    const double lx = signs[i][0] * hl;
    const double ly = signs[i][1] * hw;
    out[i] = {box.cx + c * lx - s * ly, box.cy + s * lx + c * ly};
  }
  return out;
}

}  // namespace

double lane_center(Lane lane) { return lane == Lane::left ? 0.5 * kLaneWidth : -0.5 * kLaneWidth; }

Lane lane_of(double y) { return y > 0.0 ? Lane::left : Lane::right; }

Lane other_lane(Lane lane) { return lane == Lane::left ? Lane::right : Lane::left; }

const char * to_string(Lane lane) { return lane == Lane::left ? "left" : "right"; }

Lane lane_from_string(const std::string & text)
{
  if (text == "left") {
    return Lane::left;
  }
  if (text == "right") {
    return Lane::right;
  }
  throw std::invalid_argument("unknown lane '" + text + "'");
}

const char * to_string(EventKind kind)
{
  return kind == EventKind::collision ? "collision" : "road_departure";
}

std::array<double, kObservationSize> Observation::to_array() const
{
  return {y, theta, s, l_left, l_right, d_left, d_right};
}

Observation Observation::from_array(const std::array<double, kObservationSize> & v)
{
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

Scenario generate_scenario(std::uint64_t seed, double road_length, bool jitter)
{
  if (!(road_length >= kMinRoadLength)) {
    throw std::invalid_argument(
      "road_length must be at least " + format_real(kMinRoadLength) + " m, got " +
      format_real(road_length));
  }
  Scenario scenario;
  scenario.rng_seed = seed;
  scenario.road_length = road_length;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-kObstacleJitter, kObstacleJitter);
  std::bernoulli_distribution coin(0.5);
  for (int k = 1; k * kObstacleSpacing <= road_length - kObstacleSpacing; ++k) {
    ObstacleCar car;
    const double delta = offset(rng);
    car.center_x = k * kObstacleSpacing + (jitter ? delta : 0.0);
    car.lane = coin(rng) ? Lane::left : Lane::right;
    scenario.obstacles.push_back(car);
  }
  return scenario;
}

Action clamp_action(Action action)
{
  action.steer = std::clamp(std::isfinite(action.steer) ? action.steer : 0.0, -kSteerMax, kSteerMax);
  action.speed_cmd =
    std::clamp(std::isfinite(action.speed_cmd) ? action.speed_cmd : 0.0, 0.0, kSpeedMax);
  return action;
}

double wrap_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped <= -std::numbers::pi) {
    wrapped += two_pi;
  } else if (wrapped > std::numbers::pi) {
    wrapped -= two_pi;
  }
  return wrapped;
}

EgoState step_dynamics(const EgoState & state, Action action, double dt)
{
  if (!(dt > 0.0 && dt <= 0.2)) {
    throw std::invalid_argument("dt must lie in (0, 0.2], got " + format_real(dt));
  }
  action = clamp_action(action);
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / kSubStep - 1e-9)));
  const double h = dt / substeps;

  EgoState x = state;
  for (int i = 0; i < substeps; ++i) {
    const Derivative k1 = derivative(x, action);
    const Derivative k2 = derivative(advance(x, k1, 0.5 * h), action);
    const Derivative k3 = derivative(advance(x, k2, 0.5 * h), action);
    const Derivative k4 = derivative(advance(x, k3, h), action);
    x.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    x.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    x.theta += h / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
    x.s += h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds);
    x.s = std::max(0.0, x.s);
  }
  x.theta = wrap_angle(x.theta);
  return x;
}

Observation observe(const EgoState & state, const Scenario & scenario)
{
  if (!(state.x >= 0.0 && state.x <= scenario.road_length)) {
    throw std::invalid_argument(
      "ego x=" + format_real(state.x) + " outside road [0, " + format_real(scenario.road_length) +
      "]");
  }
  Observation obs;
  obs.y = state.y;
  obs.theta = state.theta;
  obs.s = state.s;

  // Off-road positions are measured against the nearest lane, so one of the
  // two edge distances goes negative.
  const Lane lane = lane_of(state.y);
  const double lo = lane == Lane::left ? 0.0 : -kLaneWidth;
  const double hi = lo + kLaneWidth;
  obs.l_left = hi - state.y;
  obs.l_right = state.y - lo;

  const double front = state.x + 0.5 * kCarLength;
  double gap_left = kGapSentinel;
  double gap_right = kGapSentinel;
  for (const auto & car : scenario.obstacles) {
    if (car.center_x <= state.x) {
      continue;
    }
    const double gap = std::clamp(car.rear_x() - front, 0.0, kGapSentinel);
    double & slot = car.lane == Lane::left ? gap_left : gap_right;
    slot = std::min(slot, gap);
  }
  obs.d_left = gap_left;
  obs.d_right = gap_right;
  return obs;
}

OrientedBox ego_box(const EgoState & state)
{
  return {state.x, state.y, state.theta, kCarLength, kCarWidth};
}

OrientedBox obstacle_box(const ObstacleCar & car)
{
  return {car.center_x, car.center_y(), 0.0, car.length, car.width};
}

bool boxes_intersect(const OrientedBox & a, const OrientedBox & b)
{
  const auto ca = corners(a);
  const auto cb = corners(b);
  const double headings[4] = {
    a.heading, a.heading + 0.5 * std::numbers::pi, b.heading, b.heading + 0.5 * std::numbers::pi};
  for (double heading : headings) {
    const double ax = std::cos(heading);
    const double ay = std::sin(heading);
    double min_a = INFINITY, max_a = -INFINITY, min_b = INFINITY, max_b = -INFINITY;
    for (int i = 0; i < 4; ++i) {
      const double pa = ca[i][0] * ax + ca[i][1] * ay;
      const double pb = cb[i][0] * ax + cb[i][1] * ay;
      min_a = std::min(min_a, pa);
      max_a = std::max(max_a, pa);
      min_b = std::min(min_b, pb);
      max_b = std::max(max_b, pb);
    }
    if (max_a < min_b || max_b < min_a) {
      return false;
    }
  }
  return true;
}

std::optional<int> colliding_obstacle(const EgoState & state, const Scenario & scenario)
{
  const OrientedBox ego = ego_box(state);
  // Bounding-circle reject before the exact test.
  const double reach = std::hypot(kCarLength, kCarWidth);
  for (std::size_t i = 0; i < scenario.obstacles.size(); ++i) {
    const auto & car = scenario.obstacles[i];
    if (std::abs(car.center_x - state.x) > reach || std::abs(car.center_y() - state.y) > reach) {
      continue;
    }
    if (boxes_intersect(ego, obstacle_box(car))) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

bool is_off_road(const EgoState & state) { return std::abs(state.y) > kRoadHalfWidth; }

std::vector<SafetyEvent> detect_events(
  std::span<const EgoState> trajectory, const Scenario & scenario, double dt)
{
  std::vector<SafetyEvent> events;
  std::set<int> hit;
  std::optional<std::size_t> departure_start;

  auto close_departure = [&](std::size_t end) {
    SafetyEvent event;
    event.kind = EventKind::road_departure;
    event.start_time = static_cast<double>(*departure_start) * dt;
    event.duration = static_cast<double>(end - *departure_start) * dt;
    event.position = trajectory[*departure_start].x;
    events.push_back(event);
    departure_start.reset();
  };

  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const EgoState & state = trajectory[i];
    const OrientedBox ego = ego_box(state);
    for (std::size_t k = 0; k < scenario.obstacles.size(); ++k) {
      const int index = static_cast<int>(k);
      if (hit.count(index) != 0) {
        continue;
      }
      const auto & car = scenario.obstacles[k];
      if (std::abs(car.center_x - state.x) > 2.0 * kCarLength) {
        continue;
      }
      if (boxes_intersect(ego, obstacle_box(car))) {
        hit.insert(index);
        SafetyEvent event;
        event.kind = EventKind::collision;
        event.start_time = static_cast<double>(i) * dt;
        event.position = state.x;
        event.obstacle = index;
        events.push_back(event);
      }
    }
    if (is_off_road(state)) {
      if (!departure_start) {
        departure_start = i;
      }
    } else if (departure_start) {
      close_departure(i);
    }
  }
  if (departure_start) {
    close_departure(trajectory.size());
  }
  std::stable_sort(events.begin(), events.end(), [](const SafetyEvent & a, const SafetyEvent & b) {
    return a.start_time < b.start_time;
  });
  return events;
}

void write_scenario(std::ostream & out, const Scenario & scenario)
{
  out << kScenarioMagic << ' ' << kScenarioVersion << '\n';
  out << "seed " << scenario.rng_seed << '\n';
  out << "road_length " << format_real(scenario.road_length) << '\n';
  for (const auto & car : scenario.obstacles) {
    out << "obstacle " << format_real(car.center_x) << ' ' << to_string(car.lane) << '\n';
  }
}

Scenario read_scenario(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("empty scenario stream");
  }
  auto header = split_whitespace(line);
  if (header.size() != 2 || header[0] != kScenarioMagic) {
    throw FormatError("bad scenario header: '" + line + "'");
  }
  if (parse_integer(header[1]) != kScenarioVersion) {
    throw FormatError("unsupported scenario version " + std::string(header[1]));
  }
  Scenario scenario;
  bool have_seed = false;
  bool have_length = false;
  while (std::getline(in, line)) {
    auto fields = split_whitespace(line);
    if (fields.empty()) {
      continue;
    }
    if (fields[0] == "seed" && fields.size() == 2) {
      scenario.rng_seed = static_cast<std::uint64_t>(std::stoull(std::string(fields[1])));
      have_seed = true;
    } else if (fields[0] == "road_length" && fields.size() == 2) {
      scenario.road_length = parse_real(fields[1]);
      have_length = true;
    } else if (fields[0] == "obstacle" && fields.size() == 3) {
      ObstacleCar car;
      car.center_x = parse_real(fields[1]);
      car.lane = lane_from_string(std::string(fields[2]));
      scenario.obstacles.push_back(car);
    } else {
      throw FormatError("unrecognized scenario record: '" + line + "'");
    }
  }
  if (!have_seed || !have_length) {
    throw FormatError("scenario missing seed or road_length");
  }
  return scenario;
}

}  // namespace hgdagger::sim
