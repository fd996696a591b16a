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
#include "hgdagger/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "hgdagger/errors.hpp"
#include "hgdagger/seeding.hpp"

namespace hgdagger::eval
{

Histogram Histogram::uniform(double lower, double upper, int bins)
{
  if (bins <= 0 || !(upper > lower)) {
    throw std::invalid_argument("histogram needs a positive bin count and upper > lower");
  }
  Histogram h;
  h.lower = lower;
  h.upper = upper;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  return h;
}

Histogram Histogram::steering(int bins) { return uniform(-sim::kSteerMax, sim::kSteerMax, bins); }

void Histogram::add(double value, double weight)
{
  const auto bins = static_cast<double>(mass.size());
  const double position = (value - lower) / (upper - lower) * bins;
  const auto index = static_cast<std::size_t>(std::clamp(std::floor(position), 0.0, bins - 1.0));
  mass[index] += weight;
}

double Histogram::total() const
{
  double sum = 0.0;
  for (double m : mass) {
    sum += m;
  }
  return sum;
}

Histogram Histogram::normalized() const
{
  Histogram out = *this;
  const double sum = total();
  if (sum > 0.0) {
    for (double & m : out.mass) {
      m /= sum;
    }
  }
  return out;
}

bool Histogram::same_binning(const Histogram & other) const
{
  return mass.size() == other.mass.size() && lower == other.lower && upper == other.upper;
}

double bhattacharyya(const Histogram & p, const Histogram & q)
{
  if (!p.same_binning(q)) {
    throw std::invalid_argument("Bhattacharyya distance needs identical binning");
  }
  double coefficient = 0.0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) {
    const double product = p.mass[i] * q.mass[i];
    if (product > 0.0) {
      coefficient += std::sqrt(product);
    }
  }
  if (!(coefficient > std::exp(-kBhattacharyyaCap))) {
    return kBhattacharyyaCap;
  }
  // Rounding can push the coefficient of identical histograms past 1.
  return std::max(0.0, -std::log(coefficient));
}

Controller novice_controller(const nn::Ensemble & ensemble)
{
  return [&ensemble](const sim::EgoState & state, const sim::Scenario & scenario) {
    return nn::predict(ensemble, sim::observe(state, scenario)).mean_action;
  };
}

Controller expert_controller(experts::SyntheticExpertConfig config)
{
  return [config](const sim::EgoState & state, const sim::Scenario & scenario) {
    return experts::synthetic_expert_action(state, scenario, config);
  };
}

RolloutRecord evaluate_rollout(
  const Controller & controller, const sim::Scenario & scenario, const sim::EgoState & start,
  double dt, double max_time)
{
  RolloutRecord record;
  record.scenario_seed = scenario.rng_seed;
  record.start = start;
  std::vector<sim::EgoState> trajectory{start};
  sim::EgoState state = start;
  for (int tick = 0;; ++tick) {
    const double time = tick * dt;
    if (state.x >= scenario.road_length) {
      record.termination = training::Termination::end_of_road;
      break;
    }
    if (state.x < 0.0) {
      record.termination = training::Termination::left_road_extent;
      break;
    }
    if (time >= max_time - 1e-9) {
      record.termination = training::Termination::timeout;
      break;
    }
    const sim::Action action = sim::clamp_action(controller(state, scenario));
    record.steering.push_back(action.steer);
    state = sim::step_dynamics(state, action, dt);
    trajectory.push_back(state);
    if (sim::colliding_obstacle(state, scenario)) {
      record.termination = training::Termination::collision;
      break;
    }
  }
  record.duration = static_cast<double>(record.steering.size()) * dt;
  record.meters = std::max(0.0, state.x - start.x);
  record.events = sim::detect_events(trajectory, scenario, dt);
  return record;
}

RolloutMetrics aggregate(std::vector<RolloutRecord> records, int steering_bins)
{
  RolloutMetrics metrics;
  metrics.steering_histogram = Histogram::steering(steering_bins);
  double departure_time = 0.0;
  for (const auto & record : records) {
    metrics.meters_driven += record.meters;
    for (const auto & event : record.events) {
      if (event.kind == sim::EventKind::collision) {
        ++metrics.collisions;
      } else {
        ++metrics.departures;
        departure_time += event.duration.value_or(0.0);
      }
    }
    for (double steer : record.steering) {
      metrics.steering_histogram.add(steer);
    }
  }
  if (metrics.meters_driven > 0.0) {
    metrics.collision_rate = static_cast<double>(metrics.collisions) / metrics.meters_driven;
    metrics.departure_rate = static_cast<double>(metrics.departures) / metrics.meters_driven;
  }
  if (metrics.departures > 0) {
    metrics.mean_departure_duration = departure_time / static_cast<double>(metrics.departures);
  }
  metrics.steering_histogram = metrics.steering_histogram.normalized();
  metrics.rollouts = std::move(records);
  return metrics;
}

RolloutMetrics rollout_metrics(
  const Controller & controller, std::span<const sim::Scenario> scenarios, const EvalConfig & config)
{
  std::vector<RolloutRecord> records;
  records.reserve(scenarios.size());
  for (const auto & scenario : scenarios) {
    records.push_back(evaluate_rollout(
      controller, scenario, training::initial_state(scenario.rng_seed), config.dt,
      config.max_time));
  }
  return aggregate(std::move(records), config.steering_bins);
}

std::vector<sim::Scenario> evaluation_scenarios(std::uint64_t seed, int count, double road_length)
{
  std::vector<sim::Scenario> scenarios;
  for (int i = 0; i < count; ++i) {
    scenarios.push_back(sim::generate_scenario(
      derive_seed(seed, {0xe7a1ULL, static_cast<std::uint64_t>(i)}), road_length));
  }
  return scenarios;
}

bool InitializationRegion::contains(const sim::EgoState & state, const sim::Observation & obs) const
{
  const double theta_deg = state.theta * 180.0 / std::numbers::pi;
  return state.y >= y_min && state.y <= y_max && theta_deg >= theta_min_deg &&
         theta_deg <= theta_max_deg && state.s >= s_min && state.s <= s_max &&
         std::min(obs.d_left, obs.d_right) < near_obstacle;
}

PermittedSetResult permitted_set_experiment(
  const nn::Ensemble & ensemble, double tau, int n_inits, const PermittedSetConfig & config)
{
  if (n_inits <= 0) {
    throw std::invalid_argument("n_inits must be positive");
  }
  if (std::isnan(tau)) {
    throw std::invalid_argument("tau must be defined");
  }
  std::vector<sim::Scenario> pool;
  for (int i = 0; i < config.scenario_pool; ++i) {
    pool.push_back(sim::generate_scenario(
      derive_seed(config.seed, {0x9e75ULL, static_cast<std::uint64_t>(i)}), config.road_length));
  }
  const auto & region = config.region;
  const double x_max = std::max(0.0, config.road_length - config.rollout_time * region.s_max);
  std::mt19937_64 rng(derive_seed(config.seed, {0x5a3bULL}));
  std::uniform_int_distribution<int> pick(0, config.scenario_pool - 1);
  std::uniform_real_distribution<double> x_dist(0.0, x_max);
  std::uniform_real_distribution<double> y_dist(region.y_min, region.y_max);
  std::uniform_real_distribution<double> theta_dist(
    region.theta_min_deg * std::numbers::pi / 180.0, region.theta_max_deg * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> s_dist(region.s_min, region.s_max);

  PermittedSetResult result;
  const auto want = static_cast<std::size_t>(n_inits);
  std::vector<const sim::Scenario *> inside_scenarios;
  std::vector<const sim::Scenario *> outside_scenarios;
  while (result.inside_inits.size() < want || result.outside_inits.size() < want) {
    if (result.draws >= config.max_draws) {
      std::string group = result.inside_inits.size() < want ? "inside" : "outside";
      if (result.inside_inits.size() < want && result.outside_inits.size() < want) {
        group = "inside+outside";
      }
      throw DegenerateRegion(
        group, "no " + group + " initializations found within " + std::to_string(config.max_draws) +
                 " draws (inside " + std::to_string(result.inside_inits.size()) + ", outside " +
                 std::to_string(result.outside_inits.size()) + ")");
    }
    ++result.draws;
    const sim::Scenario & scenario = pool[static_cast<std::size_t>(pick(rng))];
    sim::EgoState state;
    state.x = x_dist(rng);
    state.y = y_dist(rng);
    state.theta = theta_dist(rng);
    state.s = s_dist(rng);
    const sim::Observation obs = sim::observe(state, scenario);
    if (!region.contains(state, obs) || sim::colliding_obstacle(state, scenario)) {
      continue;
    }
    const double d = nn::doubt(ensemble, obs);
    if (d <= tau) {
      if (result.inside_inits.size() < want) {
        result.inside_inits.push_back({scenario.rng_seed, state, d});
        inside_scenarios.push_back(&scenario);
      }
    } else if (result.outside_inits.size() < want) {
      result.outside_inits.push_back({scenario.rng_seed, state, d});
      outside_scenarios.push_back(&scenario);
    }
  }

  const Controller novice = novice_controller(ensemble);
  auto run_group = [&](const std::vector<Initialization> & inits,
                       const std::vector<const sim::Scenario *> & scenarios) {
    std::vector<RolloutRecord> records;
    for (std::size_t i = 0; i < inits.size(); ++i) {
      records.push_back(
        evaluate_rollout(novice, *scenarios[i], inits[i].state, config.dt, config.rollout_time));
    }
    return aggregate(std::move(records), config.steering_bins);
  };
  result.inside = run_group(result.inside_inits, inside_scenarios);
  result.outside = run_group(result.outside_inits, outside_scenarios);
  return result;
}

ScatteredInterpolator::ScatteredInterpolator(std::vector<RiskSample> samples, double bucket_size)
: samples_(std::move(samples)), bucket_size_(bucket_size)
{
  if (samples_.empty()) {
    throw std::invalid_argument("interpolation needs at least one sample");
  }
  double max_x = -INFINITY, max_y = -INFINITY;
  min_x_ = INFINITY;
  min_y_ = INFINITY;
  for (const auto & s : samples_) {
    min_x_ = std::min(min_x_, s.x);
    min_y_ = std::min(min_y_, s.y);
    max_x = std::max(max_x, s.x);
    max_y = std::max(max_y, s.y);
  }
  cols_ = static_cast<int>(std::floor((max_x - min_x_) / bucket_size_)) + 1;
  rows_ = static_cast<int>(std::floor((max_y - min_y_) / bucket_size_)) + 1;
  buckets_.resize(static_cast<std::size_t>(cols_) * rows_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const int c = static_cast<int>(std::floor((samples_[i].x - min_x_) / bucket_size_));
    const int r = static_cast<int>(std::floor((samples_[i].y - min_y_) / bucket_size_));
    buckets_[static_cast<std::size_t>(r) * cols_ + c].push_back(static_cast<int>(i));
  }
}

std::vector<int> ScatteredInterpolator::nearest(double x, double y, int count) const
{
  const auto want = std::min<std::size_t>(static_cast<std::size_t>(count), samples_.size());
  // (squared distance, index), kept sorted; ties resolve to the lower index.
  std::vector<std::pair<double, int>> best;
  auto consider = [&](int index) {
    const double dx = samples_[static_cast<std::size_t>(index)].x - x;
    const double dy = samples_[static_cast<std::size_t>(index)].y - y;
    const std::pair<double, int> candidate{dx * dx + dy * dy, index};
    auto pos = std::lower_bound(best.begin(), best.end(), candidate);
    if (best.size() < want) {
      best.insert(pos, candidate);
    } else if (pos != best.end()) {
      best.insert(pos, candidate);
      best.pop_back();
    }
  };

  const int cx = static_cast<int>(std::floor((x - min_x_) / bucket_size_));
  const int cy = static_cast<int>(std::floor((y - min_y_) / bucket_size_));
  // Distance from the query to the outside of the bucket block of radius r.
  auto ring_clearance = [&](int r) {
    const double left = x - (min_x_ + (cx - r) * bucket_size_);
    const double right = (min_x_ + (cx + r + 1) * bucket_size_) - x;
    const double bottom = y - (min_y_ + (cy - r) * bucket_size_);
    const double top = (min_y_ + (cy + r + 1) * bucket_size_) - y;
    return std::min({left, right, bottom, top});
  };
  const int max_ring = std::max(cols_, rows_) + std::abs(cx) + std::abs(cy) + 1;
  for (int r = 0; r <= max_ring; ++r) {
    for (int row = cy - r; row <= cy + r; ++row) {
      if (row < 0 || row >= rows_) {
        continue;
      }
      for (int col = cx - r; col <= cx + r; ++col) {
        if (col < 0 || col >= cols_) {
          continue;
        }
        if (std::max(std::abs(row - cy), std::abs(col - cx)) != r) {
          continue;
        }
        for (int index : buckets_[static_cast<std::size_t>(row) * cols_ + col]) {
          consider(index);
        }
      }
    }
    if (best.size() == want) {
      const double clearance = ring_clearance(r);
      if (clearance > 0.0 && best.back().first <= clearance * clearance) {
        break;
      }
    }
  }
  std::vector<int> indices;
  for (const auto & entry : best) {
    indices.push_back(entry.second);
  }
  return indices;
}

double ScatteredInterpolator::operator()(double x, double y) const
{
  const std::vector<int> idx = nearest(x, y, 3);
  const RiskSample & a = samples_[static_cast<std::size_t>(idx[0])];
  if (a.x == x && a.y == y) {
    return a.doubt;
  }
  if (idx.size() == 3) {
    const RiskSample & b = samples_[static_cast<std::size_t>(idx[1])];
    const RiskSample & c = samples_[static_cast<std::size_t>(idx[2])];
    const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
    const double scale = std::max(
      {std::abs(a.x - c.x), std::abs(a.y - c.y), std::abs(b.x - c.x), std::abs(b.y - c.y)});
    if (std::abs(det) > 1e-9 * scale * scale) {
      const double wa = ((b.y - c.y) * (x - c.x) + (c.x - b.x) * (y - c.y)) / det;
      const double wb = ((c.y - a.y) * (x - c.x) + (a.x - c.x) * (y - c.y)) / det;
      const double wc = 1.0 - wa - wb;
      if (wa >= 0.0 && wb >= 0.0 && wc >= 0.0) {
        return wa * a.doubt + wb * b.doubt + wc * c.doubt;
      }
    }
  }
  double weight_sum = 0.0;
  double value = 0.0;
  for (int i : idx) {
    const RiskSample & s = samples_[static_cast<std::size_t>(i)];
    const double w = 1.0 / std::hypot(s.x - x, s.y - y);
    weight_sum += w;
    value += w * s.doubt;
  }
  return value / weight_sum;
}

std::array<double, 2> RiskMap::cell_center(int col, int row) const
{
  return {origin_x + (col + 0.5) * cell_size, origin_y + (row + 0.5) * cell_size};
}

std::vector<RiskSample> sample_arcs(
  const nn::Ensemble & ensemble, const sim::Scenario & scenario, const RiskMapConfig & config)
{
  const double y_limit = sim::kRoadHalfWidth + config.margin;
  const double max_length = 2.0 * scenario.road_length + 4.0 * y_limit;
  std::vector<RiskSample> samples;
  std::vector<sim::Observation> observations;
  for (int a = 0; a < config.arcs; ++a) {
    const double kappa = config.arcs == 1
                           ? 0.0
                           : -config.max_curvature + 2.0 * config.max_curvature * a / (config.arcs - 1);
    for (int k = 0;; ++k) {
      const double length = k * config.sample_spacing;
      if (length > max_length) {
        break;
      }
      RiskSample sample;
      const double theta0 = config.anchor_theta;
      if (std::abs(kappa) < 1e-12) {
        sample.theta = theta0;
        sample.x = config.anchor_x + length * std::cos(theta0);
        sample.y = config.anchor_y + length * std::sin(theta0);
      } else {
        sample.theta = theta0 + kappa * length;
        sample.x = config.anchor_x + (std::sin(sample.theta) - std::sin(theta0)) / kappa;
        sample.y = config.anchor_y - (std::cos(sample.theta) - std::cos(theta0)) / kappa;
      }
      if (sample.x < 0.0 || sample.x > scenario.road_length || std::abs(sample.y) > y_limit) {
        break;
      }
      samples.push_back(sample);
      observations.push_back(sim::observe(
        {sample.x, sample.y, sim::wrap_angle(sample.theta), config.speed}, scenario));
    }
  }
  const std::vector<double> doubts = nn::doubt_batch(ensemble, observations);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].doubt = doubts[i];
  }
  return samples;
}

RiskMap build_risk_map(
  const nn::Ensemble & ensemble, const sim::Scenario & scenario, double tau,
  const RiskMapConfig & config)
{
  RiskMap map;
  map.cell_size = config.cell_size;
  const double y_limit = sim::kRoadHalfWidth + config.margin;
  map.origin_x = 0.0;
  map.origin_y = -y_limit;
  map.cols = static_cast<int>(std::ceil(scenario.road_length / config.cell_size - 1e-9));
  map.rows = static_cast<int>(std::ceil(2.0 * y_limit / config.cell_size - 1e-9));
  map.samples = sample_arcs(ensemble, scenario, config);
  if (map.samples.empty()) {
    throw std::invalid_argument("risk map anchor produced no samples inside the workspace");
  }
  const ScatteredInterpolator interpolate(map.samples);

  const auto cells = static_cast<std::size_t>(map.cols) * map.rows;
  map.values.assign(cells, 0.0);
  std::vector<double> best_distance(cells, INFINITY);
  for (const auto & sample : map.samples) {
    const int col = static_cast<int>(std::floor((sample.x - map.origin_x) / map.cell_size));
    const int row = static_cast<int>(std::floor((sample.y - map.origin_y) / map.cell_size));
    if (col < 0 || col >= map.cols || row < 0 || row >= map.rows) {
      continue;
    }
    const auto center = map.cell_center(col, row);
    const double d = std::hypot(sample.x - center[0], sample.y - center[1]);
    const auto index = static_cast<std::size_t>(row) * map.cols + col;
    if (d < best_distance[index]) {
      best_distance[index] = d;
      map.values[index] = sample.doubt;
    }
  }
  for (int row = 0; row < map.rows; ++row) {
    for (int col = 0; col < map.cols; ++col) {
      const auto index = static_cast<std::size_t>(row) * map.cols + col;
      if (std::isinf(best_distance[index])) {
        const auto center = map.cell_center(col, row);
        map.values[index] = interpolate(center[0], center[1]);
      }
    }
  }
  relabel(map, tau);
  return map;
}

void relabel(RiskMap & map, double threshold)
{
  map.threshold = threshold;
  map.excluded.resize(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.excluded[i] = map.values[i] > threshold ? 1 : 0;
  }
}

bool is_occupied(double x, double y, const sim::Scenario & scenario)
{
  if (std::abs(y) > sim::kRoadHalfWidth) {
    return true;
  }
  for (const auto & car : scenario.obstacles) {
    if (std::abs(x - car.center_x) <= 0.5 * car.length &&
        std::abs(y - car.center_y()) <= 0.5 * car.width) {
      return true;
    }
  }
  return false;
}

void write_ppm(std::ostream & out, const RiskMap & map, const sim::Scenario & scenario)
{
  out << "P6\n" << map.cols << ' ' << map.rows << "\n255\n";
  for (int row = map.rows - 1; row >= 0; --row) {
    for (int col = 0; col < map.cols; ++col) {
      const auto center = map.cell_center(col, row);
      const auto index = static_cast<std::size_t>(row) * map.cols + col;
      unsigned char rgb[3] = {60, 170, 80};
      if (map.excluded[index] != 0) {
        rgb[0] = 200;
        rgb[1] = 60;
        rgb[2] = 50;
      }
      if (std::abs(center[1]) > sim::kRoadHalfWidth) {
        for (auto & channel : rgb) {
          channel = static_cast<unsigned char>(channel / 2);
        }
      } else if (is_occupied(center[0], center[1], scenario)) {
        rgb[0] = rgb[1] = rgb[2] = 30;
      }
      out.write(reinterpret_cast<const char *>(rgb), 3);
    }
  }
}

ConfusionCounts confusion(const RiskMap & map, const sim::Scenario & scenario, double threshold)
{
  ConfusionCounts counts;
  for (int row = 0; row < map.rows; ++row) {
    for (int col = 0; col < map.cols; ++col) {
      const auto center = map.cell_center(col, row);
      const bool occupied = is_occupied(center[0], center[1], scenario);
      const bool predicted_occupied = map.value(col, row) > threshold;
      if (occupied) {
        ++(predicted_occupied ? counts.occupied_hit : counts.occupied_miss);
      } else {
        ++(predicted_occupied ? counts.free_miss : counts.free_hit);
      }
    }
  }
  return counts;
}

ClassificationReport classification_report(const ConfusionCounts & c, double threshold)
{
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  const auto tp = static_cast<double>(c.occupied_hit);
  const auto fn = static_cast<double>(c.occupied_miss);
  const auto tn = static_cast<double>(c.free_hit);
  const auto fp = static_cast<double>(c.free_miss);
  ClassificationReport report;
  report.threshold = threshold;
  report.f1_occupied = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  report.f1_free = ratio(2.0 * tn, 2.0 * tn + fn + fp);
  report.average_f1 = 0.5 * (report.f1_occupied + report.f1_free);
  report.micro_f1 = ratio(tp + tn, tp + tn + fp + fn);
  report.recall_occupied = ratio(tp, tp + fn);
  report.recall_free = ratio(tn, tn + fp);
  report.balanced_accuracy = 0.5 * (report.recall_occupied + report.recall_free);
  report.predicted_occupied = c.occupied_hit + c.free_miss;
  return report;
}

std::vector<ClassificationReport> sweep_maps(
  std::span<const RiskMap> maps, std::span<const sim::Scenario> scenarios,
  std::span<const double> thresholds)
{
  if (thresholds.empty()) {
    throw std::invalid_argument("threshold sweep needs at least one threshold");
  }
  if (maps.size() != scenarios.size() || maps.empty()) {
    throw std::invalid_argument("one risk map per scenario required");
  }
  std::vector<ClassificationReport> reports;
  const auto n = static_cast<double>(maps.size());
  for (double threshold : thresholds) {
    ClassificationReport mean;
    mean.threshold = threshold;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const auto r = classification_report(confusion(maps[i], scenarios[i], threshold), threshold);
      mean.f1_free += r.f1_free / n;
      mean.f1_occupied += r.f1_occupied / n;
      mean.average_f1 += r.average_f1 / n;
      mean.micro_f1 += r.micro_f1 / n;
      mean.balanced_accuracy += r.balanced_accuracy / n;
      mean.recall_free += r.recall_free / n;
      mean.recall_occupied += r.recall_occupied / n;
      mean.predicted_occupied += r.predicted_occupied;
    }
    reports.push_back(mean);
  }
  return reports;
}

std::vector<ClassificationReport> pixel_classification_sweep(
  const nn::Ensemble & ensemble, std::span<const sim::Scenario> scenarios,
  std::span<const double> thresholds, const RiskMapConfig & config)
{
  std::vector<RiskMap> maps;
  maps.reserve(scenarios.size());
  for (const auto & scenario : scenarios) {
    maps.push_back(build_risk_map(ensemble, scenario, std::numeric_limits<double>::infinity(), config));
  }
  return sweep_maps(maps, scenarios, thresholds);
}

std::vector<double> quantile_thresholds(std::vector<double> values, int count)
{
  if (values.empty() || count <= 0) {
    throw std::invalid_argument("quantile thresholds need values and a positive count");
  }
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  const double last = static_cast<double>(values.size() - 1);
  for (int k = 1; k <= count; ++k) {
    const double q = (k - 0.5) / count;
    const double position = q * last;
    const auto lo = static_cast<std::size_t>(std::floor(position));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = position - static_cast<double>(lo);
    out.push_back(values[lo] + frac * (values[hi] - values[lo]));
  }
  return out;
}

}  // namespace hgdagger::eval
