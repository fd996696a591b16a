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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hgdagger/errors.hpp"
#include "hgdagger/evaluation.hpp"

namespace hgdagger::eval
{
namespace
{

Histogram two_bin(double a, double b)
{
  Histogram h = Histogram::uniform(0.0, 1.0, 2);
  h.mass = {a, b};
  return h;
}

TEST(Bhattacharyya, IdentityIsZero)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  Histogram h = Histogram::steering();
  for (int i = 0; i < 500; ++i) h.add(u(rng));
  EXPECT_NEAR(bhattacharyya(h, h), 0.0, 1e-12);
}

TEST(Bhattacharyya, PointMassAgainstUniformPair)
{
  EXPECT_NEAR(bhattacharyya(two_bin(1, 0), two_bin(0.5, 0.5)), 0.34657, 1e-5);
}

TEST(Bhattacharyya, DisjointSupportHitsCap)
{
  EXPECT_EQ(bhattacharyya(two_bin(1, 0), two_bin(0, 1)), kBhattacharyyaCap);
}

TEST(Bhattacharyya, SymmetricAndNonNegative)
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Histogram p = Histogram::steering(11), q = Histogram::steering(11);
    for (auto & m : p.mass) m = u(rng) < 0.3 ? 0.0 : u(rng);
    for (auto & m : q.mass) m = u(rng);
    p.mass[0] += 0.1;
    EXPECT_NEAR(bhattacharyya(p, q), bhattacharyya(q, p), 1e-12);
    EXPECT_GE(bhattacharyya(p, q), 0.0);
  }
}

TEST(Bhattacharyya, RejectsMismatchedBinning)
{
  EXPECT_THROW(bhattacharyya(Histogram::steering(41), Histogram::steering(21)), std::invalid_argument);
}

TEST(Histogram, ClampsIntoEdgeBinsAndNormalizes)
{
  Histogram h = Histogram::steering(41);
  h.add(-5.0);
  h.add(5.0);
  h.add(0.0, 2.0);
  EXPECT_EQ(h.mass.front(), 1.0);
  EXPECT_EQ(h.mass.back(), 1.0);
  EXPECT_EQ(h.mass[20], 2.0);
  const Histogram n = h.normalized();
  double sum = 0.0;
  for (double m : n.mass) sum += m;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

sim::SafetyEvent collision_at(double t)
{
  sim::SafetyEvent e;
  e.kind = sim::EventKind::collision;
  e.start_time = t;
  return e;
}

sim::SafetyEvent departure(double t, double duration)
{
  sim::SafetyEvent e;
  e.kind = sim::EventKind::road_departure;
  e.start_time = t;
  e.duration = duration;
  return e;
}

TEST(Metrics, RatesArePerMeter)
{
  RolloutRecord a, b;
  a.meters = 500.0;
  b.meters = 500.0;
  a.events = {collision_at(3.0), departure(1.0, 1.0)};
  b.events = {collision_at(7.0), departure(2.0, 3.0)};
  a.steering = {0.0, 0.1};
  b.steering = {-0.1};
  const RolloutMetrics m = aggregate({a, b});
  EXPECT_EQ(m.collisions, 2u);
  EXPECT_NEAR(m.collision_rate, 2e-3, 1e-15);
  EXPECT_NEAR(m.departure_rate, 2e-3, 1e-15);
  EXPECT_NEAR(m.mean_departure_duration, 2.0, 1e-12);
  EXPECT_EQ(m.meters_driven, 1000.0);
  EXPECT_NEAR(m.steering_histogram.total(), 1.0, 1e-12);
}

TEST(Metrics, ExpertPolicyIsClean)
{
  const auto scenarios = evaluation_scenarios(1000, 8, 500.0);
  const RolloutMetrics m = rollout_metrics(expert_controller(), scenarios);
  EXPECT_EQ(m.collision_rate, 0.0);
  EXPECT_EQ(m.departure_rate, 0.0);
  EXPECT_GT(m.meters_driven, 8 * 490.0);
}

nn::Ensemble untrained(std::uint64_t seed)
{
  nn::TrainConfig c;
  c.layer_sizes = {7, 16, 2};
  c.rng_seed = seed;
  nn::Ensemble e = nn::init_ensemble(c);
  e.input.mean << 0, 0, 5, 1.5, 1.5, 30, 30;
  e.input.scale << 1.5, 0.3, 1, 1.5, 1.5, 20, 20;
  e.output.mean << 0, 5;
  e.output.scale << 0.2, 0.5;
  return e;
}

TEST(Metrics, RecountFromRawEvents)
{
  const nn::Ensemble e = untrained(3);
  const auto scenarios = evaluation_scenarios(5, 6, 200.0);
  const RolloutMetrics m = rollout_metrics(novice_controller(e), scenarios);
  std::size_t collisions = 0, departures = 0;
  double meters = 0.0, duration = 0.0;
  for (const auto & r : m.rollouts) {
    meters += r.meters;
    for (const auto & ev : r.events) {
      if (ev.kind == sim::EventKind::collision) {
        ++collisions;
      } else {
        ++departures;
        duration += *ev.duration;
      }
    }
  }
  ASSERT_GT(meters, 0.0);
  EXPECT_EQ(m.collisions, collisions);
  EXPECT_EQ(m.departures, departures);
  EXPECT_NEAR(m.collision_rate, collisions / meters, 1e-15);
  EXPECT_NEAR(m.departure_rate, departures / meters, 1e-15);
  if (departures > 0) {
    EXPECT_NEAR(m.mean_departure_duration, duration / departures, 1e-12);
  }
}

TEST(PermittedSet, MembershipRecheck)
{
  const nn::Ensemble e = untrained(4);
  PermittedSetConfig config;
  config.rollout_time = 3.0;
  config.road_length = 200.0;
  config.scenario_pool = 8;
  // Median doubt over a few region draws splits the groups roughly evenly.
  const double tau = 0.5;
  const PermittedSetResult r = permitted_set_experiment(e, tau, 20, config);
  ASSERT_EQ(r.inside_inits.size(), 20u);
  ASSERT_EQ(r.outside_inits.size(), 20u);
  for (const auto & group : {r.inside_inits, r.outside_inits}) {
    for (const auto & init : group) {
      const auto scenario = sim::generate_scenario(init.scenario_seed, config.road_length);
      const auto obs = sim::observe(init.state, scenario);
      EXPECT_TRUE(config.region.contains(init.state, obs));
      EXPECT_EQ(nn::doubt(e, obs), init.doubt);
    }
  }
  for (const auto & init : r.inside_inits) EXPECT_LE(init.doubt, tau);
  for (const auto & init : r.outside_inits) EXPECT_GT(init.doubt, tau);
  EXPECT_EQ(r.inside.rollouts.size(), 20u);
}

TEST(PermittedSet, ReproducibleForFixedSeed)
{
  const nn::Ensemble e = untrained(4);
  PermittedSetConfig config;
  config.rollout_time = 2.0;
  config.road_length = 200.0;
  config.scenario_pool = 4;
  const auto a = permitted_set_experiment(e, 0.5, 5, config);
  const auto b = permitted_set_experiment(e, 0.5, 5, config);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.inside_inits[i].doubt, b.inside_inits[i].doubt);
    EXPECT_EQ(a.outside_inits[i].state.x, b.outside_inits[i].state.x);
  }
}

TEST(PermittedSet, InfiniteTauLeavesOutsideEmpty)
{
  const nn::Ensemble e = untrained(4);
  PermittedSetConfig config;
  config.max_draws = 2000;
  config.road_length = 200.0;
  config.scenario_pool = 4;
  try {
    permitted_set_experiment(e, std::numeric_limits<double>::infinity(), 5, config);
    FAIL() << "expected DegenerateRegion";
  } catch (const DegenerateRegion & err) {
    EXPECT_EQ(err.group(), "outside");
  }
  try {
    permitted_set_experiment(e, -1.0, 5, config);
    FAIL() << "expected DegenerateRegion";
  } catch (const DegenerateRegion & err) {
    EXPECT_EQ(err.group(), "inside");
  }
}

TEST(Region, NearObstacleUsesClosestGap)
{
  const InitializationRegion region;
  sim::Observation obs;
  obs.d_left = 60.0;
  obs.d_right = 9.0;
  EXPECT_FALSE(region.contains({10, -1.5, 0, 4.5}, obs));
  obs.d_right = 5.0;
  EXPECT_TRUE(region.contains({10, -1.5, 0, 4.5}, obs));
  EXPECT_FALSE(region.contains({10, -1.5, 0.3, 4.5}, obs));
  EXPECT_FALSE(region.contains({10, -6.5, 0, 4.5}, obs));
  EXPECT_FALSE(region.contains({10, -1.5, 0, 5.5}, obs));
}

std::vector<RiskSample> random_samples(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x(0.0, 30.0), y(-5.0, 5.0), v(0.0, 2.0);
  std::vector<RiskSample> out;
  for (int i = 0; i < n; ++i) out.push_back({x(rng), y(rng), 0.0, v(rng)});
  return out;
}

TEST(Interpolator, ExactAtDataSites)
{
  const auto samples = random_samples(300, 1);
  const ScatteredInterpolator interp(samples);
  for (const auto & s : samples) {
    EXPECT_EQ(interp(s.x, s.y), s.doubt);
  }
}

TEST(Interpolator, NearestMatchesBruteForceAndValueIsBounded)
{
  const auto samples = random_samples(400, 2);
  const ScatteredInterpolator interp(samples, 0.7);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-2.0, 32.0), y(-7.0, 7.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double qx = x(rng), qy = y(rng);
    std::vector<std::pair<double, int>> order;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      order.push_back({std::hypot(samples[i].x - qx, samples[i].y - qy), static_cast<int>(i)});
    }
    std::sort(order.begin(), order.end());
    const auto near = interp.nearest(qx, qy, 3);
    ASSERT_EQ(near.size(), 3u);
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(
        std::hypot(samples[near[k]].x - qx, samples[near[k]].y - qy), order[k].first, 1e-12);
      lo = std::min(lo, samples[order[k].second].doubt);
      hi = std::max(hi, samples[order[k].second].doubt);
    }
    const double value = interp(qx, qy);
    EXPECT_GE(value, lo - 1e-12);
    EXPECT_LE(value, hi + 1e-12);
  }
}

bool oracle_occupied(double x, double y, const sim::Scenario & s)
{
  if (std::abs(y) > 3.0) return true;
  for (const auto & car : s.obstacles) {
    const double cy = car.lane == sim::Lane::left ? 1.5 : -1.5;
    if (std::abs(x - car.center_x) <= 2.0 && std::abs(y - cy) <= 0.75) return true;
  }
  return false;
}

TEST(RiskMap, ZeroDoubtEnsemblePermitsEverything)
{
  nn::Ensemble e = untrained(5);
  e.members.assign(3, e.members.front());
  const auto scenario = sim::generate_scenario(1, 60.0);
  const RiskMap map = build_risk_map(e, scenario, 1e-12);
  EXPECT_EQ(map.cols, 240);
  EXPECT_EQ(map.rows, 48);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    EXPECT_NEAR(map.values[i], 0.0, 1e-12);
    EXPECT_EQ(map.excluded[i], 0);
  }
  RiskMap all = map;
  relabel(all, -1.0);
  EXPECT_TRUE(std::all_of(all.excluded.begin(), all.excluded.end(), [](auto v) { return v == 1; }));
}

TEST(RiskMap, ArcSamplesStayInsideTheGrid)
{
  const nn::Ensemble e = untrained(6);
  const auto scenario = sim::generate_scenario(2, 60.0);
  const RiskMapConfig config;
  const auto samples = sample_arcs(e, scenario, config);
  ASSERT_FALSE(samples.empty());
  for (const auto & s : samples) {
    EXPECT_GE(s.x, 0.0);
    EXPECT_LE(s.x, 60.0);
    EXPECT_LE(std::abs(s.y), 3.0 + config.margin);
    EXPECT_GE(s.doubt, 0.0);
  }
}

TEST(RiskMap, ConfusionMatchesIndependentTally)
{
  const nn::Ensemble e = untrained(7);
  const auto scenario = sim::generate_scenario(3, 60.0);
  const RiskMap map = build_risk_map(e, scenario, 0.3);
  for (double threshold : {0.1, 0.3, 0.8}) {
    const ConfusionCounts c = confusion(map, scenario, threshold);
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (int row = 0; row < map.rows; ++row) {
      for (int col = 0; col < map.cols; ++col) {
        const auto center = map.cell_center(col, row);
        const bool occ = oracle_occupied(center[0], center[1], scenario);
        const bool excl = map.value(col, row) > threshold;
        tp += occ && excl;
        fn += occ && !excl;
        tn += !occ && !excl;
        fp += !occ && excl;
      }
    }
    EXPECT_EQ(c.occupied_hit, tp);
    EXPECT_EQ(c.occupied_miss, fn);
    EXPECT_EQ(c.free_hit, tn);
    EXPECT_EQ(c.free_miss, fp);

    const ClassificationReport r = classification_report(c, threshold);
    const double n = static_cast<double>(c.total());
    EXPECT_NEAR(r.micro_f1, (tp + tn) / n, 1e-12);
    EXPECT_NEAR(r.recall_occupied, tp / static_cast<double>(tp + fn), 1e-12);
    EXPECT_NEAR(r.balanced_accuracy, 0.5 * (r.recall_free + r.recall_occupied), 1e-12);
    for (double v : {r.f1_free, r.f1_occupied, r.average_f1, r.micro_f1, r.balanced_accuracy}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Sweep, MonotoneAndExtremes)
{
  const nn::Ensemble e = untrained(8);
  const auto scenarios = evaluation_scenarios(9, 2, 60.0);
  std::vector<double> thresholds{-1.0, 0.05, 0.2, 0.5, 1.0, std::numeric_limits<double>::infinity()};
  const auto reports = pixel_classification_sweep(e, scenarios, thresholds);
  ASSERT_EQ(reports.size(), thresholds.size());
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_LE(reports[i].predicted_occupied, reports[i - 1].predicted_occupied);
  }
  EXPECT_EQ(reports.front().recall_free, 0.0);
  EXPECT_EQ(reports.front().recall_occupied, 1.0);
  EXPECT_EQ(reports.back().recall_occupied, 0.0);
  EXPECT_EQ(reports.back().recall_free, 1.0);
  EXPECT_EQ(reports.back().predicted_occupied, 0u);
}

TEST(Sweep, QuantileThresholdsAreSortedAndInRange)
{
  std::vector<double> values;
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> d(2.0);
  for (int i = 0; i < 1000; ++i) values.push_back(d(rng));
  const auto t = quantile_thresholds(values, 30);
  ASSERT_EQ(t.size(), 30u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  EXPECT_GE(t.front(), *std::min_element(values.begin(), values.end()));
  EXPECT_LE(t.back(), *std::max_element(values.begin(), values.end()));
}

TEST(Ppm, HeaderAndSize)
{
  nn::Ensemble e = untrained(5);
  const auto scenario = sim::generate_scenario(1, 60.0);
  RiskMapConfig config;
  config.cell_size = 1.0;
  const RiskMap map = build_risk_map(e, scenario, 0.2, config);
  std::ostringstream out;
  write_ppm(out, map, scenario);
  const std::string header = "P6\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n255\n";
  EXPECT_EQ(out.str().substr(0, header.size()), header);
  EXPECT_EQ(out.str().size(), header.size() + 3u * map.cols * map.rows);
}

}  // namespace
}  // namespace hgdagger::eval
