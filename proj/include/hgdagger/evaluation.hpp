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
#ifndef HGDAGGER__EVALUATION_HPP_
#define HGDAGGER__EVALUATION_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "hgdagger/ensemble.hpp"
#include "hgdagger/experts.hpp"
#include "hgdagger/sim.hpp"
#include "hgdagger/training.hpp"

namespace hgdagger::eval
{

inline constexpr int kSteeringBins = 41;
inline constexpr double kBhattacharyyaCap = 50.0;

/// Fixed-range histogram with uniform bins; values outside the range land in
/// the edge bins.
struct Histogram
{
  double lower{-sim::kSteerMax};
  double upper{sim::kSteerMax};
  std::vector<double> mass;

  static Histogram uniform(double lower, double upper, int bins);
  static Histogram steering(int bins = kSteeringBins);

  void add(double value, double weight = 1.0);
  double total() const;
  /// Probability masses summing to one (unchanged when empty).
  Histogram normalized() const;
  bool same_binning(const Histogram & other) const;
};

/// -ln sum_i sqrt(p_i q_i), capped at kBhattacharyyaCap when the coefficient
/// vanishes. Throws std::invalid_argument for mismatched binning.
double bhattacharyya(const Histogram & p, const Histogram & q);

using Controller = std::function<sim::Action(const sim::EgoState &, const sim::Scenario &)>;

Controller novice_controller(const nn::Ensemble & ensemble);
Controller expert_controller(experts::SyntheticExpertConfig config = {});

struct EvalConfig
{
  double dt{sim::kControlDt};
  double max_time{120.0};
  int steering_bins{kSteeringBins};
};

struct RolloutRecord
{
  std::uint64_t scenario_seed{0};
  sim::EgoState start;
  double meters{0.0};
  double duration{0.0};
  training::Termination termination{training::Termination::end_of_road};
  std::vector<sim::SafetyEvent> events;
  std::vector<double> steering;
};

struct RolloutMetrics
{
  double collision_rate{0.0};
  double departure_rate{0.0};
  double mean_departure_duration{0.0};
  double meters_driven{0.0};
  std::size_t collisions{0};
  std::size_t departures{0};
  Histogram steering_histogram;
  std::vector<RolloutRecord> rollouts;
};

/// Closed-loop rollout of a controller alone; stops at the end of the road,
/// on collision, or at max_time.
RolloutRecord evaluate_rollout(
  const Controller & controller, const sim::Scenario & scenario, const sim::EgoState & start,
  double dt, double max_time);

/// Event counts over total longitudinal progress.
RolloutMetrics aggregate(std::vector<RolloutRecord> records, int steering_bins = kSteeringBins);

RolloutMetrics rollout_metrics(
  const Controller & controller, std::span<const sim::Scenario> scenarios,
  const EvalConfig & config = {});

std::vector<sim::Scenario> evaluation_scenarios(std::uint64_t seed, int count, double road_length);

/// Conservative initialization set: pose/speed box near an obstacle.
struct InitializationRegion
{
  double y_min{-6.0};
  double y_max{6.0};
  double theta_min_deg{-15.0};
  double theta_max_deg{15.0};
  double s_min{4.0};
  double s_max{5.0};
  double near_obstacle{8.0};

  bool contains(const sim::EgoState & state, const sim::Observation & obs) const;
};

struct PermittedSetConfig
{
  InitializationRegion region;
  double rollout_time{30.0};
  double dt{sim::kControlDt};
  long long max_draws{1'000'000};
  std::uint64_t seed{0};
  double road_length{500.0};
  int scenario_pool{64};
  int steering_bins{kSteeringBins};
};

struct Initialization
{
  std::uint64_t scenario_seed{0};
  sim::EgoState state;
  double doubt{0.0};
};

struct PermittedSetResult
{
  RolloutMetrics inside;
  RolloutMetrics outside;
  std::vector<Initialization> inside_inits;
  std::vector<Initialization> outside_inits;
  long long draws{0};
};

/// Rejection-samples n_inits starts with doubt <= tau and n_inits with doubt
/// > tau from the region, then rolls the novice out from each. Throws
/// DegenerateRegion naming the group that could not be filled.
PermittedSetResult permitted_set_experiment(
  const nn::Ensemble & ensemble, double tau, int n_inits, const PermittedSetConfig & config);

struct RiskMapConfig
{
  double anchor_x{0.0};
  double anchor_y{-0.5 * sim::kLaneWidth};
  double anchor_theta{0.0};
  int arcs{41};
  double max_curvature{1.0 / 8.0};
  double sample_spacing{0.5};
  double cell_size{0.25};
  double margin{3.0};
  double speed{4.5};
};

struct RiskSample
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double doubt{0.0};
};

/// Linear interpolation over scattered samples from their three nearest
/// neighbours: barycentric inside their triangle, inverse-distance weights
/// otherwise. Either way the result stays within the neighbours' range.
class ScatteredInterpolator
{
public:
  explicit ScatteredInterpolator(std::vector<RiskSample> samples, double bucket_size = 1.0);

  double operator()(double x, double y) const;
  /// Indices of the three nearest samples (fewer if there are fewer samples).
  std::vector<int> nearest(double x, double y, int count = 3) const;
  const std::vector<RiskSample> & samples() const { return samples_; }

private:
  std::vector<RiskSample> samples_;
  double bucket_size_;
  double min_x_{0.0};
  double min_y_{0.0};
  int cols_{0};
  int rows_{0};
  std::vector<std::vector<int>> buckets_;
};

struct RiskMap
{
  double origin_x{0.0};
  double origin_y{0.0};
  double cell_size{0.25};
  int cols{0};
  int rows{0};
  // Row-major, row 0 at origin_y.
  std::vector<double> values;
  std::vector<std::uint8_t> excluded;
  double threshold{0.0};
  std::vector<RiskSample> samples;

  double value(int col, int row) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  std::array<double, 2> cell_center(int col, int row) const;
};

/// Doubt sampled along constant-curvature arcs from the anchor pose.
std::vector<RiskSample> sample_arcs(
  const nn::Ensemble & ensemble, const sim::Scenario & scenario, const RiskMapConfig & config);

/// Grid over the whole road plus a lateral margin. Cells holding samples
/// take the value of the sample nearest their center; the rest are
/// interpolated.
RiskMap build_risk_map(
  const nn::Ensemble & ensemble, const sim::Scenario & scenario, double tau,
  const RiskMapConfig & config = {});

void relabel(RiskMap & map, double threshold);

/// Off-road or inside an obstacle footprint.
bool is_occupied(double x, double y, const sim::Scenario & scenario);

/// Binary portable pixmap: green permitted, red excluded, obstacles and road
/// edges overlaid.
void write_ppm(std::ostream & out, const RiskMap & map, const sim::Scenario & scenario);

struct ConfusionCounts
{
  // "Positive" is the occupied class; prediction occupied = excluded.
  std::size_t occupied_hit{0};
  std::size_t occupied_miss{0};
  std::size_t free_hit{0};
  std::size_t free_miss{0};

  std::size_t total() const { return occupied_hit + occupied_miss + free_hit + free_miss; }
};

struct ClassificationReport
{
  double threshold{0.0};
  double f1_free{0.0};
  double f1_occupied{0.0};
  double average_f1{0.0};
  double micro_f1{0.0};
  double balanced_accuracy{0.0};
  double recall_free{0.0};
  double recall_occupied{0.0};
  std::size_t predicted_occupied{0};
};

ConfusionCounts confusion(const RiskMap & map, const sim::Scenario & scenario, double threshold);
ClassificationReport classification_report(const ConfusionCounts & counts, double threshold);

/// Per-threshold reports, each field averaged over the scenarios.
std::vector<ClassificationReport> pixel_classification_sweep(
  const nn::Ensemble & ensemble, std::span<const sim::Scenario> scenarios,
  std::span<const double> thresholds, const RiskMapConfig & config = {});

std::vector<ClassificationReport> sweep_maps(
  std::span<const RiskMap> maps, std::span<const sim::Scenario> scenarios,
  std::span<const double> thresholds);

/// Thresholds at the (k - 0.5) / count quantiles of the pooled values.
std::vector<double> quantile_thresholds(std::vector<double> values, int count);

}  // namespace hgdagger::eval

#endif  // HGDAGGER__EVALUATION_HPP_
