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
#include "hgdagger/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hgdagger/dataset.hpp"
#include "hgdagger/ensemble.hpp"
#include "hgdagger/errors.hpp"
#include "hgdagger/evaluation.hpp"
#include "hgdagger/experts.hpp"
#include "hgdagger/server.hpp"
#include "hgdagger/session.hpp"
#include "hgdagger/text.hpp"
#include "hgdagger/training.hpp"

namespace hgdagger::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

const std::map<std::string, std::string> & default_settings()
{
  static const std::map<std::string, std::string> defaults = {
    {"seed", "0"},
    {"bc_labels", "4000"},
    {"labels_per_epoch", "1000"},
    {"epochs", "5"},
    {"max_rollouts_per_epoch", "200"},
    {"road_length", "500"},
    {"dt", "0.1"},
    {"max_episode_time", "120"},
    {"learning_rate", "0.001"},
    {"minibatch_size", "64"},
    {"epochs_per_fit", "200"},
    {"members", "5"},
    {"hidden", "64,64"},
    {"optimizer", "adam"},
    {"weight_init_scale", "1"},
    {"beta0", "0.85"},
    {"beta_decay", "0.85"},
    {"eval_seed", "1000"},
    {"eval_scenarios", "8"},
    {"eval_road_length", "500"},
    {"eval_max_time", "120"},
    {"n_inits", "200"},
    {"rollout_time", "30"},
    {"max_draws", "1000000"},
    {"region_seed", "0"},
    {"scenario_pool", "64"},
    {"anchor_x", "0"},
    {"anchor_y", "-1.5"},
    {"anchor_theta", "0"},
    {"arcs", "41"},
    {"max_curvature", "0.125"},
    {"sample_spacing", "0.5"},
    {"cell_size", "0.25"},
    {"margin", "3"},
    {"synth_speed", "4.5"},
    {"scenario_seed", "1"},
    {"map_road_length", "500"},
    {"sweep_seed", "2000"},
    {"sweep_scenarios", "40"},
    {"sweep_thresholds", "30"},
    {"sweep_road_length", "60"},
    {"host", "127.0.0.1"},
    {"port", "8765"},
    {"rate_hz", "10"},
  };
  return defaults;
}

namespace
{

const std::map<std::string, std::string> kPaperScale = {
  {"bc_labels", "10000"}, {"labels_per_epoch", "2000"}, {"epochs", "5"}};

std::string trim(std::string_view text)
{
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) {
    return {};
  }
  const auto end = text.find_last_not_of(" \t\r");
  return std::string(text.substr(begin, end - begin + 1));
}

std::string timestamp_now()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Resolved key/value settings with typed accessors.
class Settings
{
public:
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::string & text(const std::string & key) const { return values_.at(key); }
  double real(const std::string & key) const
  {
    try {
      return parse_real(text(key));
    } catch (const std::exception &) {
      throw FormatError("setting '" + key + "' is not a number: '" + text(key) + "'");
    }
  }
  long long integer(const std::string & key) const
  {
    try {
      return parse_integer(text(key));
    } catch (const std::exception &) {
      throw FormatError("setting '" + key + "' is not an integer: '" + text(key) + "'");
    }
  }
  std::uint64_t seed(const std::string & key) const
  {
    const long long value = integer(key);
    if (value < 0) {
      throw FormatError("setting '" + key + "' must be non-negative");
    }
    return static_cast<std::uint64_t>(value);
  }
  int count(const std::string & key) const { return static_cast<int>(integer(key)); }
  const std::map<std::string, std::string> & values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

training::LoopConfig loop_config(const Settings & s)
{
  training::LoopConfig config;
  config.rng_seed = s.seed("seed");
  config.bc_labels = s.count("bc_labels");
  config.labels_per_epoch = s.count("labels_per_epoch");
  config.epochs = s.count("epochs");
  config.max_rollouts_per_epoch = s.count("max_rollouts_per_epoch");
  config.road_length = s.real("road_length");
  config.dt = s.real("dt");
  config.max_episode_time = s.real("max_episode_time");
  config.train.learning_rate = s.real("learning_rate");
  config.train.minibatch_size = s.count("minibatch_size");
  config.train.epochs_per_fit = s.count("epochs_per_fit");
  config.train.members = s.count("members");
  config.train.weight_init_scale = s.real("weight_init_scale");
  config.train.optimizer = nn::optimizer_from_string(s.text("optimizer"));
  std::vector<int> sizes{sim::kObservationSize};
  std::string hidden = s.text("hidden");
  for (char & c : hidden) {
    if (c == ',') {
      c = ' ';
    }
  }
  for (const auto & token : split_whitespace(hidden)) {
    sizes.push_back(static_cast<int>(parse_integer(token)));
  }
  sizes.push_back(sim::kActionSize);
  config.train.layer_sizes = sizes;
  config.validate();
  return config;
}

training::DaggerSchedule dagger_schedule(const Settings & s)
{
  training::DaggerSchedule schedule{s.real("beta0"), s.real("beta_decay")};
  schedule.validate();
  return schedule;
}

eval::EvalConfig eval_config(const Settings & s)
{
  eval::EvalConfig config;
  config.dt = s.real("dt");
  config.max_time = s.real("eval_max_time");
  return config;
}

eval::RiskMapConfig risk_map_config(const Settings & s)
{
  eval::RiskMapConfig config;
  config.anchor_x = s.real("anchor_x");
  config.anchor_y = s.real("anchor_y");
  config.anchor_theta = s.real("anchor_theta");
  config.arcs = s.count("arcs");
  config.max_curvature = s.real("max_curvature");
  config.sample_spacing = s.real("sample_spacing");
  config.cell_size = s.real("cell_size");
  config.margin = s.real("margin");
  config.speed = s.real("synth_speed");
  if (config.arcs <= 0 || !(config.sample_spacing > 0.0) || !(config.cell_size > 0.0)) {
    throw std::invalid_argument("risk map needs positive arcs, sample_spacing and cell_size");
  }
  return config;
}

json event_json(const sim::SafetyEvent & event)
{
  json e = {{"kind", sim::to_string(event.kind)},
            {"start_time", event.start_time},
            {"position", event.position}};
  if (event.duration) {
    e["duration"] = *event.duration;
  }
  if (event.obstacle >= 0) {
    e["obstacle"] = event.obstacle;
  }
  return e;
}

json rollout_json(const eval::RolloutRecord & record)
{
  json events = json::array();
  for (const auto & event : record.events) {
    events.push_back(event_json(event));
  }
  return {{"type", "rollout"},
          {"scenario_seed", record.scenario_seed},
          {"start", {{"x", record.start.x}, {"y", record.start.y}, {"theta", record.start.theta},
                     {"s", record.start.s}}},
          {"meters", record.meters},
          {"duration", record.duration},
          {"termination", training::to_string(record.termination)},
          {"events", std::move(events)}};
}

json metrics_json(const eval::RolloutMetrics & m)
{
  return {{"collision_rate", m.collision_rate},
          {"departure_rate", m.departure_rate},
          {"mean_departure_duration", m.mean_departure_duration},
          {"meters_driven", m.meters_driven},
          {"collisions", m.collisions},
          {"departures", m.departures},
          {"rollouts", m.rollouts.size()},
          {"steering_histogram",
           {{"lower", m.steering_histogram.lower},
            {"upper", m.steering_histogram.upper},
            {"mass", m.steering_histogram.mass}}}};
}

json report_json(const eval::ClassificationReport & r)
{
  return {{"threshold", r.threshold},
          {"f1_free", r.f1_free},
          {"f1_occupied", r.f1_occupied},
          {"average_f1", r.average_f1},
          {"micro_f1", r.micro_f1},
          {"balanced_accuracy", r.balanced_accuracy},
          {"recall_free", r.recall_free},
          {"recall_occupied", r.recall_occupied},
          {"predicted_occupied", r.predicted_occupied}};
}

json epoch_json(const training::EpochStats & e)
{
  return {{"epoch", e.epoch},
          {"rollouts", e.rollouts},
          {"labels", e.labels},
          {"dataset_size", e.dataset_size},
          {"interventions", e.interventions},
          {"steps", e.steps},
          {"expert_steps", e.expert_steps},
          {"beta", e.beta}};
}

// Run directory plus the manifest that describes it. Every artifact goes
// through write() so its hash is recorded.
class Run
{
public:
  Run(fs::path dir, std::string command, std::vector<std::string> args, const Settings & settings)
  : dir_(std::move(dir))
  {
    fs::create_directories(dir_);
    manifest_["command"] = std::move(command);
    manifest_["args"] = std::move(args);
    manifest_["config"] = settings.values();
    manifest_["artifacts"] = json::object();
    manifest_["timestamps"] = {{"started", timestamp_now()}};
  }

  const fs::path & dir() const { return dir_; }
  json & manifest() { return manifest_; }

  void write(const std::string & name, const std::string & content)
  {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    if (!out) {
      throw std::runtime_error("cannot write " + (dir_ / name).string());
    }
    manifest_["artifacts"][name] = git_blob_sha1(content);
  }

  void write_dataset(const std::string & name, const Dataset & dataset)
  {
    std::ostringstream out;
    hgdagger::write_dataset(out, dataset);
    write(name, out.str());
  }

  void write_checkpoint(const std::string & name, const nn::Ensemble & ensemble)
  {
    std::ostringstream out;
    nn::write_checkpoint(out, ensemble);
    write(name, out.str());
  }

  void write_jsonl(const std::string & name, const std::vector<json> & records)
  {
    std::string content;
    for (const auto & record : records) {
      content += record.dump();
      content += '\n';
    }
    write(name, content);
  }

  void finish(const std::string & status)
  {
    manifest_["status"] = status;
    manifest_["timestamps"]["finished"] = timestamp_now();
    std::ofstream out(dir_ / "manifest.json");
    out << manifest_.dump(2) << '\n';
  }

  void fail(const std::string & message)
  {
    std::ofstream(dir_ / "FAILED") << message << '\n';
    manifest_["error"] = message;
    finish("failed");
  }

private:
  fs::path dir_;
  json manifest_;
};

struct Invocation
{
  std::string command;
  Settings settings;
  std::vector<std::string> args;
  std::optional<std::string> checkpoint;
  std::optional<double> tau;
  std::string expert{"synthetic"};
  std::optional<std::string> bc_dataset;
  std::ostream & out;
};

nn::Ensemble load_policy(const Invocation & inv)
{
  if (!inv.checkpoint) {
    throw std::invalid_argument(inv.command + " needs --checkpoint");
  }
  return nn::load_checkpoint(*inv.checkpoint);
}

// --tau, else the tau recorded in the manifest next to the checkpoint.
double resolve_tau(const Invocation & inv)
{
  if (inv.tau) {
    return *inv.tau;
  }
  const fs::path manifest = fs::path(*inv.checkpoint).parent_path() / "manifest.json";
  std::ifstream in(manifest);
  if (in) {
    const json m = json::parse(in, nullptr, false);
    if (!m.is_discarded() && m.contains("tau") && m["tau"].is_number()) {
      return m["tau"].get<double>();
    }
  }
  throw UndefinedThreshold(
    "no --tau given and no learned tau recorded in " + manifest.string());
}

void record_seeds(Run & run, const training::LoopConfig & config)
{
  json fits = json::array();
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    fits.push_back(training::fit_seed(config, epoch));
  }
  run.manifest()["seeds"] = {{"base", config.rng_seed}, {"fits", fits}};
}

training::BcResult bc_stage(Run & run, const Invocation & inv, const training::LoopConfig & config)
{
  experts::SyntheticExpert expert;
  const training::ScenarioSource source{config.rng_seed, config.road_length};
  training::BcResult bc;
  if (inv.bc_dataset) {
    bc.dataset = load_dataset(*inv.bc_dataset);
    bc.ensemble = nn::fit(bc.dataset, [&] {
      nn::TrainConfig train = config.train;
      train.rng_seed = training::fit_seed(config, 0);
      return train;
    }());
  } else {
    bc = training::run_bc(expert, source, config);
  }
  spdlog::info("behavioral cloning fit on {} labels", bc.dataset.size());
  run.write_dataset("dataset-bc.txt", bc.dataset);
  run.write_checkpoint("policy-epoch-0.ckpt", bc.ensemble);
  return bc;
}

void cmd_train_bc(Run & run, const Invocation & inv)
{
  const auto config = loop_config(inv.settings);
  record_seeds(run, config);
  const auto bc = bc_stage(run, inv, config);
  run.write_dataset("dataset.txt", bc.dataset);
  run.write_checkpoint("policy.ckpt", bc.ensemble);
  run.manifest()["labels_per_epoch"] = json::array({bc.dataset.size()});
}

void cmd_train_dagger(Run & run, const Invocation & inv)
{
  const auto config = loop_config(inv.settings);
  const auto schedule = dagger_schedule(inv.settings);
  record_seeds(run, config);
  const auto bc = bc_stage(run, inv, config);
  experts::SyntheticExpert expert;
  const training::ScenarioSource source{config.rng_seed, config.road_length};
  const auto result = training::run_dagger(expert, bc.ensemble, bc.dataset, schedule, source, config);
  std::vector<json> epochs;
  json labels = json::array({bc.dataset.size()});
  for (std::size_t i = 0; i < result.policies.size(); ++i) {
    run.write_checkpoint("policy-epoch-" + std::to_string(i + 1) + ".ckpt", result.policies[i]);
  }
  for (const auto & e : result.epochs) {
    epochs.push_back(epoch_json(e));
    labels.push_back(e.labels);
  }
  run.write_jsonl("epochs.jsonl", epochs);
  run.write_dataset("dataset.txt", result.dataset);
  run.write_checkpoint("policy.ckpt", result.policies.empty() ? bc.ensemble : result.policies.back());
  run.manifest()["labels_per_epoch"] = labels;
  run.manifest()["beta"] = result.betas;
}

void finish_hg(
  Run & run, const training::BcResult & bc, const std::vector<nn::Ensemble> & policies,
  const Dataset & dataset, const InterventionLog & interventions,
  const std::vector<training::EpochStats> & stats)
{
  std::vector<json> epochs;
  json labels = json::array({bc.dataset.size()});
  for (std::size_t i = 0; i < policies.size(); ++i) {
    run.write_checkpoint("policy-epoch-" + std::to_string(i + 1) + ".ckpt", policies[i]);
  }
  for (const auto & e : stats) {
    epochs.push_back(epoch_json(e));
    labels.push_back(e.labels);
  }
  run.write_jsonl("epochs.jsonl", epochs);
  run.write_dataset("dataset.txt", dataset);
  run.write_checkpoint("policy.ckpt", policies.empty() ? bc.ensemble : policies.back());
  std::ostringstream log;
  write_intervention_log(log, interventions);
  run.write("interventions.txt", log.str());
  run.manifest()["labels_per_epoch"] = labels;
  if (interventions.entries.empty()) {
    run.manifest()["tau"] = nullptr;
    run.manifest()["tau_status"] = "no_interventions";
    spdlog::warn("no interventions were logged; tau is undefined");
  } else {
    run.manifest()["tau"] = training::compute_tau(interventions);
    run.manifest()["tau_status"] = "learned";
  }
}

// Human gating: each epoch's policy is served to operator sessions until the
// epoch's label budget is met, then the ensemble is refit.
void train_hg_human(Run & run, const Invocation & inv, const training::LoopConfig & config)
{
  const auto bc = bc_stage(run, inv, config);
  std::mutex mutex;
  std::condition_variable changed;
  Dataset dataset = bc.dataset;
  InterventionLog interventions;
  std::shared_ptr<const nn::Ensemble> current = std::make_shared<nn::Ensemble>(bc.ensemble);
  int epoch = 1;
  int rollout = 0;
  bool refitting = false;
  std::size_t epoch_labels = 0;
  training::EpochStats stats;
  std::vector<training::EpochStats> all_stats;
  std::vector<nn::Ensemble> policies;
  std::vector<json> sessions;

  auto resolver = [&](const std::string & id) {
    std::lock_guard lock(mutex);
    if (refitting || epoch > config.epochs) {
      throw SessionRejected("no policy is being served right now");
    }
    if (id != "current" && id != "epoch-" + std::to_string(epoch)) {
      throw SessionRejected(
        "checkpoint '" + id + "' is not served; use 'current' or 'epoch-" +
        std::to_string(epoch) + "'");
    }
    session::CheckpointEntry entry;
    entry.policy = current;
    entry.options.dt = config.dt;
    entry.options.max_time = config.max_episode_time;
    entry.options.road_length = config.road_length;
    entry.options.epoch = epoch;
    entry.options.rollout = rollout++;
    return entry;
  };
  auto observer = [&](const session::Session & s, bool finished) {
    std::lock_guard lock(mutex);
    if (s.options().epoch != epoch || refitting) {
      return;
    }
    dataset.append(s.dataset());
    interventions.entries.insert(
      interventions.entries.end(), s.interventions().entries.begin(),
      s.interventions().entries.end());
    epoch_labels += s.dataset().size();
    ++stats.rollouts;
    stats.steps += static_cast<std::size_t>(s.state().tick);
    stats.expert_steps += s.dataset().size();
    stats.interventions += s.interventions().entries.size();
    std::ostringstream events;
    for (const auto & e : s.event_log()) {
      events << e.tick << ' ' << session::to_string(e.event.kind) << ' '
             << format_real(e.event.value) << ' ' << format_real(e.event.client_time) << '\n';
    }
    sessions.push_back(
      {{"epoch", epoch},
       {"rollout", s.options().rollout},
       {"scenario_seed", s.scenario().rng_seed},
       {"ticks", s.state().tick},
       {"labels", s.dataset().size()},
       {"interventions", s.interventions().entries.size()},
       {"finished", finished},
       {"events", events.str()}});
    changed.notify_all();
  };

  session::ServerConfig server_config;
  server_config.host = inv.settings.text("host");
  server_config.port = static_cast<std::uint16_t>(inv.settings.integer("port"));
  session::SessionServer server(server_config, resolver, observer);
  server.start();
  inv.out << "listening " << server_config.host << ':' << server.port() << std::endl;

  std::unique_lock lock(mutex);
  while (epoch <= config.epochs) {
    stats = {};
    stats.epoch = epoch;
    epoch_labels = 0;
    changed.wait(lock, [&] {
      return epoch_labels >= static_cast<std::size_t>(config.labels_per_epoch);
    });
    refitting = true;
    stats.labels = epoch_labels;
    stats.dataset_size = dataset.size();
    spdlog::info("epoch {}: {} labels from {} sessions, refitting", epoch, epoch_labels, stats.rollouts);
    const Dataset snapshot = dataset;
    lock.unlock();
    nn::TrainConfig train = config.train;
    train.rng_seed = training::fit_seed(config, epoch);
    auto refit = nn::fit(snapshot, train);
    lock.lock();
    policies.push_back(refit);
    current = std::make_shared<nn::Ensemble>(std::move(refit));
    all_stats.push_back(stats);
    ++epoch;
    refitting = false;
  }
  lock.unlock();
  server.stop();
  run.manifest()["sessions"] = sessions;
  finish_hg(run, bc, policies, dataset, interventions, all_stats);
}

void cmd_train_hg(Run & run, const Invocation & inv)
{
  const auto config = loop_config(inv.settings);
  record_seeds(run, config);
  run.manifest()["expert"] = inv.expert;
  if (inv.expert == "human") {
    train_hg_human(run, inv, config);
    return;
  }
  const auto bc = bc_stage(run, inv, config);
  experts::SyntheticExpert expert;
  const training::ScenarioSource source{config.rng_seed, config.road_length};
  const auto result = training::run_hg_dagger(expert, bc.ensemble, bc.dataset, source, config);
  finish_hg(run, bc, result.policies, result.dataset, result.interventions, result.epochs);
}

std::vector<sim::Scenario> eval_scenarios(const Settings & s)
{
  return eval::evaluation_scenarios(
    s.seed("eval_seed"), s.count("eval_scenarios"), s.real("eval_road_length"));
}

void cmd_eval(Run & run, const Invocation & inv)
{
  const auto policy = load_policy(inv);
  const auto scenarios = eval_scenarios(inv.settings);
  const auto metrics =
    eval::rollout_metrics(eval::novice_controller(policy), scenarios, eval_config(inv.settings));
  std::vector<json> records;
  for (const auto & record : metrics.rollouts) {
    records.push_back(rollout_json(record));
  }
  json summary = metrics_json(metrics);
  summary["type"] = "summary";
  records.push_back(summary);
  run.write_jsonl("metrics.jsonl", records);
  inv.out << "collision_rate " << format_real(metrics.collision_rate) << " departure_rate "
          << format_real(metrics.departure_rate) << " meters " << format_real(metrics.meters_driven)
          << '\n';
}

void cmd_compare(Run & run, const Invocation & inv)
{
  const auto policy = load_policy(inv);
  const auto scenarios = eval_scenarios(inv.settings);
  const auto config = eval_config(inv.settings);
  const auto novice = eval::rollout_metrics(eval::novice_controller(policy), scenarios, config);
  const auto expert = eval::rollout_metrics(eval::expert_controller(), scenarios, config);
  const double distance = eval::bhattacharyya(novice.steering_histogram, expert.steering_histogram);
  json record = {{"type", "comparison"},
                 {"bhattacharyya", distance},
                 {"policy", metrics_json(novice)},
                 {"expert", metrics_json(expert)}};
  run.write_jsonl("compare.jsonl", {record});
  run.manifest()["bhattacharyya"] = distance;
  inv.out << "bhattacharyya " << format_real(distance) << '\n';
}

void cmd_permitted_set(Run & run, const Invocation & inv)
{
  const auto policy = load_policy(inv);
  const double tau = resolve_tau(inv);
  const Settings & s = inv.settings;
  eval::PermittedSetConfig config;
  config.rollout_time = s.real("rollout_time");
  config.dt = s.real("dt");
  config.max_draws = s.integer("max_draws");
  config.seed = s.seed("region_seed");
  config.road_length = s.real("road_length");
  config.scenario_pool = s.count("scenario_pool");
  const auto result = eval::permitted_set_experiment(policy, tau, s.count("n_inits"), config);
  std::vector<json> records;
  auto add_group = [&](const char * group, const std::vector<eval::Initialization> & inits,
                       const eval::RolloutMetrics & metrics) {
    for (std::size_t i = 0; i < inits.size(); ++i) {
      json r = rollout_json(metrics.rollouts[i]);
      r["group"] = group;
      r["doubt"] = inits[i].doubt;
      records.push_back(std::move(r));
    }
  };
  add_group("inside", result.inside_inits, result.inside);
  add_group("outside", result.outside_inits, result.outside);
  json inside = metrics_json(result.inside);
  inside["type"] = "summary";
  inside["group"] = "inside";
  json outside = metrics_json(result.outside);
  outside["type"] = "summary";
  outside["group"] = "outside";
  records.push_back(inside);
  records.push_back(outside);
  run.write_jsonl("permitted_set.jsonl", records);
  run.manifest()["tau"] = tau;
  run.manifest()["draws"] = result.draws;
  inv.out << "inside collision_rate " << format_real(result.inside.collision_rate)
          << " departure_rate " << format_real(result.inside.departure_rate) << '\n'
          << "outside collision_rate " << format_real(result.outside.collision_rate)
          << " departure_rate " << format_real(result.outside.departure_rate) << '\n';
}

void cmd_risk_map(Run & run, const Invocation & inv)
{
  const auto policy = load_policy(inv);
  const double tau = resolve_tau(inv);
  const auto scenario =
    sim::generate_scenario(inv.settings.seed("scenario_seed"), inv.settings.real("map_road_length"));
  const auto map = eval::build_risk_map(policy, scenario, tau, risk_map_config(inv.settings));
  std::ostringstream ppm;
  eval::write_ppm(ppm, map, scenario);
  run.write("risk_map.ppm", ppm.str());
  const auto counts = eval::confusion(map, scenario, tau);
  json record = report_json(eval::classification_report(counts, tau));
  record["type"] = "risk_map";
  record["scenario_seed"] = scenario.rng_seed;
  record["cols"] = map.cols;
  record["rows"] = map.rows;
  record["cell_size"] = map.cell_size;
  record["samples"] = map.samples.size();
  record["confusion"] = {{"occupied_hit", counts.occupied_hit},
                         {"occupied_miss", counts.occupied_miss},
                         {"free_hit", counts.free_hit},
                         {"free_miss", counts.free_miss}};
  run.write_jsonl("risk_map.jsonl", {record});
  run.manifest()["tau"] = tau;
}

void cmd_sweep(Run & run, const Invocation & inv)
{
  const auto policy = load_policy(inv);
  const double tau = resolve_tau(inv);
  const Settings & s = inv.settings;
  const auto scenarios = eval::evaluation_scenarios(
    s.seed("sweep_seed"), s.count("sweep_scenarios"), s.real("sweep_road_length"));
  const auto config = risk_map_config(s);
  std::vector<eval::RiskMap> maps;
  std::vector<double> pooled;
  for (const auto & scenario : scenarios) {
    maps.push_back(eval::build_risk_map(policy, scenario, tau, config));
    pooled.insert(pooled.end(), maps.back().values.begin(), maps.back().values.end());
  }
  const auto thresholds = eval::quantile_thresholds(pooled, s.count("sweep_thresholds"));
  const auto reports = eval::sweep_maps(maps, scenarios, thresholds);
  const std::vector<double> learned{tau};
  const auto at_tau = eval::sweep_maps(maps, scenarios, learned).front();
  int better = 0;
  std::vector<json> records;
  for (const auto & r : reports) {
    json record = report_json(r);
    record["type"] = "sweep";
    records.push_back(std::move(record));
    if (r.balanced_accuracy > at_tau.balanced_accuracy) {
      ++better;
    }
  }
  json learned_record = report_json(at_tau);
  learned_record["type"] = "learned";
  learned_record["swept_values_above"] = better;
  records.push_back(learned_record);
  run.write_jsonl("sweep.jsonl", records);
  run.manifest()["tau"] = tau;
  inv.out << "tau " << format_real(tau) << " balanced_accuracy "
          << format_real(at_tau.balanced_accuracy) << " swept values above " << better << " of "
          << reports.size() << '\n';
}

struct CommandSpec
{
  const char * name;
  const char * help;
  void (*body)(Run &, const Invocation &);
};

const CommandSpec kCommands[] = {
  {"train-bc", "Behavioral cloning from synthetic expert labels", cmd_train_bc},
  {"train-dagger", "DAgger with a decaying mixing coefficient", cmd_train_dagger},
  {"train-hg", "HG-DAgger with synthetic or human gating", cmd_train_hg},
  {"eval", "Per-meter safety metrics of a policy over evaluation scenarios", cmd_eval},
  {"permitted-set", "Rollouts from starts inside and outside the estimated permitted set",
   cmd_permitted_set},
  {"risk-map", "Doubt risk map for one scenario", cmd_risk_map},
  {"sweep-thresholds", "Pixelwise free/occupied classification across doubt thresholds",
   cmd_sweep},
  {"compare", "Bhattacharyya distance between policy and expert steering", cmd_compare},
};

}  // namespace

fs::path artifact_root()
{
  const char * value = std::getenv(kArtifactRootVariable);
  return value != nullptr && *value != '\0' ? fs::path(value) : fs::path("artifacts");
}

std::string git_blob_sha1(std::string_view content)
{
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX * ctx = EVP_MD_CTX_new();
  if (
    ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
    EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
    EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 ||
    EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char * hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::map<std::string, std::string> read_config(std::istream & in)
{
  std::map<std::string, std::string> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw FormatError("config line " + std::to_string(number) + ": empty key");
    }
    if (!values.emplace(key, value).second) {
      throw FormatError("config line " + std::to_string(number) + ": repeated key '" + key + "'");
    }
  }
  return values;
}

int run_command(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Interactive imitation learning lab: BC, DAgger and HG-DAgger", "hgdagger"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  struct Bindings
  {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option *> options;
    std::string config;
    bool paper_scale{false};
    std::string out_dir;
    std::string checkpoint;
    double tau{0.0};
    CLI::Option * tau_option{nullptr};
    CLI::Option * checkpoint_option{nullptr};
    std::string expert{"synthetic"};
    std::string bc_dataset;
    CLI::Option * bc_dataset_option{nullptr};
  };
  std::map<std::string, Bindings> bindings;
  std::map<std::string, CLI::App *> subcommands;
  for (const auto & spec : kCommands) {
    CLI::App * sub = app.add_subcommand(spec.name, spec.help);
    subcommands[spec.name] = sub;
    Bindings & b = bindings[spec.name];
    sub->add_option("--config", b.config, "Flat key = value configuration file");
    sub->add_flag("--paper-scale", b.paper_scale, "Use the larger label budgets");
    sub->add_option("--out", b.out_dir, "Run directory name under the artifact root");
    b.checkpoint_option = sub->add_option("--checkpoint", b.checkpoint, "Policy checkpoint");
    b.tau_option = sub->add_option("--tau", b.tau, "Doubt threshold");
    if (std::string(spec.name) == "train-hg") {
      sub->add_option("--expert", b.expert, "Gating expert")
        ->check(CLI::IsMember({"synthetic", "human"}));
    }
    if (std::string(spec.name).rfind("train-", 0) == 0) {
      b.bc_dataset_option =
        sub->add_option("--bc_dataset", b.bc_dataset, "Initial dataset instead of BC collection");
    }
    for (const auto & [key, value] : default_settings()) {
      b.values[key] = value;
      b.options[key] = sub->add_option("--" + key, b.values[key])->default_str(value);
    }
  }

  std::vector<const char *> argv{"hgdagger"};
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError & e) {
    return app.exit(e, out, err);
  }

  const CommandSpec * spec = nullptr;
  for (const auto & candidate : kCommands) {
    if (subcommands[candidate.name]->parsed()) {
      spec = &candidate;
    }
  }
  Bindings & b = bindings[spec->name];

  // Precedence: flag, then config file, then --paper-scale, then default.
  std::map<std::string, std::string> resolved = default_settings();
  try {
    if (b.paper_scale) {
      for (const auto & [key, value] : kPaperScale) {
        resolved[key] = value;
      }
    }
    if (!b.config.empty()) {
      std::ifstream in(b.config);
      if (!in) {
        throw FormatError("cannot read config file '" + b.config + "'");
      }
      for (const auto & [key, value] : read_config(in)) {
        if (!default_settings().contains(key)) {
          throw FormatError("unknown config key '" + key + "'");
        }
        resolved[key] = value;
      }
    }
    for (const auto & [key, option] : b.options) {
      if (option->count() > 0) {
        resolved[key] = b.values[key];
      }
    }
    Settings settings(resolved);
    // Validate everything up front so malformed settings leave no artifacts.
    loop_config(settings);
    dagger_schedule(settings);
    risk_map_config(settings);
    for (const char * key : {"eval_seed", "region_seed", "scenario_seed", "sweep_seed"}) {
      settings.seed(key);
    }
    for (const char * key : {"eval_road_length", "eval_max_time", "rollout_time", "map_road_length",
                             "sweep_road_length", "synth_speed"}) {
      settings.real(key);
    }
    for (const char * key : {"eval_scenarios", "n_inits", "scenario_pool", "sweep_scenarios",
                             "sweep_thresholds", "max_draws", "port"}) {
      if (settings.integer(key) <= 0 && std::string(key) != "port") {
        throw FormatError(std::string("setting '") + key + "' must be positive");
      }
    }
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n\n" << subcommands[spec->name]->help();
    return 2;
  }

  Settings settings(resolved);
  Invocation inv{spec->name, settings, args, std::nullopt, std::nullopt, b.expert,
                 std::nullopt, out};
  if (b.checkpoint_option->count() > 0) {
    inv.checkpoint = b.checkpoint;
  }
  if (b.tau_option->count() > 0) {
    inv.tau = b.tau;
  }
  if (b.bc_dataset_option != nullptr && b.bc_dataset_option->count() > 0) {
    inv.bc_dataset = b.bc_dataset;
  }
  const std::string dir_name =
    b.out_dir.empty() ? std::string(spec->name) + "-seed" + settings.text("seed") : b.out_dir;

  std::optional<Run> run;
  try {
    run.emplace(artifact_root() / dir_name, spec->name, args, settings);
    spec->body(*run, inv);
    run->finish("ok");
    out << "run " << run->dir().string() << '\n';
    return 0;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    if (run) {
      run->fail(e.what());
    }
    return 1;
  }
}

}  // namespace hgdagger::cli
