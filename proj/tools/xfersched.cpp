/*
 * Copyright 2026 The xfersched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// xfersched command-line driver.
//
// Exit codes: 0 success, 1 domain violation, 2 I/O, parse or usage error.

#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xfersched/xfersched.hpp"

namespace fs = std::filesystem;
using namespace xfersched;

namespace {

struct Options {
  std::string dag_path;
  std::string model_path;
  std::string measurements_path;
  std::string out;
  int workers = 8;
  std::string pattern = "shuffle";
  std::string depth = "fixed:1";
  bool adaptive_depth = false;
  bool no_batching = false;
  bool no_enforce = false;
  bool no_fp_scheduling = false;
  std::uint64_t seed = 1;
  double skew = 0.0;
  double reduce_rate = ReduceModel{}.rate_bytes_per_us;
  double reduce_overhead = ReduceModel{}.overhead_us;

  // gen
  int ops = 120;
  int params = 30;
  std::string preset = "log-uniform";
  double fp_fraction = 0.3;
};

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model_path, "Network model JSON (latency_us, per_byte_us)");
  cmd->add_option("--measurements", o.measurements_path, "Fit the network model from a size,time CSV");
}

void add_collective_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--workers", o.workers, "Number of workers (>= 2)");
  cmd->add_option("--pattern", o.pattern, "ring, hd or shuffle");
  cmd->add_option("--reduce-rate", o.reduce_rate, "Reduce throughput in bytes/us");
  cmd->add_option("--reduce-overhead", o.reduce_overhead, "Fixed cost per reduce stage in us");
}

void add_feature_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--depth", o.depth, "adaptive or fixed:1..8");
  cmd->add_flag("--adaptive-depth", o.adaptive_depth, "Shorthand for --depth adaptive");
  cmd->add_flag("--no-batching", o.no_batching, "Transfer every parameter on its own");
  cmd->add_flag("--no-enforce", o.no_enforce, "Skip order enforcement (worst-case activation order)");
  cmd->add_flag("--no-fp-scheduling", o.no_fp_scheduling, "Keep transfers out of the forward pass");
  cmd->add_option("--seed", o.seed, "Seed for worker skew draws");
  cmd->add_option("--skew", o.skew, "Per-worker compute slowdown drawn from [1, 1+skew]");
}

NetworkModel load_model(const Options& o) {
  if (!o.model_path.empty() && !o.measurements_path.empty())
    throw Error(ErrorCode::InvalidArgument, "--model and --measurements are mutually exclusive");
  if (!o.model_path.empty()) return model_from_json(read_json_file(o.model_path));
  if (!o.measurements_path.empty()) {
    const auto samples = parse_measurements_csv(read_text_file(o.measurements_path), o.measurements_path);
    return fit_network_model(samples).model;
  }
  return SimConfig{}.network;
}

SimConfig make_config(const Options& o) {
  SimConfig c;
  c.workers = o.workers;
  c.pattern = parse_pattern(o.pattern);
  c.depth = o.adaptive_depth ? DepthPolicy::adaptive_policy() : parse_depth_policy(o.depth);
  c.network = load_model(o);
  c.reduce = {o.reduce_rate, o.reduce_overhead};
  if (!(c.reduce.rate_bytes_per_us > 0) || !(c.reduce.overhead_us >= 0))
    throw Error(ErrorCode::InvalidArgument, "reduce rate must be > 0 and overhead >= 0");
  c.enforce_order = !o.no_enforce;
  c.batching = !o.no_batching;
  c.fp_scheduling = !o.no_fp_scheduling;
  if (o.skew < 0) throw Error(ErrorCode::InvalidArgument, "--skew must be >= 0");
  if (o.skew > 0) {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(1.0, 1.0 + o.skew);
    for (int w = 0; w < c.workers; ++w) c.worker_skew.push_back(u(rng));
  }
  validate(CollectiveSpec{c.pattern, c.workers, 1.0, 1});
  return c;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + dir + "': " + ec.message());
}

std::string in_dir(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

// Write to --out when given, otherwise stdout.
void emit(const Options& o, const char* default_name, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  ensure_dir(o.out);
  write_text_file(in_dir(o.out, default_name), text);
}

int cmd_validate(const Options& o) {
  const auto dag = load_dag(o.dag_path);
  const auto report = validate_dag(dag);
  for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
  for (const auto& e : report.errors) std::cout << "error: " << e << '\n';
  if (!report.ok()) return 1;
  std::cout << "ok: " << dag.ops.size() << " ops, " << dag.params.size() << " params\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const auto samples = parse_measurements_csv(read_text_file(o.measurements_path), o.measurements_path);
  const auto fit = fit_network_model(samples);
  if (fit.slope_clamped) std::cerr << "warning: fitted per-byte cost was not positive; clamped\n";
  if (fit.intercept_clamped) std::cerr << "warning: fitted latency was negative; clamped to 0\n";
  emit(o, "model.json", model_to_json(fit.model).dump(2) + "\n");
  return 0;
}

int cmd_optimize(const Options& o) {
  const auto dag = load_dag(o.dag_path);
  const auto config = make_config(o);
  const auto plan = optimize(dag, config);
  if (o.out.empty()) {
    json j = {{"order", order_to_json(plan.order)},
              {"added_edges", edges_to_json(plan.added_edges)},
              {"batch_plan", batch_plan_to_json(plan.batches)},
              {"transfer_schedule", transfer_schedule_to_json(plan.transfers)}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  ensure_dir(o.out);
  write_text_file(in_dir(o.out, "order.json"), order_to_json(plan.order).dump(2) + "\n");
  write_text_file(in_dir(o.out, "enforced_dag.json"), dag_to_json(plan.dag).dump(2) + "\n");
  write_text_file(in_dir(o.out, "added_edges.json"), edges_to_json(plan.added_edges).dump(2) + "\n");
  write_text_file(in_dir(o.out, "batch_plan.json"), batch_plan_to_json(plan.batches).dump(2) + "\n");
  write_text_file(in_dir(o.out, "transfer_schedule.json"), transfer_schedule_to_json(plan.transfers).dump(2) + "\n");
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto dag = load_dag(o.dag_path);
  const auto config = make_config(o);
  const auto result = simulate(optimize(dag, config), config);
  const std::string metrics = metrics_to_json(result.metrics).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << metrics;
    return 0;
  }
  ensure_dir(o.out);
  write_text_file(in_dir(o.out, "metrics.json"), metrics);
  write_text_file(in_dir(o.out, "events.ndjson"), events_to_ndjson(result.events));
  return 0;
}

int cmd_compare(const Options& o) {
  const auto dag = load_dag(o.dag_path);
  const auto config = make_config(o);
  emit(o, "compare.csv", scenario_csv(compare_scenarios(dag, config, default_scenarios())));
  return 0;
}

std::vector<std::int64_t> sweep_sizes() {
  std::vector<std::int64_t> sizes;
  for (int i = 0; i <= 14; ++i) sizes.push_back(std::int64_t{4096} << i);
  sizes.push_back(10'000'000);
  sizes.push_back(100'000'000);
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

int cmd_sweep_depth(const Options& o) {
  const auto config = make_config(o);
  const auto threshold = batching_threshold(config.network);
  std::ostringstream csv;
  csv.precision(12);
  csv << "size_bytes,depth1,depth2,depth4,depth8,adaptive\n";
  for (const auto size : sweep_sizes()) {
    csv << size;
    for (int k : {1, 2, 4, 8})
      csv << ',' << collective_time({config.pattern, config.workers, static_cast<double>(size), k}, config.network,
                                    config.reduce);
    const int k = adaptive_depth(size, threshold);
    csv << ',' << collective_time({config.pattern, config.workers, static_cast<double>(size), k}, config.network,
                                  config.reduce)
        << '\n';
  }
  emit(o, "sweep_depth.csv", csv.str());
  return 0;
}

int cmd_gen(const Options& o) {
  GeneratorOptions g;
  g.ops = o.ops;
  g.params = o.params;
  g.preset = parse_size_preset(o.preset);
  g.fp_fraction = o.fp_fraction;
  g.seed = o.seed;
  const auto dag = generate_dag(g);
  emit(o, "dag.json", dag_to_json(dag).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataflow-DAG transfer optimizer and iteration simulator"};
  app.require_subcommand(1);
  Options o;

  auto* validate_cmd = app.add_subcommand("validate", "Check a DAG file");
  validate_cmd->add_option("dag", o.dag_path, "DAG JSON file")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit a linear network model from size,time measurements");
  fit_cmd->add_option("measurements", o.measurements_path, "CSV of size_bytes,time_us")->required();
  fit_cmd->add_option("--out", o.out, "Output directory (writes model.json)");

  auto* optimize_cmd = app.add_subcommand("optimize", "Compute order, control edges, batches and transfer placement");
  optimize_cmd->add_option("dag", o.dag_path, "DAG JSON file")->required();
  optimize_cmd->add_option("--out", o.out, "Output directory for JSON artifacts");

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one training iteration");
  simulate_cmd->add_option("dag", o.dag_path, "DAG JSON file")->required();
  simulate_cmd->add_option("--out", o.out, "Output directory (metrics.json, events.ndjson)");

  auto* compare_cmd = app.add_subcommand("compare", "Baseline plus cumulative feature scenarios as CSV");
  compare_cmd->add_option("dag", o.dag_path, "DAG JSON file")->required();
  compare_cmd->add_option("--out", o.out, "Output directory (compare.csv)");

  auto* sweep_cmd = app.add_subcommand("sweep-depth", "Collective time per size for depths 1, 2, 4, 8 and adaptive");
  sweep_cmd->add_option("--out", o.out, "Output directory (sweep_depth.csv)");

  for (auto* cmd : {optimize_cmd, simulate_cmd, compare_cmd, sweep_cmd}) {
    add_model_flags(cmd, o);
    add_collective_flags(cmd, o);
  }
  for (auto* cmd : {optimize_cmd, simulate_cmd, compare_cmd}) add_feature_flags(cmd, o);

  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic training DAG");
  gen_cmd->add_option("--ops", o.ops, "Approximate total op count");
  gen_cmd->add_option("--params", o.params, "Parameter count");
  gen_cmd->add_option("--preset", o.preset, "log-uniform or small-heavy");
  gen_cmd->add_option("--fp-fraction", o.fp_fraction, "Forward-pass share of layer compute");
  gen_cmd->add_option("--seed", o.seed, "Generator seed");
  gen_cmd->add_option("--out", o.out, "Output directory (dag.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*fit_cmd) return cmd_fit(o);
    if (*optimize_cmd) return cmd_optimize(o);
    if (*simulate_cmd) return cmd_simulate(o);
    if (*compare_cmd) return cmd_compare(o);
    if (*sweep_cmd) return cmd_sweep_depth(o);
    if (*gen_cmd) return cmd_gen(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_input_error() ? 2 : 1;
  }
  return 2;
}
