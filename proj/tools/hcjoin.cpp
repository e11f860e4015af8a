#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"

#include "hcjoin/engine.hpp"
#include "hcjoin/io.hpp"
#include "hcjoin/job.hpp"
#include "hcjoin/oracle.hpp"

namespace {

using namespace hcj;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct JobFlags {
  std::string job;
  std::optional<std::uint64_t> threads;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  bool no_rewrite = false;
  std::string order;
  std::string shares;
  bool instrument = false;
  bool json = false;
};

void add_job_flags(CLI::App* cmd, JobFlags& flags) {
  cmd->add_option("job", flags.job, "Job file (JSON)")->required();
  cmd->add_option("--threads", flags.threads, "Number of logical tasks P (power of two)");
  cmd->add_option("--workers", flags.workers, "Worker threads");
  cmd->add_option("--seed", flags.seed, "Master hash seed");
  cmd->add_flag("--no-rewrite", flags.no_rewrite, "Disable hoisting of loop-invariant intersections");
  cmd->add_option("--order", flags.order, "Variable order, e.g. X,Y,Z");
  cmd->add_option("--shares", flags.shares, "Shares, e.g. X=32,Y=32,Z=1");
  cmd->add_flag("--instrument", flags.instrument, "Count intersection steps");
  cmd->add_flag("--json", flags.json, "Machine-readable output");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

LoadedJob load_job(const JobFlags& flags) {
  auto spec = parse_job_file(flags.job);
  auto& config = spec.config;
  if (flags.threads) config.threads = *flags.threads;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.no_rewrite) config.rewrite = false;
  if (flags.instrument) config.instrument = true;
  if (!flags.order.empty()) config.order = split(flags.order, ',');
  if (!flags.shares.empty()) {
    config.shares.clear();
    for (const auto& item : split(flags.shares, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--shares expects VAR=SHARE pairs, got '" + item + "'");
      try {
        config.shares[item.substr(0, eq)] = std::stoull(item.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw ConfigError("bad share value in '" + item + "'");
      }
    }
  }
  // Re-validate after overrides through the job parser.
  spec = parse_job_json(emit_job(spec), spec.base_dir);
  for (const auto& name : spec.config.order) spec.query.variable_id(name);
  for (const auto& [name, share] : spec.config.shares) spec.query.variable_id(name);

  LoadedJob job;
  job.spec = spec;
  job.catalog = load_catalog(job.spec);
  return job;
}

std::size_t resolve_workers(const JobFlags& flags, const RunConfig& config) {
  if (flags.workers) {
    if (*flags.workers == 0) throw ConfigError("--workers must be at least 1");
    return *flags.workers;
  }
  if (std::getenv("HC_WORKERS") || config.workers == 0) return default_workers();
  return config.workers;
}

double ms(std::uint64_t nanos) { return static_cast<double>(nanos) / 1e6; }

void print_timings(std::ostream& out, std::uint64_t load_nanos, const PhaseTimings& t) {
  out << std::fixed << std::setprecision(3);
  out << "load_ms: " << ms(load_nanos) << " (excluded)\n";
  out << "optimize_ms: " << ms(t.optimize_nanos) << "\n";
  out << "preprocess_ms: " << ms(t.partition_nanos + t.index_nanos) << " (partition " << ms(t.partition_nanos)
      << ", index " << ms(t.index_nanos) << ")\n";
  out << "join_ms: " << ms(t.join_nanos) << "\n";
  out << "total_ms: " << ms(t.total_nanos()) << "\n";
  out << std::defaultfloat;
}

void write_tuples(std::ostream& out, const ResultSet& result) {
  for (const auto& row : result.sorted_rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

nlohmann::json timings_json(std::uint64_t load_nanos, const PhaseTimings& t) {
  return {{"load_ms", ms(load_nanos)},
          {"optimize_ms", ms(t.optimize_nanos)},
          {"partition_ms", ms(t.partition_nanos)},
          {"index_ms", ms(t.index_nanos)},
          {"join_ms", ms(t.join_nanos)},
          {"total_ms", ms(t.total_nanos())}};
}

int cmd_convert(const std::string& input, const std::string& output, std::size_t arity, bool symmetrize) {
  const auto relation = load_csv(input, arity, symmetrize);
  write_binary(relation, output);
  std::cout << "wrote " << relation.size() << " rows of arity " << relation.arity << " to " << output << "\n";
  return kExitOk;
}

int cmd_explain(const JobFlags& flags) {
  const auto job = load_job(flags);
  const auto stats = collect_stats(job.catalog);
  const auto plan =
      choose_plan(job.spec.query, stats, job.spec.config.threads, overrides_from(job.spec.query, job.spec.config));
  if (flags.json) {
    std::cout << explain_json(job.spec.query, plan).dump(2) << "\n";
    for (const auto& w : plan.search.warnings) std::cerr << "warning: " << w << "\n";
  } else {
    std::cout << explain_text(job.spec.query, plan);
  }
  return kExitOk;
}

int cmd_run(const JobFlags& flags) {
  const auto load_start = std::chrono::steady_clock::now();
  const auto job = load_job(flags);
  const auto load_nanos = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - load_start).count());
  const auto& config = job.spec.config;
  const auto workers = resolve_workers(flags, config);
  const bool tuples = config.output != OutputMode::kCount;
  const auto execution = execute(job.spec.query, job.catalog, config, workers, tuples);
  for (const auto& w : execution.plan.search.warnings) std::cerr << "warning: " << w << "\n";

  if (config.output == OutputMode::kFile) {
    std::filesystem::path path = config.output_file;
    if (path.is_relative()) path = job.spec.base_dir / path;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_tuples(out, execution.result);
  } else if (config.output == OutputMode::kTuples && !flags.json) {
    write_tuples(std::cout, execution.result);
  }

  if (flags.json) {
    nlohmann::json j;
    j["count"] = execution.result.count;
    j["workers"] = workers;
    j["plan"] = explain_json(job.spec.query, execution.plan);
    j["timings"] = timings_json(load_nanos, execution.timings);
    if (config.instrument) j["steps"] = execution.result.total_steps();
    if (config.output == OutputMode::kTuples) j["tuples"] = execution.result.sorted_rows();
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "count: " << execution.result.count << "\n";
  std::cout << "workers: " << workers << "\n";
  if (config.instrument) std::cout << "steps: " << execution.result.total_steps() << "\n";
  print_timings(std::cout, load_nanos, execution.timings);
  return kExitOk;
}

struct BenchFlags {
  std::size_t repeats = 3;
  std::string sweep;
  std::string csv;
};

int cmd_bench(const JobFlags& flags, const BenchFlags& bench) {
  auto job = load_job(flags);
  job.spec.config.instrument = true;
  if (bench.repeats == 0) throw ConfigError("--repeats must be at least 1");
  std::vector<std::size_t> sweep;
  for (const auto& w : split(bench.sweep, ',')) {
    try {
      sweep.push_back(std::stoul(w));
    } catch (const std::logic_error&) {
      throw ConfigError("bad worker count '" + w + "' in --sweep");
    }
    if (sweep.back() == 0) throw ConfigError("--sweep worker counts must be positive");
  }
  if (sweep.empty()) sweep.push_back(resolve_workers(flags, job.spec.config));

  nlohmann::json report;
  report["query"] = job.spec.query.to_string();
  auto& runs = report["runs"] = nlohmann::json::array();
  std::optional<Execution> first;
  for (const auto workers : sweep) {
    std::vector<double> join_ms;
    std::vector<double> total_ms;
    for (std::size_t r = 0; r < bench.repeats; ++r) {
      auto execution = execute(job.spec.query, job.catalog, job.spec.config, workers, false);
      join_ms.push_back(ms(execution.timings.join_nanos));
      total_ms.push_back(ms(execution.timings.total_nanos()));
      if (!first) first = std::move(execution);
    }
    const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    runs.push_back({{"workers", workers}, {"join_ms_mean", mean(join_ms)}, {"total_ms_mean", mean(total_ms)},
                    {"repeats", bench.repeats}});
  }

  // Per-task work distribution from the first run; steps do not depend on scheduling.
  const auto& tasks = first->result.tasks;
  std::vector<std::uint64_t> steps;
  for (const auto& t : tasks) steps.push_back(t.steps);
  std::sort(steps.begin(), steps.end());
  const auto max_steps = steps.back();
  const auto min_steps = steps.front();
  const auto skew = static_cast<double>(max_steps) / static_cast<double>(std::max<std::uint64_t>(min_steps, 1));
  const auto cumulative = std::accumulate(steps.begin(), steps.end(), std::uint64_t{0});
  report["count"] = first->result.count;
  report["shares"] = explain_json(job.spec.query, first->plan)["shares"];
  report["tasks"] = tasks.size();
  report["min_steps"] = min_steps;
  report["max_steps"] = max_steps;
  report["skew_ratio"] = skew;
  report["cumulative_steps"] = cumulative;

  if (!bench.csv.empty()) {
    std::ofstream out(bench.csv);
    if (!out) throw IoError("cannot write '" + bench.csv + "'");
    out << "task_id,steps,emitted,wall_nanos\n";
    for (const auto& t : tasks) out << t.task << "," << t.steps << "," << t.emitted << "," << t.wall_nanos << "\n";
  }

  if (flags.json) {
    report["sorted_steps"] = steps;
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "query: " << report["query"].get<std::string>() << "\n";
  std::cout << "count: " << first->result.count << "\n";
  std::cout << "shares: " << report["shares"].dump() << "\n";
  std::cout << "tasks: " << tasks.size() << "\n";
  std::cout << "steps min/median/max: " << min_steps << " / " << steps[steps.size() / 2] << " / " << max_steps << "\n";
  std::cout << "skew ratio: " << skew << "\n";
  std::cout << "cumulative steps: " << cumulative << "\n";
  std::cout << "workers,join_ms_mean,total_ms_mean\n";
  for (const auto& r : runs) {
    std::cout << r["workers"].get<std::size_t>() << "," << r["join_ms_mean"].get<double>() << ","
              << r["total_ms_mean"].get<double>() << "\n";
  }
  return kExitOk;
}

int cmd_oracle(const JobFlags& flags) {
  const auto job = load_job(flags);
  const auto bindings = evaluate(job.spec.query, job.catalog);
  if (job.spec.config.output == OutputMode::kTuples) {
    for (const auto& row : bindings) {
      for (std::size_t c = 0; c < row.size(); ++c) std::cout << (c ? "," : "") << row[c];
      std::cout << "\n";
    }
  }
  std::cout << "count: " << bindings.size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel worst-case optimal joins over hypercube partitions"};
  app.require_subcommand(1);

  std::string convert_in;
  std::string convert_out;
  std::size_t convert_arity = 2;
  bool convert_symmetrize = false;
  auto* convert = app.add_subcommand("convert", "Convert a CSV relation to the binary format");
  convert->add_option("input", convert_in, "CSV file")->required();
  convert->add_option("output", convert_out, "Binary output file")->required();
  convert->add_option("--arity", convert_arity, "Columns per row")->check(CLI::PositiveNumber);
  convert->add_flag("--symmetrize", convert_symmetrize, "Add the reverse of every edge");

  JobFlags explain_flags;
  add_job_flags(app.add_subcommand("explain", "Print the chosen plan"), explain_flags);
  JobFlags run_flags;
  add_job_flags(app.add_subcommand("run", "Run a join job"), run_flags);
  JobFlags bench_flags;
  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-task work distribution and worker sweep");
  add_job_flags(bench_cmd, bench_flags);
  bench_cmd->add_option("--repeats", bench.repeats, "Runs per worker count");
  bench_cmd->add_option("--sweep", bench.sweep, "Worker counts, e.g. 1,2,4,8");
  bench_cmd->add_option("--csv", bench.csv, "Write per-task stats (task_id,steps,emitted,wall_nanos)");
  JobFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "Brute-force evaluation (debugging)");
  oracle->group("");
  add_job_flags(oracle, oracle_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const auto code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("convert")) return cmd_convert(convert_in, convert_out, convert_arity, convert_symmetrize);
    if (app.got_subcommand("explain")) return cmd_explain(explain_flags);
    if (app.got_subcommand("run")) return cmd_run(run_flags);
    if (app.got_subcommand("bench")) return cmd_bench(bench_flags, bench);
    if (app.got_subcommand("oracle")) return cmd_oracle(oracle_flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
