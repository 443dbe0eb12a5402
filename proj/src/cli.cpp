#include "veriaug/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "veriaug/model_io.hpp"
#include "veriaug/verifier.hpp"

namespace veriaug {

namespace {

constexpr std::uint64_t kDiversityStream = 0xD1;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("bad number '" + item + "' in --input");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--input is empty");
  return out;
}

}  // namespace

std::vector<CellOutcome> run_plan(const ExperimentPlan& plan, const Dataset& pool,
                                  const Dataset& test, const ProgressSink& progress) {
  std::vector<CellOutcome> out;
  for (const ExperimentConfig& cfg : plan.cells()) {
    CellOutcome cell;
    cell.config = cfg;
    cell.runs = run_experiment(cfg, pool, test, progress);
    std::vector<DiversityStat> present;
    for (const RunResult& run : cell.runs) {
      if (run.rounds.size() >= 2) {
        const auto curve = run_curve(run.rounds, run.run);
        cell.aubc_per_run.push_back(aubc(curve));
      }
      std::size_t points = 0;
      for (const auto& s : run.final_adv_sets) points += s.size();
      if (points < 2) {
        cell.diversity_per_run.emplace_back();
        continue;
      }
      std::mt19937_64 rng(
          derive_seed(cfg.seed + static_cast<std::uint64_t>(run.run), 0, kDiversityStream));
      cell.diversity_per_run.push_back(
          diversity(run.final_model, run.final_adv_sets, plan.diversity_cap, rng));
      present.push_back(*cell.diversity_per_run.back());
    }
    if (!present.empty()) cell.diversity = aggregate_runs(present);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<SummaryRow> summary_rows(const std::vector<CellOutcome>& cells) {
  std::vector<SummaryRow> rows;
  for (const CellOutcome& c : cells) {
    SummaryRow row;
    row.method = cell_name(c.config);
    row.aubc_mean = mean_of(c.aubc_per_run);
    row.aubc_std = pop_std(c.aubc_per_run);
    std::vector<double> finals;
    for (const RunResult& r : c.runs) finals.push_back(r.rounds.back().accuracy);
    row.final_accuracy = mean_of(finals);
    row.diversity = c.diversity;
    rows.push_back(row);
  }
  return rows;
}

void write_outputs(const std::vector<CellOutcome>& cells, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "models", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "models").string() + ": " + ec.message());
  std::vector<LabeledCurve> curves;
  for (const CellOutcome& c : cells) {
    const std::string name = cell_name(c.config);
    std::vector<RoundRecord> records;
    for (const RunResult& r : c.runs) {
      records.insert(records.end(), r.rounds.begin(), r.rounds.end());
      save_model(r.final_model, out_dir / "models" / (name + "_run" + std::to_string(r.run) + ".bin"));
    }
    write_csv(records, out_dir / (name + ".csv"));
    curves.push_back({name, mean_curve(records)});
  }
  const auto rows = summary_rows(cells);
  write_text(out_dir / "summary.txt", summary_report(rows));
  render_curves_svg(curves, out_dir / "curves.svg");
}

std::filesystem::path data_root(const std::filesystem::path& config_path) {
  if (const char* env = std::getenv("VERIAUG_DATA_ROOT"); env && *env) return env;
  const auto parent = config_path.parent_path();
  return parent.empty() ? std::filesystem::path(".") : parent;
}

namespace {

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> time_limit_secs;
  bool verbose = false;

  std::string model;
  std::optional<std::size_t> index;
  std::string input;
  double eps = 0.01;
  int k = 10;
  std::uint64_t node_limit = 0;
  double eps_max = 0.5;
  double eps_increment = 0.05;

  std::string report_dir;
  std::string svg;

  std::vector<int> bench_hidden{8, 16, 32};
  int bench_inputs = 784;
  int bench_queries = 10;
  double bench_eps = 0.05;
};

void apply_overrides(const Options& o, ExperimentPlan& plan) {
  if (o.seed) plan.base.seed = *o.seed;
  if (o.workers) plan.base.workers = *o.workers;
  if (o.time_limit_secs) plan.base.harvest.time_limit = std::chrono::duration<double>(*o.time_limit_secs);
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan = load_plan(o.config);
  apply_overrides(o, plan);
  for (const auto& c : plan.cells()) c.validate();
  const auto [pool, test] = load_datasets(plan.base.dataset, data_root(o.config));
  if (o.verbose) {
    err << "pool " << pool.size() << " test " << test.size() << " classes " << pool.num_classes
        << " cells " << plan.cells().size() << "\n";
  }
  const auto cells = run_plan(plan, pool, test, [&](const std::string& line) { err << line << "\n"; });
  write_outputs(cells, o.out_dir);
  out << summary_report(summary_rows(cells));
  return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
  std::vector<std::filesystem::path> csvs;
  for (const auto& e : std::filesystem::directory_iterator(o.report_dir)) {
    if (e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty()) throw std::invalid_argument("no CSV files in " + o.report_dir);
  std::vector<SummaryRow> rows;
  std::vector<LabeledCurve> curves;
  for (const auto& path : csvs) {
    const auto records = read_csv(path);
    std::map<int, int> runs;
    for (const auto& r : records) runs[r.run] = 1;
    std::vector<double> aubcs;
    std::vector<double> finals;
    for (const auto& [run, _] : runs) {
      const auto curve = run_curve(records, run);
      if (curve.size() >= 2) aubcs.push_back(aubc(curve));
      finals.push_back(curve.back().accuracy);
    }
    SummaryRow row;
    row.method = path.stem().string();
    row.aubc_mean = mean_of(aubcs);
    row.aubc_std = pop_std(aubcs);
    row.final_accuracy = mean_of(finals);
    rows.push_back(row);
    curves.push_back({row.method, mean_curve(records)});
  }
  out << summary_report(rows);
  if (!o.svg.empty()) render_curves_svg(curves, o.svg);
  return 0;
}

int cmd_verify_one(const Options& o, std::ostream& out) {
  MlpModel model;
  try {
    model = load_model(o.model);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot load model: ") + e.what());
  }
  Vector x;
  if (!o.input.empty()) {
    const auto values = parse_vector(o.input);
    x = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  } else if (o.index && !o.config.empty()) {
    ExperimentPlan plan = load_plan(o.config);
    const auto [pool, test] = load_datasets(plan.base.dataset, data_root(o.config));
    if (*o.index >= pool.size()) {
      throw std::invalid_argument("--index " + std::to_string(*o.index) + " out of range (pool has " +
                                  std::to_string(pool.size()) + " samples)");
    }
    x = pool.samples[*o.index].features;
  } else {
    throw std::invalid_argument("verify-one needs --input, or --config with --index");
  }
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) +
                                " features, model expects " + std::to_string(model.input_dim()));
  }
  HarvestParams hp;
  hp.k = o.k;
  hp.node_limit = o.node_limit;
  hp.eps_max = o.eps_max;
  hp.eps_increment = o.eps_increment;
  if (o.time_limit_secs) hp.time_limit = std::chrono::duration<double>(*o.time_limit_secs);
  hp.validate();

  const HarvestResult h = harvest(model, x, hp, o.eps);
  out << "source class " << h.source_class << ", target class " << h.target_class << "\n";
  for (std::size_t i = 0; i < h.points.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "counterexample %zu: class %d linf %.6g\n", i + 1,
                  predict(model, h.points[i]), (h.points[i] - x).lpNorm<Eigen::Infinity>());
    out << line;
  }
  out << "trace:\n";
  for (const HarvestStep& s : h.trace) out << "  " << format_trace_line(s) << "\n";
  out << "found " << h.points.size() << " counterexample(s)\n";
  return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const std::uint64_t seed = o.seed.value_or(0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> bias(0.0, 0.5);
  for (int hidden : o.bench_hidden) {
    if (hidden <= 0) throw std::invalid_argument("--hidden sizes must be positive");
    MlpModel m = MlpModel::glorot(o.bench_inputs, hidden, 10, derive_seed(seed, hidden, 0));
    for (Eigen::Index j = 0; j < m.b1.size(); ++j) m.b1(j) = bias(rng);
    std::uint64_t nodes = 0;
    double ms = 0.0;
    std::map<VerdictKind, int> verdicts;
    for (int q = 0; q < o.bench_queries; ++q) {
      Vector x(o.bench_inputs);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = unit(rng);
      SolveLimits lim;
      lim.time_limit = std::chrono::duration<double>(o.time_limit_secs.value_or(5.0));
      const Verdict v = solve(m, RobustnessQuery::runner_up(m, x, o.bench_eps), lim);
      nodes += v.nodes_explored;
      ms += v.wall_ms;
      ++verdicts[v.kind];
    }
    char line[256];
    std::snprintf(line, sizeof line,
                  "hidden=%d queries=%d sat=%d unsat=%d timeout=%d nodes=%llu ms=%.1f "
                  "nodes_per_sec=%.1f\n",
                  hidden, o.bench_queries, verdicts[VerdictKind::Sat], verdicts[VerdictKind::Unsat],
                  verdicts[VerdictKind::Timeout], static_cast<unsigned long long>(nodes), ms,
                  ms > 0 ? 1000.0 * static_cast<double>(nodes) / ms : 0.0);
    out << line;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verifier-augmented deep active learning experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Override the experiment seed");
    sub->add_option("--workers", o.workers, "Worker threads (0 = available parallelism)");
    sub->add_option("--time-limit-secs", o.time_limit_secs, "Verifier time limit per harvest");
    sub->add_flag("--verbose", o.verbose, "Extra diagnostics on stderr");
  };

  CLI::App* run = app.add_subcommand("run", "Run every strategy x augmentation cell of a config");
  run->add_option("--config", o.config, "Experiment config (JSON)")->required();
  run->add_option("--out", o.out_dir, "Output directory")->required();
  add_common(run);

  CLI::App* report = app.add_subcommand("report", "Summarize CSVs from an output directory");
  report->add_option("dir", o.report_dir, "Directory holding per-cell CSVs")->required();
  report->add_option("--svg", o.svg, "Also write accuracy curves to this SVG file");

  CLI::App* verify = app.add_subcommand("verify-one", "Harvest counterexamples around one input");
  verify->add_option("--model", o.model, "Serialized model")->required();
  verify->add_option("--input", o.input, "Comma-separated input vector");
  verify->add_option("--config", o.config, "Config whose dataset pool supplies --index");
  verify->add_option("--index", o.index, "Pool sample index");
  verify->add_option("--eps", o.eps, "Starting epsilon");
  verify->add_option("--k", o.k, "Counterexamples to collect");
  verify->add_option("--node-limit", o.node_limit, "Branch-and-bound node budget (0 = none)");
  verify->add_option("--eps-max", o.eps_max, "Largest epsilon tried");
  verify->add_option("--eps-increment", o.eps_increment, "Epsilon step after Unsat");
  add_common(verify);

  CLI::App* bench = app.add_subcommand("bench", "Time verifier node throughput on random nets");
  bench->add_option("--hidden", o.bench_hidden, "Hidden sizes");
  bench->add_option("--inputs", o.bench_inputs, "Input dimension");
  bench->add_option("--queries", o.bench_queries, "Queries per size");
  bench->add_option("--eps", o.bench_eps, "Query epsilon");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(o, out, err);
    if (report->parsed()) return cmd_report(o, out);
    if (verify->parsed()) return cmd_verify_one(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace veriaug
