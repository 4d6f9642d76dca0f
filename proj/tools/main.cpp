#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "pl2o/config.hpp"
#include "pl2o/parallel.hpp"

namespace {

using namespace pl2o;

// Exit codes are a stable scripting contract:
//   0 success, 2 config error, 3 I/O error, 4 training failure, 5 shape mismatch.
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitTrain = 4;
constexpr int kExitShape = 5;

struct ShapeError : std::exception {
  std::string message;
  explicit ShapeError(std::string msg) : message(std::move(msg)) {}
  const char* what() const noexcept override { return message.c_str(); }
};

struct TrainError : std::exception {
  std::string message;
  explicit TrainError(std::string msg) : message(std::move(msg)) {}
  const char* what() const noexcept override { return message.c_str(); }
};

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

RunConfig load_config(const GlobalArgs& args) {
  if (args.config_path.empty()) throw ConfigError("config: --config is required");
  RunConfig cfg = parse_config_file(args.config_path);
  if (args.seed) {
    cfg.data_seed = *args.seed;
    cfg.train.seed = *args.seed;
    cfg.sweep.seed = *args.seed;
  }
  if (args.threads) {
    cfg.threads = *args.threads;
    cfg.train.threads = *args.threads;
    cfg.sweep.threads = *args.threads;
    cfg.sweep.train.threads = *args.threads;
  }
  return cfg;
}

bool params_finite(const MlpParams& params) {
  for (const auto& layer : params.layers)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

int cmd_gen(const GlobalArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw ConfigError("gen: --out is required");
  const Dataset ds = gen_dataset(cfg.data_antennas, cfg.data_users, cfg.data_count,
                                 cfg.data_sigma2, cfg.data_gamma, cfg.data_seed);
  save_dataset(ds, args.out);
  std::cout << "wrote " << ds.instances.size() << " instances (K=" << ds.n_antennas
            << ", N=" << ds.n_users << ", seed=" << ds.seed << ") to " << args.out
            << "\n";
  return 0;
}

int cmd_train(const GlobalArgs& args, const std::string& data_path,
              const std::string& metrics_path) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw ConfigError("train: --out is required");
  const Dataset ds = load_dataset(data_path);

  const std::string metrics_file =
      metrics_path.empty() ? args.out + ".metrics.csv" : metrics_path;
  std::ofstream metrics(metrics_file, std::ios::trunc);
  if (!metrics)
    throw std::runtime_error("cannot open '" + metrics_file + "' for writing");
  metrics << "iteration,mean_objective,raw_feasibility_rate,mean_projection_distance,"
             "grad_norm_pre_clip,grad_norm_post_clip,skipped\n";
  bool any_update = false;
  MetricsSink sink = [&](const TrainMetrics& m) {
    metrics << m.iteration << ',' << fmt9(m.mean_objective) << ','
            << fmt9(m.raw_feasibility_rate) << ',' << fmt9(m.mean_projection_distance)
            << ',' << fmt9(m.grad_norm_pre_clip) << ',' << fmt9(m.grad_norm_post_clip)
            << ',' << m.skipped << '\n';
    if (m.skipped < cfg.train.batch_size) any_update = true;
  };

  TrainResult result;
  if (cfg.train_mode == "l2o") {
    result = train(ds.instances, cfg.train, sink);
  } else {
    PenaltyConfig pc;
    pc.penalty_weight = cfg.penalty_weight;
    pc.base = cfg.train;
    result = penalty_train(ds.instances, pc, sink);
  }
  if (!params_finite(result.params))
    throw TrainError("training produced non-finite parameters");
  if (!result.history.empty() && !any_update)
    throw TrainError("training failed: every instance of every batch was skipped");

  save_checkpoint(args.out, result.params, result.state,
                  fnv1a_hash(read_file_bytes(args.config_path)));
  std::cout << "trained " << cfg.train_mode << " for " << result.history.size()
            << " iterations; checkpoint " << args.out << ", metrics " << metrics_file
            << "\n";
  return 0;
}

int cmd_infer(const GlobalArgs& args, const std::string& ckpt_path,
              const std::string& data_path) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw ConfigError("infer: --out is required");
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Dataset ds = load_dataset(data_path);
  if (ck.params.input_dim() != feature_dim(ds.n_antennas, ds.n_users) ||
      ck.params.output_dim() != beamformer_dim(ds.n_antennas, ds.n_users))
    throw ShapeError("checkpoint dimensions do not match the dataset (K=" +
                     std::to_string(ds.n_antennas) + ", N=" +
                     std::to_string(ds.n_users) + ")");

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
  out << "instance,objective,projected";
  for (std::size_t i = 0; i < ds.n_users; ++i) out << ",margin_" << i;
  out << ",wall_time_sec\n";

  struct Row {
    double objective = 0.0;
    bool projected = false;
    std::vector<double> margins;
    double seconds = 0.0;
  };
  std::vector<Row> rows(ds.instances.size());
  parallel_for(ds.instances.size(), cfg.threads, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const InferResult res = infer(ck.params, ds.instances[i], cfg.projector);
    rows[i].objective = objective(res.w, ds.instances[i], cfg.problem);
    rows[i].projected = res.projected;
    rows[i].margins = soc_residuals(res.w, ds.instances[i]);
    rows[i].seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << ',' << fmt9(rows[i].objective) << ',' << (rows[i].projected ? 1 : 0);
    for (double m : rows[i].margins) out << ',' << fmt9(m);
    out << ',' << fmt9(rows[i].seconds) << '\n';
  }
  std::cout << "wrote " << rows.size() << " rows to " << args.out << "\n";
  return 0;
}

int cmd_project(const GlobalArgs& args, const std::string& data_path,
                const std::string& point_path) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw ConfigError("project: --out is required");
  const Dataset ds = load_dataset(data_path);
  if (ds.instances.empty()) throw ShapeError("project: dataset holds no instances");
  const ChannelSet& ch = ds.instances.front();

  std::vector<double> flat;
  {
    std::ifstream in(point_path);
    if (!in) throw std::runtime_error("cannot open '" + point_path + "'");
    double v;
    while (in >> v) flat.push_back(v);
  }
  if (flat.size() != beamformer_dim(ch.n_antennas, ch.n_users))
    throw ShapeError("point file holds " + std::to_string(flat.size()) +
                     " values, expected " +
                     std::to_string(beamformer_dim(ch.n_antennas, ch.n_users)));

  const Beamformer x = Beamformer::unflatten(flat, ch.n_users, ch.n_antennas);
  const ProjectionResult res = project(x, ch, cfg.projector);
  const std::vector<double> margins = soc_residuals(res.y, ch);

  Rng rng(cfg.data_seed);
  const Beamformer anchor = zf_init(ch, 2.0);
  double min_residual = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 100; ++s) {
    const Beamformer z = sample_feasible_point(ch, anchor, rng);
    min_residual = std::min(min_residual, orthogonality_residual(x, res.y, z));
  }

  nlohmann::ordered_json report;
  report["distance"] = res.distance;
  report["iterations"] = res.iterations;
  report["converged"] = res.converged;
  report["min_margin"] = *std::min_element(margins.begin(), margins.end());
  report["orthogonality_min_residual"] = min_residual;
  report["point"] = res.y.flatten();
  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
  out << report.dump(2) << '\n';
  std::cout << "projected: distance " << fmt9(res.distance) << ", iterations "
            << res.iterations << ", report " << args.out << "\n";
  return 0;
}

int cmd_sweep(const GlobalArgs& args, const std::string& format) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw ConfigError("sweep: --out is required");
  ExportFormat fmt = ExportFormat::kCsv;
  if (format == "json") fmt = ExportFormat::kJson;
  else if (format != "csv") throw ConfigError("sweep: --format must be csv or json");
  const std::vector<SweepRecord> records = run_sweep(cfg.sweep);
  export_records(records, args.out, fmt);
  std::cout << "wrote " << records.size() << " records to " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pl2o: projection-based learn-to-optimize for QoS-constrained beamforming"};
  app.require_subcommand(1);

  GlobalArgs args;
  std::uint64_t seed_value = 0;
  int threads_value = 0;
  app.add_option("--config", args.config_path, "configuration file (key = value sections)");
  auto* seed_opt = app.add_option("--seed", seed_value, "override every seed in the config");
  auto* threads_opt = app.add_option("--threads", threads_value,
                                     "worker threads (1 = fully serial; results identical)");
  app.add_option("--out", args.out, "output path");

  auto* gen = app.add_subcommand("gen", "generate a channel dataset file");
  std::string data_path, metrics_path, ckpt_path, point_path, sweep_format = "csv";
  auto* train_cmd = app.add_subcommand("train", "train the predictor (l2o or penalty mode)");
  train_cmd->add_option("--data", data_path, "dataset file")->required();
  train_cmd->add_option("--metrics", metrics_path,
                        "metrics CSV path (default: <out>.metrics.csv)");
  auto* infer_cmd = app.add_subcommand("infer", "run feasibility-guaranteed inference");
  infer_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  infer_cmd->add_option("--data", data_path, "dataset file")->required();
  auto* project_cmd =
      app.add_subcommand("project", "project a beamformer onto the QoS region");
  project_cmd->add_option("--data", data_path, "dataset file (first instance is used)")
      ->required();
  project_cmd->add_option("--point", point_path, "flattened beamformer, whitespace separated")
      ->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment sweep and export records");
  sweep_cmd->add_option("--format", sweep_format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (*seed_opt) args.seed = seed_value;
  if (*threads_opt) args.threads = threads_value;

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (train_cmd->parsed()) return cmd_train(args, data_path, metrics_path);
    if (infer_cmd->parsed()) return cmd_infer(args, ckpt_path, data_path);
    if (project_cmd->parsed()) return cmd_project(args, data_path, point_path);
    if (sweep_cmd->parsed()) return cmd_sweep(args, sweep_format);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrain;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
