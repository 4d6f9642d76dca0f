#pragma once

#include <string>
#include <vector>

#include "pl2o/baselines.hpp"
#include "pl2o/trainer.hpp"

namespace pl2o {

struct Dataset {
  std::size_t n_antennas = 0;  // K
  std::size_t n_users = 0;     // N
  double sigma2 = 1.0;
  double gamma = 10.0;
  std::uint64_t seed = 0;
  std::vector<ChannelSet> instances;
};

/// count independent ChannelSets with every h and g drawn CN(0, I).
/// Draw order: instance-major, all h (sender-major) before all g.
Dataset gen_dataset(std::size_t n_antennas, std::size_t n_users, std::size_t count,
                    double sigma2, double gamma, std::uint64_t seed);

/// Binary dataset container (versioned; layout in README). Byte-identical for
/// identical inputs.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

struct SweepRecord {
  std::string algorithm;
  std::string axis;  // "K", "N" or "gamma"
  double axis_value = 0.0;
  double mean_objective = 0.0;
  double objective_variance = 0.0;  // population variance
  double raw_feasibility_rate = 0.0;
  double post_feasibility_rate = 0.0;
  double mean_time_sec = 0.0;
  std::size_t failures = 0;
};

struct SweepConfig {
  std::string axis = "K";
  std::vector<double> values = {4, 8, 16, 32};
  std::vector<std::string> algorithms = {"l2o", "penalty", "sca", "trust"};
  std::size_t base_antennas = 16;  // K when not the sweep axis
  std::size_t base_users = 8;      // N when not the sweep axis
  double sigma2 = 1.0;
  double gamma = 10.0;  // gamma when not the sweep axis
  std::size_t train_count = 4000;
  std::size_t eval_count = 1000;
  std::uint64_t seed = 1;
  bool timing = true;  // off writes 0 for mean_time_sec (bit-reproducible files)
  TrainConfig train;
  double penalty_weight = 10.0;
  IterSolverConfig solver;
  ProblemSpec problem;
  int threads = 0;
};

/// One record per (algorithm, axis value). Networks are retrained per value on
/// the K and N axes; the gamma axis reuses a single network trained at the
/// base settings, since the input dimension does not depend on gamma.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

enum class ExportFormat { kCsv, kJson };

/// CSV: one header row then one row per record, floats with 9 significant
/// digits. JSON: array of objects with the same field names.
void export_records(const std::vector<SweepRecord>& records, const std::string& path,
                    ExportFormat format);
std::vector<SweepRecord> import_records(const std::string& path, ExportFormat format);

}  // namespace pl2o
