#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pl2o/harness.hpp"

namespace pl2o {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run needs, parsed from a sectioned key=value file.
/// Unknown sections or keys are errors; numeric fields are validated at load.
struct RunConfig {
  // [data]
  std::size_t data_antennas = 16;  // k
  std::size_t data_users = 8;      // n
  std::size_t data_count = 10000;
  double data_sigma2 = 1.0;
  double data_gamma = 10.0;
  std::uint64_t data_seed = 1;

  // [problem]
  ProblemSpec problem;

  // [train]
  std::string train_mode = "l2o";  // l2o | penalty
  TrainConfig train;

  // [penalty]
  double penalty_weight = 10.0;

  // [projector]
  ProjectorConfig projector;

  // [solver]
  IterSolverConfig solver;

  // [sweep]
  SweepConfig sweep;

  // [run]
  int threads = 0;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// FNV-1a of a byte string; used to stamp checkpoints with their config.
std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace pl2o
