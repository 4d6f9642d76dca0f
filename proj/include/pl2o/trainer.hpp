#pragma once

#include <functional>
#include <vector>

#include "pl2o/mlp.hpp"
#include "pl2o/problem.hpp"
#include "pl2o/projection.hpp"

namespace pl2o {

/// Feasibility tolerance for externally reported results (the solver itself
/// works at ProjectorConfig::feas_tol).
inline constexpr double kExternalFeasTol = 1e-6;

enum class InfeasibleGradMode {
  kTScaled,       // upstream = t .* grad f(t .* x), t = y ./ (x + eps) held constant
  kAtProjection,  // upstream = grad f(y), scaling factor omitted
};

struct TrainConfig {
  double learn_rate = 0.01;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  double clip_beta = 1.0;
  double eps = 1e-6;  // perturbation added to x before the Hadamard division
  std::uint64_t seed = 0;
  ProblemSpec problem;
  ProjectorConfig projector;
  InfeasibleGradMode infeasible_grad = InfeasibleGradMode::kTScaled;
  std::vector<std::size_t> hidden = {512, 512, 512};
  int threads = 0;  // 0 = hardware concurrency; values identical either way
};

struct TrainMetrics {
  std::size_t iteration = 0;
  double mean_objective = 0.0;  // post-projection objective
  double raw_feasibility_rate = 0.0;
  double mean_projection_distance = 0.0;
  double grad_norm_pre_clip = 0.0;
  double grad_norm_post_clip = 0.0;
  std::size_t skipped = 0;  // instances dropped after projection failure
};

/// Input features of H(phi;theta): every h vector, every g vector (interleaved
/// real pairs, sender-major), then sigma^2, then the gamma values.
std::vector<double> assemble_features(const ChannelSet& ch);
std::size_t feature_dim(std::size_t n_antennas, std::size_t n_users);
std::size_t beamformer_dim(std::size_t n_antennas, std::size_t n_users);

/// Scaling-factor upstream for an infeasible output: t = y ./ (x + eps) with
/// |x_m + eps| < 1e-12 capped to +-1e12, then t .* grad(t .* x).
std::vector<double> infeasible_upstream(
    const std::vector<double>& x, const std::vector<double>& y, double eps,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn);

/// One batch update of Algorithm-2 style training. Instances whose projection
/// fails are skipped and counted in the returned metrics.
TrainMetrics train_step(MlpParams& params, AdamState& state,
                        const std::vector<const ChannelSet*>& batch,
                        const TrainConfig& cfg, std::size_t iteration = 0);

using MetricsSink = std::function<void(const TrainMetrics&)>;

struct TrainResult {
  MlpParams params;
  AdamState state;
  std::vector<TrainMetrics> history;
};

/// Full training loop: shuffled batches for the configured number of epochs.
/// Deterministic given cfg.seed.
TrainResult train(const std::vector<ChannelSet>& dataset, const TrainConfig& cfg,
                  const MetricsSink& sink = nullptr);

struct InferResult {
  Beamformer w;
  bool projected = false;
  double distance = 0.0;
  int iterations = 0;
};

/// Algorithm-1 inference: raw prediction if feasible (margins >= -1e-6),
/// otherwise its projection. The returned beamformer is always feasible.
InferResult infer(const MlpParams& params, const ChannelSet& ch,
                  const ProjectorConfig& projector);

}  // namespace pl2o
