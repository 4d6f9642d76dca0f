#pragma once

#include "pl2o/trainer.hpp"

namespace pl2o {

struct PenaltyConfig {
  double penalty_weight = 10.0;  // lambda
  TrainConfig base;
};

/// Penalty-loss baseline: trains the same MLP on
///   f(x) + lambda * sum_i max(0, -margin_i(x))^2
/// with no projection anywhere in the loop. raw_feasibility_rate in the
/// metrics refers to the raw network outputs.
TrainResult penalty_train(const std::vector<ChannelSet>& dataset,
                          const PenaltyConfig& cfg, const MetricsSink& sink = nullptr);

struct IterSolverConfig {
  int max_outer = 100;
  double inner_tol = 1e-6;
  double trust_radius = 1.0;
  double shrink = 0.5;
  double grow = 2.0;
  ProjectorConfig projector;
};

/// Successive convex approximation with a proximal linearized surrogate:
/// each step minimizes <grad f(W), y - W> + rho ||y - W||^2 over the QoS
/// region (a projection), with rho adapted so the objective decreases.
/// Every iterate is feasible. Requires a feasible init.
Beamformer sca_solve(const ChannelSet& ch, const ProblemSpec& spec,
                     const Beamformer& init, const IterSolverConfig& cfg);

/// Trust-radius projected gradient: candidate = project(W - step * grad f)
/// with ||step * grad f|| = radius; accept on decrease (grow radius),
/// otherwise shrink. Terminates on radius < 1e-8 or max_outer.
Beamformer trust_region_solve(const ChannelSet& ch, const ProblemSpec& spec,
                              const Beamformer& init, const IterSolverConfig& cfg);

}  // namespace pl2o
