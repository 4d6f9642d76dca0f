#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pl2o/numeric.hpp"

namespace pl2o {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// MLP with rectified hidden layers and a linear output layer.
struct MlpParams {
  std::vector<DenseLayer> layers;

  /// Glorot-uniform weights (+-sqrt(6/(in+out))), zero biases.
  static MlpParams init(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                        std::size_t output_dim, Rng& rng);

  std::size_t input_dim() const { return layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.back().weight.rows(); }
  std::size_t param_count() const;
};

/// Activation record for the backward pass: inputs[l] is the input fed to
/// layer l, pre_acts[l] the pre-activation output of layer l.
struct ForwardTape {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> pre_acts;
};

/// Forward pass; tape (optional) captures activations for backward().
std::vector<double> forward(const MlpParams& params, const std::vector<double>& phi,
                            ForwardTape* tape = nullptr);

struct MlpGrads {
  std::vector<DenseLayer> layers;

  static MlpGrads zeros_like(const MlpParams& params);
  void scale(double factor);
  void add_scaled(const MlpGrads& other, double factor);
  double l2_norm() const;
};

/// Reverse accumulation of d(upstream . output)/d(theta) through the tape.
/// Rectifier subgradient at exactly 0 is taken as 0.
MlpGrads backward(const MlpParams& params, const ForwardTape& tape,
                  const std::vector<double>& upstream);

/// Same, accumulating into an existing gradient (avoids reallocation inside
/// batch loops).
void accumulate_backward(const MlpParams& params, const ForwardTape& tape,
                         const std::vector<double>& upstream, MlpGrads& acc);

/// Elementwise clamp of every gradient entry to [-beta, beta].
void clip(MlpGrads& grads, double beta);

struct AdamState {
  std::vector<DenseLayer> m;  // first moments
  std::vector<DenseLayer> v;  // second moments
  std::int64_t step = 0;

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  static AdamState zeros_like(const MlpParams& params);
};

/// Standard Adam update with bias correction; parameters move against the
/// gradient of the minimized objective.
void adam_step(MlpParams& params, AdamState& state, const MlpGrads& grads,
               double learn_rate);

/// Binary checkpoint container (versioned; layout in README). Round-trips
/// bit-exactly.
void save_checkpoint(const std::string& path, const MlpParams& params,
                     const AdamState& state, std::uint64_t config_hash);

struct Checkpoint {
  MlpParams params;
  AdamState state;
  std::uint64_t config_hash = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace pl2o
