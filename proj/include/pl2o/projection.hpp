#pragma once

#include <optional>
#include <stdexcept>

#include "pl2o/problem.hpp"

namespace pl2o {

class UndeterminedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleRegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectorConfig {
  double feas_tol = 1e-8;    // solver-internal feasibility tolerance
  double newton_tol = 1e-10; // target relative duality gap of the barrier phase
  double barrier_mu = 10.0;  // barrier parameter growth per stage
  int max_newton = 50;       // Newton iterations per barrier stage
  int max_stages = 30;
};

struct ProjectionResult {
  Beamformer y;
  double distance = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// True iff every SOC margin is >= -tol.
bool is_feasible(const Beamformer& W, const ChannelSet& ch, double tol);

/// Zero-forcing beamformer: w_i is orthogonal to every cross channel h_{i,j},
/// j != i, scaled so sinr_legit(i) = power_margin * gamma_i with w_i^H h_ii
/// real and positive. Strictly feasible for power_margin > 1.
/// Throws UndeterminedError for K < N, RankDeficientError for degenerate channels.
Beamformer zf_init(const ChannelSet& ch, double power_margin);

/// Nearest feasible point to x in Frobenius norm over the QoS region
/// {W : margin_i(W) >= 0 for all i}.
///
/// The squared-margin form of each constraint,
///   s_i(W) = |w_i^H h_ii|^2 - gamma_i (sum_{j!=i} |w_j^H h_ji|^2 + sigma^2) >= 0,
/// is smooth, so the solver minimizes t*||x-y||^2 - sum_i log s_i(y) by damped
/// Newton steps, multiplying t by barrier_mu per stage, started from zf_init
/// (whose strictly positive direct gain selects the correct branch). A final
/// active-set KKT Newton polish refines the barrier output.
///
/// Throws InfeasibleRegionError if no strictly feasible start can be found.
/// On stage/iteration budget exhaustion the result is returned with
/// converged = false.
ProjectionResult project(const Beamformer& x, const ChannelSet& ch,
                         const ProjectorConfig& cfg);

/// Same, but starting the barrier from a caller-supplied strictly feasible point.
ProjectionResult project(const Beamformer& x, const ChannelSet& ch,
                         const ProjectorConfig& cfg, const Beamformer& start);

/// <flatten(y) - flatten(x), flatten(z) - flatten(y)>; nonnegative for
/// y = project(x) and feasible z near the projection branch (Hilbert
/// variational inequality).
double orthogonality_residual(const Beamformer& x, const Beamformer& y,
                              const Beamformer& z);

/// Random feasible point near the branch of `reference` (itself feasible):
/// perturbs the reference, then bisects the smallest feasible scale of the
/// perturbed direction (SINRs are monotone in a common scale) and backs off
/// to a random larger one. Used for orthogonality spot checks.
Beamformer sample_feasible_point(const ChannelSet& ch, const Beamformer& reference,
                                 Rng& rng);

}  // namespace pl2o
