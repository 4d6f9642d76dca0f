#include "pl2o/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pl2o/parallel.hpp"

namespace pl2o {

namespace {

// grad of f(x) + lambda * sum_i max(0, -margin_i)^2 at the raw output x.
std::vector<double> penalty_upstream(const std::vector<double>& x, const ChannelSet& ch,
                                     const ProblemSpec& spec, double lambda) {
  std::vector<double> upstream = grad_objective_flat(x, ch, spec);
  const Beamformer wx = Beamformer::unflatten(x, ch.n_users, ch.n_antennas);
  const std::vector<double> margins = soc_residuals(wx, ch);
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins[i] >= 0.0) continue;
    const std::vector<double> gm = grad_soc_margin(wx, ch, i);
    const double coeff = 2.0 * lambda * margins[i];  // d/dx max(0,-m)^2 = -2 max(0,-m) dm
    for (std::size_t m = 0; m < upstream.size(); ++m) upstream[m] += coeff * gm[m];
  }
  return upstream;
}

struct PenaltyWork {
  ForwardTape tape;
  std::vector<double> upstream;
  double objective = 0.0;
  bool raw_feasible = false;
};

}  // namespace

TrainResult penalty_train(const std::vector<ChannelSet>& dataset,
                          const PenaltyConfig& cfg, const MetricsSink& sink) {
  if (dataset.empty()) throw std::invalid_argument("penalty_train: empty dataset");
  if (cfg.penalty_weight < 0.0)
    throw std::invalid_argument("penalty_train: penalty_weight must be >= 0");
  const TrainConfig& base = cfg.base;
  const std::size_t K = dataset.front().n_antennas;
  const std::size_t N = dataset.front().n_users;

  Rng rng(base.seed);
  TrainResult result;
  result.params =
      MlpParams::init(feature_dim(K, N), base.hidden, beamformer_dim(K, N), rng);
  result.state = AdamState::zeros_like(result.params);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t iteration = 0;
  std::vector<PenaltyWork> work;
  for (std::size_t epoch = 0; epoch < base.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += base.batch_size) {
      const std::size_t end = std::min(begin + base.batch_size, order.size());
      const std::size_t count = end - begin;
      work.assign(count, PenaltyWork{});
      parallel_for(count, base.threads, [&](std::size_t b) {
        const ChannelSet& ch = dataset[order[begin + b]];
        PenaltyWork& out = work[b];
        const std::vector<double> phi = assemble_features(ch);
        const std::vector<double> x = forward(result.params, phi, &out.tape);
        const Beamformer wx = Beamformer::unflatten(x, ch.n_users, ch.n_antennas);
        out.raw_feasible = is_feasible(wx, ch, kExternalFeasTol);
        out.objective = objective_flat(x, ch, base.problem);
        out.upstream = penalty_upstream(x, ch, base.problem, cfg.penalty_weight);
      });

      MlpGrads grads = MlpGrads::zeros_like(result.params);
      TrainMetrics metrics;
      metrics.iteration = ++iteration;
      for (std::size_t b = 0; b < count; ++b) {
        accumulate_backward(result.params, work[b].tape, work[b].upstream, grads);
        metrics.mean_objective += work[b].objective;
        metrics.raw_feasibility_rate += work[b].raw_feasible ? 1.0 : 0.0;
      }
      grads.scale(1.0 / static_cast<double>(count));
      metrics.mean_objective /= static_cast<double>(count);
      metrics.raw_feasibility_rate /= static_cast<double>(count);
      metrics.grad_norm_pre_clip = grads.l2_norm();
      clip(grads, base.clip_beta);
      metrics.grad_norm_post_clip = grads.l2_norm();
      adam_step(result.params, result.state, grads, base.learn_rate);
      if (sink) sink(metrics);
      result.history.push_back(metrics);
    }
  }
  return result;
}

Beamformer sca_solve(const ChannelSet& ch, const ProblemSpec& spec,
                     const Beamformer& init, const IterSolverConfig& cfg) {
  if (!is_feasible(init, ch, kExternalFeasTol))
    throw InfeasibleRegionError("sca_solve: init is not feasible");

  Beamformer current = init;
  double f_current = objective(current, ch, spec);
  double rho = 1.0;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const std::vector<double> g = grad_objective(current, ch, spec);
    std::vector<double> shifted = current.flatten();
    for (std::size_t m = 0; m < shifted.size(); ++m) shifted[m] -= g[m] / (2.0 * rho);
    const Beamformer target =
        Beamformer::unflatten(shifted, ch.n_users, ch.n_antennas);
    const Beamformer cand = project(target, ch, cfg.projector).y;
    const double f_cand = objective(cand, ch, spec);

    const double decrease = f_current - f_cand;
    if (decrease < 0.0) {
      rho *= 2.0;  // surrogate too aggressive for the local curvature
      if (rho > 1e8) break;
      continue;
    }
    current = cand;
    f_current = f_cand;
    if (decrease < cfg.inner_tol) break;
    rho = std::max(1.0, rho * 0.5);
  }
  return current;
}

Beamformer trust_region_solve(const ChannelSet& ch, const ProblemSpec& spec,
                              const Beamformer& init, const IterSolverConfig& cfg) {
  if (!is_feasible(init, ch, kExternalFeasTol))
    throw InfeasibleRegionError("trust_region_solve: init is not feasible");

  Beamformer current = init;
  double f_current = objective(current, ch, spec);
  double radius = cfg.trust_radius;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const std::vector<double> g = grad_objective(current, ch, spec);
    double gnorm2 = 0.0;
    for (double v : g) gnorm2 += v * v;
    const double gnorm = std::sqrt(gnorm2);
    if (gnorm == 0.0) break;  // stationary start

    const double step = radius / gnorm;
    std::vector<double> shifted = current.flatten();
    for (std::size_t m = 0; m < shifted.size(); ++m) shifted[m] -= step * g[m];
    const Beamformer cand =
        project(Beamformer::unflatten(shifted, ch.n_users, ch.n_antennas), ch,
                cfg.projector)
            .y;
    const double f_cand = objective(cand, ch, spec);
    if (f_cand < f_current) {
      current = cand;
      f_current = f_cand;
      radius *= cfg.grow;
    } else {
      radius *= cfg.shrink;
    }
    if (radius < 1e-8) break;
  }
  return current;
}

}  // namespace pl2o
