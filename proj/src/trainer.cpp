#include "pl2o/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "pl2o/parallel.hpp"

namespace pl2o {

std::size_t feature_dim(std::size_t n_antennas, std::size_t n_users) {
  return 4 * n_antennas * n_users * n_users + 1 + n_users;
}

std::size_t beamformer_dim(std::size_t n_antennas, std::size_t n_users) {
  return 2 * n_antennas * n_users;
}

std::vector<double> assemble_features(const ChannelSet& ch) {
  std::vector<double> phi;
  phi.reserve(feature_dim(ch.n_antennas, ch.n_users));
  for (const auto& c : ch.h) phi.insert(phi.end(), c.re_im.begin(), c.re_im.end());
  for (const auto& c : ch.g) phi.insert(phi.end(), c.re_im.begin(), c.re_im.end());
  phi.push_back(ch.sigma2);
  phi.insert(phi.end(), ch.gamma.begin(), ch.gamma.end());
  return phi;
}

std::vector<double> infeasible_upstream(
    const std::vector<double>& x, const std::vector<double>& y, double eps,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn) {
  std::vector<double> t = hadamard_div(y, x, eps);
  for (std::size_t m = 0; m < t.size(); ++m) {
    if (std::abs(x[m] + eps) < 1e-12) t[m] = std::clamp(t[m], -1e12, 1e12);
  }
  std::vector<double> z(x.size());
  for (std::size_t m = 0; m < x.size(); ++m) z[m] = t[m] * x[m];
  std::vector<double> upstream = grad_fn(z);
  for (std::size_t m = 0; m < upstream.size(); ++m) upstream[m] *= t[m];
  return upstream;
}

namespace {

struct InstanceWork {
  ForwardTape tape;
  std::vector<double> upstream;
  double objective = 0.0;
  double distance = 0.0;
  bool raw_feasible = false;
  bool skipped = false;
};

}  // namespace

TrainMetrics train_step(MlpParams& params, AdamState& state,
                        const std::vector<const ChannelSet*>& batch,
                        const TrainConfig& cfg, std::size_t iteration) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

  std::vector<InstanceWork> work(batch.size());
  parallel_for(batch.size(), cfg.threads, [&](std::size_t b) {
    const ChannelSet& ch = *batch[b];
    InstanceWork& out = work[b];
    const std::vector<double> phi = assemble_features(ch);
    const std::vector<double> x = forward(params, phi, &out.tape);
    const Beamformer wx = Beamformer::unflatten(x, ch.n_users, ch.n_antennas);

    if (is_feasible(wx, ch, kExternalFeasTol)) {
      out.raw_feasible = true;
      out.objective = objective_flat(x, ch, cfg.problem);
      out.upstream = grad_objective_flat(x, ch, cfg.problem);
      return;
    }
    ProjectionResult proj;
    try {
      proj = project(wx, ch, cfg.projector);
    } catch (const InfeasibleRegionError&) {
      out.skipped = true;
      return;
    }
    const std::vector<double> y = proj.y.flatten();
    out.distance = proj.distance;
    out.objective = objective_flat(y, ch, cfg.problem);
    if (cfg.infeasible_grad == InfeasibleGradMode::kTScaled) {
      out.upstream = infeasible_upstream(x, y, cfg.eps, [&](const std::vector<double>& z) {
        return grad_objective_flat(z, ch, cfg.problem);
      });
    } else {
      out.upstream = grad_objective_flat(y, ch, cfg.problem);
    }
  });

  // Serial reduction in instance order keeps results independent of the
  // thread count.
  MlpGrads grads = MlpGrads::zeros_like(params);
  TrainMetrics metrics;
  metrics.iteration = iteration;
  std::size_t used = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const InstanceWork& inst = work[b];
    if (inst.skipped) {
      ++metrics.skipped;
      continue;
    }
    accumulate_backward(params, inst.tape, inst.upstream, grads);
    metrics.mean_objective += inst.objective;
    metrics.mean_projection_distance += inst.distance;
    metrics.raw_feasibility_rate += inst.raw_feasible ? 1.0 : 0.0;
    ++used;
  }
  if (used == 0) {
    std::cerr << "train_step: every instance in the batch was skipped\n";
    return metrics;
  }
  grads.scale(1.0 / static_cast<double>(used));
  metrics.mean_objective /= static_cast<double>(used);
  metrics.mean_projection_distance /= static_cast<double>(used);
  metrics.raw_feasibility_rate /= static_cast<double>(used);
  metrics.grad_norm_pre_clip = grads.l2_norm();
  clip(grads, cfg.clip_beta);
  metrics.grad_norm_post_clip = grads.l2_norm();
  adam_step(params, state, grads, cfg.learn_rate);
  return metrics;
}

TrainResult train(const std::vector<ChannelSet>& dataset, const TrainConfig& cfg,
                  const MetricsSink& sink) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const std::size_t K = dataset.front().n_antennas;
  const std::size_t N = dataset.front().n_users;

  Rng rng(cfg.seed);
  TrainResult result;
  result.params = MlpParams::init(feature_dim(K, N), cfg.hidden, beamformer_dim(K, N), rng);
  result.state = AdamState::zeros_like(result.params);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t iteration = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<const ChannelSet*> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&dataset[order[i]]);
      ++iteration;
      TrainMetrics metrics =
          train_step(result.params, result.state, batch, cfg, iteration);
      if (sink) sink(metrics);
      result.history.push_back(metrics);
    }
  }
  return result;
}

InferResult infer(const MlpParams& params, const ChannelSet& ch,
                  const ProjectorConfig& projector) {
  const std::vector<double> phi = assemble_features(ch);
  const std::vector<double> x = forward(params, phi);
  InferResult out;
  out.w = Beamformer::unflatten(x, ch.n_users, ch.n_antennas);
  if (is_feasible(out.w, ch, kExternalFeasTol)) return out;
  const ProjectionResult proj = project(out.w, ch, projector);
  out.w = proj.y;
  out.projected = true;
  out.distance = proj.distance;
  out.iterations = proj.iterations;
  return out;
}

}  // namespace pl2o
