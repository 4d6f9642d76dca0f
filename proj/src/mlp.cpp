#include "pl2o/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pl2o {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<DenseLayer> zero_layers(const MlpParams& params) {
  std::vector<DenseLayer> out;
  out.reserve(params.layers.size());
  for (const auto& layer : params.layers)
    out.push_back({MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                   VectorXd::Zero(layer.bias.size())});
  return out;
}

void check_shapes(const MlpParams& params, const ForwardTape& tape) {
  if (tape.inputs.size() != params.layers.size() ||
      tape.pre_acts.size() != params.layers.size())
    throw std::invalid_argument("backward: stale tape (layer count mismatch)");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (tape.inputs[l].size() != params.layers[l].weight.cols() ||
        tape.pre_acts[l].size() != params.layers[l].weight.rows())
      throw std::invalid_argument("backward: stale tape (shape mismatch)");
  }
}

}  // namespace

MlpParams MlpParams::init(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                          std::size_t output_dim, Rng& rng) {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  MlpParams params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    DenseLayer layer{MatrixXd(out, in), VectorXd::Zero(out)};
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t r = 0; r < out; ++r)
      for (std::size_t c = 0; c < in; ++c)
        layer.weight(r, c) = (2.0 * rng.next_double() - 1.0) * bound;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> forward(const MlpParams& params, const std::vector<double>& phi,
                            ForwardTape* tape) {
  if (phi.size() != params.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  VectorXd a = Eigen::Map<const VectorXd>(phi.data(), phi.size());
  if (tape) {
    tape->inputs.clear();
    tape->pre_acts.clear();
  }
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (tape) tape->inputs.push_back(a);
    VectorXd z = params.layers[l].weight * a + params.layers[l].bias;
    if (tape) tape->pre_acts.push_back(z);
    a = (l == last) ? z : z.cwiseMax(0.0);
  }
  return std::vector<double>(a.data(), a.data() + a.size());
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
  return MlpGrads{zero_layers(params)};
}

void MlpGrads::scale(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

void MlpGrads::add_scaled(const MlpGrads& other, double factor) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += factor * other.layers[l].weight;
    layers[l].bias += factor * other.layers[l].bias;
  }
}

double MlpGrads::l2_norm() const {
  double acc = 0.0;
  for (const auto& layer : layers)
    acc += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return std::sqrt(acc);
}

void accumulate_backward(const MlpParams& params, const ForwardTape& tape,
                         const std::vector<double>& upstream, MlpGrads& acc) {
  check_shapes(params, tape);
  if (upstream.size() != params.output_dim())
    throw std::invalid_argument("backward: upstream dimension mismatch");

  VectorXd delta = Eigen::Map<const VectorXd>(upstream.data(), upstream.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    // delta is d(loss)/d(pre_act of layer l); the output layer is linear and
    // hidden layers apply the rectifier mask (derivative 0 at exactly 0).
    if (l + 1 < params.layers.size()) {
      const VectorXd& z = tape.pre_acts[l];
      for (Eigen::Index r = 0; r < delta.size(); ++r)
        if (z(r) <= 0.0) delta(r) = 0.0;
    }
    acc.layers[l].weight.noalias() += delta * tape.inputs[l].transpose();
    acc.layers[l].bias += delta;
    if (l > 0) delta = params.layers[l].weight.transpose() * delta;
  }
}

MlpGrads backward(const MlpParams& params, const ForwardTape& tape,
                  const std::vector<double>& upstream) {
  MlpGrads grads = MlpGrads::zeros_like(params);
  accumulate_backward(params, tape, upstream, grads);
  return grads;
}

void clip(MlpGrads& grads, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("clip: beta must be > 0");
  for (auto& layer : grads.layers) {
    layer.weight = layer.weight.cwiseMax(-beta).cwiseMin(beta);
    layer.bias = layer.bias.cwiseMax(-beta).cwiseMin(beta);
  }
}

AdamState AdamState::zeros_like(const MlpParams& params) {
  AdamState state;
  state.m = zero_layers(params);
  state.v = zero_layers(params);
  state.step = 0;
  return state;
}

void adam_step(MlpParams& params, AdamState& state, const MlpGrads& grads,
               double learn_rate) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * g;
    v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * g.cwiseProduct(g);
    p.array() -=
        learn_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + AdamState::kEps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, state.m[l].weight, state.v[l].weight,
           grads.layers[l].weight);
    update(params.layers[l].bias, state.m[l].bias, state.v[l].bias,
           grads.layers[l].bias);
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'L', '2', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void read_bytes(std::ifstream& in, void* data, std::size_t size) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}

void write_matrix(std::ofstream& out, const MatrixXd& m) {
  write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void read_matrix(std::ifstream& in, MatrixXd& m) {
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const MlpParams& params,
                     const AdamState& state, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  write_bytes(out, kMagic, sizeof(kMagic));
  write_bytes(out, &kVersion, sizeof(kVersion));
  write_bytes(out, &config_hash, sizeof(config_hash));
  const std::uint32_t n_layers = static_cast<std::uint32_t>(params.layers.size());
  write_bytes(out, &n_layers, sizeof(n_layers));
  for (const auto& layer : params.layers) {
    const std::uint64_t rows = layer.weight.rows(), cols = layer.weight.cols();
    write_bytes(out, &rows, sizeof(rows));
    write_bytes(out, &cols, sizeof(cols));
  }
  for (const auto& layer : params.layers) {
    write_matrix(out, layer.weight);
    write_bytes(out, layer.bias.data(), sizeof(double) * layer.bias.size());
  }
  const std::int64_t step = state.step;
  write_bytes(out, &step, sizeof(step));
  for (const auto& lm : state.m) {
    write_matrix(out, lm.weight);
    write_bytes(out, lm.bias.data(), sizeof(double) * lm.bias.size());
  }
  for (const auto& lv : state.v) {
    write_matrix(out, lv.weight);
    write_bytes(out, lv.bias.data(), sizeof(double) * lv.bias.size());
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  read_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof(version));
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version");

  Checkpoint ck;
  read_bytes(in, &ck.config_hash, sizeof(ck.config_hash));
  std::uint32_t n_layers = 0;
  read_bytes(in, &n_layers, sizeof(n_layers));
  if (n_layers == 0 || n_layers > 64)
    throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> shapes(n_layers);
  for (auto& [rows, cols] : shapes) {
    read_bytes(in, &rows, sizeof(rows));
    read_bytes(in, &cols, sizeof(cols));
  }
  for (const auto& [rows, cols] : shapes) {
    DenseLayer layer{MatrixXd(rows, cols), VectorXd(rows)};
    read_matrix(in, layer.weight);
    read_bytes(in, layer.bias.data(), sizeof(double) * layer.bias.size());
    ck.params.layers.push_back(std::move(layer));
  }
  std::int64_t step = 0;
  read_bytes(in, &step, sizeof(step));
  ck.state = AdamState::zeros_like(ck.params);
  ck.state.step = step;
  for (auto& lm : ck.state.m) {
    read_matrix(in, lm.weight);
    read_bytes(in, lm.bias.data(), sizeof(double) * lm.bias.size());
  }
  for (auto& lv : ck.state.v) {
    read_matrix(in, lv.weight);
    read_bytes(in, lv.bias.data(), sizeof(double) * lv.bias.size());
  }
  return ck;
}

}  // namespace pl2o
