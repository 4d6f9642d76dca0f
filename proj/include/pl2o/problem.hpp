#pragma once

#include <cstddef>
#include <vector>

#include "pl2o/numeric.hpp"

namespace pl2o {

/// Coefficients of one downlink instance: N senders with K antennas each,
/// one legitimate user and one eavesdropper per sender.
///   h[i*N + j] : channel sender i -> legitimate user j (length K)
///   g[j*N + k] : channel sender j -> eavesdropper k    (length K)
struct ChannelSet {
  std::size_t n_users = 0;     // N
  std::size_t n_antennas = 0;  // K
  std::vector<ComplexVec> h;   // N*N entries
  std::vector<ComplexVec> g;   // N*N entries
  double sigma2 = 1.0;         // noise power, linear scale
  std::vector<double> gamma;   // per-user SINR thresholds, linear scale

  const ComplexVec& h_at(std::size_t sender, std::size_t user) const {
    return h[sender * n_users + user];
  }
  const ComplexVec& g_at(std::size_t sender, std::size_t eve) const {
    return g[sender * n_users + eve];
  }
};

/// The optimization variable: N beamforming vectors of length K.
/// Flattens to a real vector of length 2*K*N (user-major, interleaved pairs).
struct Beamformer {
  std::vector<ComplexVec> w;

  static Beamformer zeros(std::size_t n_users, std::size_t n_antennas);

  std::size_t n_users() const { return w.size(); }
  std::size_t n_antennas() const { return w.empty() ? 0 : w[0].dim(); }

  std::vector<double> flatten() const;
  static Beamformer unflatten(const std::vector<double>& flat,
                              std::size_t n_users, std::size_t n_antennas);
};

enum class ProblemVariant { kEveSinrMin, kGreenPower };

struct ProblemSpec {
  ProblemVariant variant = ProblemVariant::kEveSinrMin;
  double sparsity_weight = 0.0;  // used only for kGreenPower
  double smooth_delta = 1e-8;    // L0.5 smoothing offset
};

/// SINR of legitimate user i: |w_i^H h_ii|^2 / (sum_{j!=i} |w_j^H h_ji|^2 + sigma^2).
double sinr_legit(const Beamformer& W, const ChannelSet& ch, std::size_t i);

/// SINR of eavesdropper k, paired with sender k:
/// |w_k^H g_kk|^2 / (sum_{j!=k} |w_j^H g_jk|^2 + sigma^2).
double sinr_eve(const Beamformer& W, const ChannelSet& ch, std::size_t k);

double objective(const Beamformer& W, const ChannelSet& ch, const ProblemSpec& spec);

/// Analytic gradient of objective() with respect to the flattened coordinates.
std::vector<double> grad_objective(const Beamformer& W, const ChannelSet& ch,
                                   const ProblemSpec& spec);

/// Gradient taking the flattened beamformer directly (same result as above).
std::vector<double> grad_objective_flat(const std::vector<double>& w_flat,
                                        const ChannelSet& ch, const ProblemSpec& spec);
double objective_flat(const std::vector<double>& w_flat, const ChannelSet& ch,
                      const ProblemSpec& spec);

/// Phase-aligned SOC margins, one per user:
///   margin_i = |w_i^H h_ii| - sqrt(gamma_i) * sqrt(sum_{j!=i} |w_j^H h_ji|^2 + sigma^2)
/// margin_i >= 0 exactly when SINR_i >= gamma_i.
std::vector<double> soc_residuals(const Beamformer& W, const ChannelSet& ch);

/// Gradient of margin_i with respect to the flattened coordinates.
/// The |w_i^H h_ii| term uses subgradient 0 at the origin.
std::vector<double> grad_soc_margin(const Beamformer& W, const ChannelSet& ch,
                                    std::size_t i);

}  // namespace pl2o
