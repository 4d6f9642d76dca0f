#include "pl2o/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace pl2o {

namespace {

// (Re, Im) of w^H c, where w is a 2K-long slice of a flat vector.
inline void inner_re_im(const double* w, const ComplexVec& c, double& re, double& im) {
  re = 0.0;
  im = 0.0;
  const std::size_t k = c.dim();
  for (std::size_t m = 0; m < k; ++m) {
    const double a = w[2 * m], b = w[2 * m + 1];
    const double p = c.re_im[2 * m], q = c.re_im[2 * m + 1];
    re += a * p + b * q;
    im += a * q - b * p;
  }
}

inline double abs2_inner(const double* w, const ComplexVec& c) {
  double re, im;
  inner_re_im(w, c, re, im);
  return re * re + im * im;
}

// grad += coeff * d|w^H c|^2/dw on one block, given the precomputed (Re, Im).
inline void add_abs2_grad(double* grad, const ComplexVec& c, double coeff,
                          double re, double im) {
  const std::size_t k = c.dim();
  for (std::size_t m = 0; m < k; ++m) {
    const double p = c.re_im[2 * m], q = c.re_im[2 * m + 1];
    grad[2 * m] += coeff * 2.0 * (re * p + im * q);
    grad[2 * m + 1] += coeff * 2.0 * (re * q - im * p);
  }
}

inline void check_user_index(const ChannelSet& ch, std::size_t i, const char* who) {
  if (i >= ch.n_users) throw std::out_of_range(std::string(who) + ": user index out of range");
}

}  // namespace

Beamformer Beamformer::zeros(std::size_t n_users, std::size_t n_antennas) {
  Beamformer b;
  b.w.assign(n_users, ComplexVec(n_antennas));
  return b;
}

std::vector<double> Beamformer::flatten() const {
  std::vector<double> flat;
  flat.reserve(2 * n_users() * n_antennas());
  for (const auto& wi : w) flat.insert(flat.end(), wi.re_im.begin(), wi.re_im.end());
  return flat;
}

Beamformer Beamformer::unflatten(const std::vector<double>& flat,
                                 std::size_t n_users, std::size_t n_antennas) {
  if (flat.size() != 2 * n_users * n_antennas)
    throw std::invalid_argument("Beamformer::unflatten: length mismatch");
  Beamformer b = Beamformer::zeros(n_users, n_antennas);
  const std::size_t block = 2 * n_antennas;
  for (std::size_t i = 0; i < n_users; ++i)
    std::copy(flat.begin() + i * block, flat.begin() + (i + 1) * block,
              b.w[i].re_im.begin());
  return b;
}

double sinr_legit(const Beamformer& W, const ChannelSet& ch, std::size_t i) {
  check_user_index(ch, i, "sinr_legit");
  const std::vector<double> flat = W.flatten();
  const std::size_t block = 2 * ch.n_antennas;
  const double num = abs2_inner(flat.data() + i * block, ch.h_at(i, i));
  double den = ch.sigma2;
  for (std::size_t j = 0; j < ch.n_users; ++j) {
    if (j == i) continue;
    den += abs2_inner(flat.data() + j * block, ch.h_at(j, i));
  }
  return num / den;
}

double sinr_eve(const Beamformer& W, const ChannelSet& ch, std::size_t k) {
  check_user_index(ch, k, "sinr_eve");
  const std::vector<double> flat = W.flatten();
  const std::size_t block = 2 * ch.n_antennas;
  const double num = abs2_inner(flat.data() + k * block, ch.g_at(k, k));
  double den = ch.sigma2;
  for (std::size_t j = 0; j < ch.n_users; ++j) {
    if (j == k) continue;
    den += abs2_inner(flat.data() + j * block, ch.g_at(j, k));
  }
  return num / den;
}

double objective_flat(const std::vector<double>& w_flat, const ChannelSet& ch,
                      const ProblemSpec& spec) {
  const std::size_t n = ch.n_users;
  const std::size_t block = 2 * ch.n_antennas;
  if (spec.variant == ProblemVariant::kEveSinrMin) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double num = abs2_inner(w_flat.data() + k * block, ch.g_at(k, k));
      double den = ch.sigma2;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        den += abs2_inner(w_flat.data() + j * block, ch.g_at(j, k));
      }
      total += num / den;
    }
    return total;
  }
  // Green power: total transmit power plus smoothed L0.5 sparsity penalty on
  // per-coefficient complex magnitudes.
  double power = 0.0;
  double penalty = 0.0;
  for (std::size_t m = 0; m + 1 < w_flat.size(); m += 2) {
    const double a = w_flat[m], b = w_flat[m + 1];
    const double mag2 = a * a + b * b;
    power += mag2;
    penalty += std::pow(mag2 + spec.smooth_delta, 0.25);
  }
  return power + spec.sparsity_weight * penalty;
}

double objective(const Beamformer& W, const ChannelSet& ch, const ProblemSpec& spec) {
  return objective_flat(W.flatten(), ch, spec);
}

std::vector<double> grad_objective_flat(const std::vector<double>& w_flat,
                                        const ChannelSet& ch, const ProblemSpec& spec) {
  const std::size_t n = ch.n_users;
  const std::size_t block = 2 * ch.n_antennas;
  std::vector<double> grad(w_flat.size(), 0.0);
  if (spec.variant == ProblemVariant::kEveSinrMin) {
    for (std::size_t k = 0; k < n; ++k) {
      double re_kk, im_kk;
      inner_re_im(w_flat.data() + k * block, ch.g_at(k, k), re_kk, im_kk);
      const double num = re_kk * re_kk + im_kk * im_kk;
      double den = ch.sigma2;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        den += abs2_inner(w_flat.data() + j * block, ch.g_at(j, k));
      }
      add_abs2_grad(grad.data() + k * block, ch.g_at(k, k), 1.0 / den, re_kk, im_kk);
      const double coeff = -num / (den * den);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        double re, im;
        inner_re_im(w_flat.data() + j * block, ch.g_at(j, k), re, im);
        add_abs2_grad(grad.data() + j * block, ch.g_at(j, k), coeff, re, im);
      }
    }
    return grad;
  }
  for (std::size_t m = 0; m + 1 < w_flat.size(); m += 2) {
    const double a = w_flat[m], b = w_flat[m + 1];
    const double mag2 = a * a + b * b;
    const double s = spec.sparsity_weight * 0.5 * std::pow(mag2 + spec.smooth_delta, -0.75);
    grad[m] = 2.0 * a + s * a;
    grad[m + 1] = 2.0 * b + s * b;
  }
  return grad;
}

std::vector<double> grad_objective(const Beamformer& W, const ChannelSet& ch,
                                   const ProblemSpec& spec) {
  return grad_objective_flat(W.flatten(), ch, spec);
}

std::vector<double> soc_residuals(const Beamformer& W, const ChannelSet& ch) {
  const std::vector<double> flat = W.flatten();
  const std::size_t n = ch.n_users;
  const std::size_t block = 2 * ch.n_antennas;
  std::vector<double> margins(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double direct = std::sqrt(abs2_inner(flat.data() + i * block, ch.h_at(i, i)));
    double interf = ch.sigma2;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      interf += abs2_inner(flat.data() + j * block, ch.h_at(j, i));
    }
    margins[i] = direct - std::sqrt(ch.gamma[i]) * std::sqrt(interf);
  }
  return margins;
}

std::vector<double> grad_soc_margin(const Beamformer& W, const ChannelSet& ch,
                                    std::size_t i) {
  check_user_index(ch, i, "grad_soc_margin");
  const std::vector<double> flat = W.flatten();
  const std::size_t n = ch.n_users;
  const std::size_t block = 2 * ch.n_antennas;
  std::vector<double> grad(flat.size(), 0.0);

  double re, im;
  inner_re_im(flat.data() + i * block, ch.h_at(i, i), re, im);
  const double direct = std::sqrt(re * re + im * im);
  if (direct > 0.0)
    add_abs2_grad(grad.data() + i * block, ch.h_at(i, i), 0.5 / direct, re, im);

  double interf = ch.sigma2;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    interf += abs2_inner(flat.data() + j * block, ch.h_at(j, i));
  }
  const double root = std::sqrt(interf);
  const double coeff = -std::sqrt(ch.gamma[i]) * 0.5 / root;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    double rj, ij;
    inner_re_im(flat.data() + j * block, ch.h_at(j, i), rj, ij);
    add_abs2_grad(grad.data() + j * block, ch.h_at(j, i), coeff, rj, ij);
  }
  return grad;
}

}  // namespace pl2o
