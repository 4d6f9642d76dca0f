#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace pl2o {

/// Complex vector stored as interleaved real pairs (re0, im0, re1, im1, ...).
/// All data crossing module boundaries uses this flat-real convention.
struct ComplexVec {
  std::vector<double> re_im;

  ComplexVec() = default;
  explicit ComplexVec(std::size_t dim) : re_im(2 * dim, 0.0) {}
  explicit ComplexVec(std::vector<double> interleaved) : re_im(std::move(interleaved)) {}

  std::size_t dim() const { return re_im.size() / 2; }

  std::complex<double> at(std::size_t k) const {
    return {re_im[2 * k], re_im[2 * k + 1]};
  }
  void set(std::size_t k, std::complex<double> value) {
    re_im[2 * k] = value.real();
    re_im[2 * k + 1] = value.imag();
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : re_im) s += v * v;
    return s;
  }
};

/// Counter-style splittable generator (splitmix64 core).
/// Identical seed gives an identical sample stream, bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double next_double();

  /// Two independent N(0,1) samples via Box-Muller (two uniforms consumed).
  void next_gaussian_pair(double& z0, double& z1);

  /// Uniform integer in [0, bound), bound >= 1. Rejection kills modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  /// Child generator with an independent stream.
  Rng split() { return Rng(next_u64()); }

 private:
  std::uint64_t state_;
};

/// CN(0, I) sample of the given complex dimension: real and imaginary parts
/// each N(0, 1/2), so per-complex-entry variance is 1.
ComplexVec cgauss_sample(Rng& rng, std::size_t dim);

/// a^H b = sum_k conj(a_k) * b_k. Throws std::invalid_argument on length mismatch.
std::complex<double> hermitian_inner(const ComplexVec& a, const ComplexVec& b);

/// Elementwise t_m = y_m / (x_m + eps) in the flat real coordinate space.
std::vector<double> hadamard_div(const std::vector<double>& y,
                                 const std::vector<double>& x, double eps);

/// Central-difference gradient estimate, coordinate by coordinate.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& x, double h);

}  // namespace pl2o
