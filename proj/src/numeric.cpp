#include "pl2o/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace pl2o {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInv2Pow53 = 1.0 / 9007199254740992.0;  // 2^-53
}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * kInv2Pow53;
}

void Rng::next_gaussian_pair(double& z0, double& z1) {
  double u1 = next_double();
  double u2 = next_double();
  if (u1 < kInv2Pow53) u1 = kInv2Pow53;  // keep log finite
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = kTwoPi * u2;
  z0 = r * std::cos(theta);
  z1 = r * std::sin(theta);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be >= 1");
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

ComplexVec cgauss_sample(Rng& rng, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("cgauss_sample: dim must be >= 1");
  ComplexVec out(dim);
  constexpr double kSqrtHalf = 0.70710678118654752440;
  for (std::size_t k = 0; k < dim; ++k) {
    double z0 = 0.0, z1 = 0.0;
    rng.next_gaussian_pair(z0, z1);
    out.re_im[2 * k] = z0 * kSqrtHalf;
    out.re_im[2 * k + 1] = z1 * kSqrtHalf;
  }
  return out;
}

std::complex<double> hermitian_inner(const ComplexVec& a, const ComplexVec& b) {
  if (a.re_im.size() != b.re_im.size())
    throw std::invalid_argument("hermitian_inner: length mismatch");
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double ar = a.re_im[2 * k], ai = a.re_im[2 * k + 1];
    const double br = b.re_im[2 * k], bi = b.re_im[2 * k + 1];
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

std::vector<double> hadamard_div(const std::vector<double>& y,
                                 const std::vector<double>& x, double eps) {
  if (y.size() != x.size())
    throw std::invalid_argument("hadamard_div: length mismatch");
  std::vector<double> t(y.size());
  for (std::size_t m = 0; m < y.size(); ++m) t[m] = y[m] / (x[m] + eps);
  return t;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double xm = x[m];
    probe[m] = xm + h;
    const double fp = fn(probe);
    probe[m] = xm - h;
    const double fm = fn(probe);
    probe[m] = xm;
    grad[m] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace pl2o
