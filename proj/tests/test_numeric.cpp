#include <doctest.h>

#include <cmath>
#include <complex>

#include "pl2o/numeric.hpp"

using namespace pl2o;

TEST_CASE("cgauss_sample is deterministic for a fixed seed") {
  Rng a(7), b(7);
  const ComplexVec va = cgauss_sample(a, 4);
  const ComplexVec vb = cgauss_sample(b, 4);
  REQUIRE(va.re_im.size() == 8);
  for (std::size_t i = 0; i < va.re_im.size(); ++i) CHECK(va.re_im[i] == vb.re_im[i]);
}

TEST_CASE("cgauss_sample matches CN(0, I) moments") {
  Rng rng(123);
  const std::size_t dim = 4, draws = 10000;
  std::vector<double> mean(2 * dim, 0.0);
  std::vector<double> var(dim, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const ComplexVec v = cgauss_sample(rng, dim);
    for (std::size_t i = 0; i < 2 * dim; ++i) mean[i] += v.re_im[i];
    for (std::size_t k = 0; k < dim; ++k) var[k] += std::norm(v.at(k));
  }
  for (std::size_t i = 0; i < 2 * dim; ++i)
    CHECK(std::abs(mean[i] / draws) < 0.05);
  for (std::size_t k = 0; k < dim; ++k)
    CHECK(std::abs(var[k] / draws - 1.0) < 0.05);
}

TEST_CASE("hermitian_inner hand values") {
  ComplexVec a(2);
  a.set(0, {1.0, 1.0});
  a.set(1, {2.0, 0.0});
  const std::complex<double> aa = hermitian_inner(a, a);
  CHECK(aa.real() == doctest::Approx(6.0));
  CHECK(aa.imag() == doctest::Approx(0.0));

  ComplexVec e1(1), e2(1);
  e1.set(0, {1.0, 0.0});
  e2.set(0, {0.0, 1.0});
  const std::complex<double> orth = hermitian_inner(e1, e2);
  CHECK(std::abs(orth) == doctest::Approx(1.0));  // conj(1)*(i) = i
  ComplexVec p(1), q(1);
  p.set(0, {1.0, 1.0});
  q.set(0, {2.0, -1.0});
  const std::complex<double> pq = hermitian_inner(p, q);
  CHECK(pq.real() == doctest::Approx(1.0));
  CHECK(pq.imag() == doctest::Approx(-3.0));

  ComplexVec long_a(2), short_b(1);
  CHECK_THROWS_AS((void)hermitian_inner(long_a, short_b), std::invalid_argument);
}

TEST_CASE("hermitian_inner(a, a) is real up to roundoff") {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const ComplexVec a = cgauss_sample(rng, 8);
    const std::complex<double> aa = hermitian_inner(a, a);
    CHECK(std::abs(aa.imag()) <= 1e-12 * a.squared_norm());
  }
}

TEST_CASE("hadamard_div forced values") {
  CHECK(hadamard_div({3.0}, {2.0}, 1.0)[0] == doctest::Approx(1.0));
  const std::vector<double> t = hadamard_div({2.0, -4.0}, {0.0, 0.0}, 1.0);
  CHECK(t[0] == doctest::Approx(2.0));
  CHECK(t[1] == doctest::Approx(-4.0));
  const std::vector<double> ones = hadamard_div({1.5, -2.5}, {1.5, -2.5}, 1e-300);
  CHECK(ones[0] == doctest::Approx(1.0));
  CHECK(ones[1] == doctest::Approx(1.0));
}

TEST_CASE("hadamard_div reconstructs y exactly") {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> y(10), x(10);
    for (int i = 0; i < 10; ++i) {
      double z0, z1;
      rng.next_gaussian_pair(z0, z1);
      y[i] = 3.0 * z0;
      x[i] = 2.0 * z1;
    }
    const double eps = 1e-6;
    const std::vector<double> t = hadamard_div(y, x, eps);
    for (int i = 0; i < 10; ++i) CHECK(t[i] * (x[i] + eps) == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("finite_diff_grad on quadratics and constants") {
  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  const std::vector<double> g = finite_diff_grad(norm2, {1.0, 2.0}, 1e-5);
  CHECK(std::abs(g[0] - 2.0) < 1e-6);
  CHECK(std::abs(g[1] - 4.0) < 1e-6);

  auto constant = [](const std::vector<double>&) { return 3.5; };
  const std::vector<double> zero = finite_diff_grad(constant, {0.3, -0.7, 2.0}, 1e-5);
  for (double e : zero) CHECK(std::abs(e) < 1e-9);
}

TEST_CASE("rng streams are independent after split and reproducible") {
  Rng root(42);
  Rng child = root.split();
  Rng root2(42);
  Rng child2 = root2.split();
  for (int i = 0; i < 16; ++i) {
    CHECK(child.next_u64() == child2.next_u64());
    CHECK(root.next_u64() == root2.next_u64());
  }
  Rng bounded(5);
  for (int i = 0; i < 200; ++i) CHECK(bounded.next_below(7) < 7);
}
