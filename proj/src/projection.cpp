#include "pl2o/projection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pl2o {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

VectorXcd to_eigen(const ComplexVec& c) {
  VectorXcd v(c.dim());
  for (std::size_t k = 0; k < c.dim(); ++k) v(k) = c.at(k);
  return v;
}

// Squared-margin constraint geometry in flat real coordinates. For the channel
// c from sender j to user i, with u = interleave(re, im) and v = interleave(im, -re),
//   <w_j, u> = Re(w_j^H c),  <w_j, v> = Im(w_j^H c),
// so s_i(W) = |w_i^H h_ii|^2 - gamma_i (sum_{j!=i} |w_j^H h_ji|^2 + sigma^2)
// is a difference of rank-2 quadratic forms with block-diagonal curvature.
struct SocGeometry {
  std::size_t n_users = 0;
  std::size_t block = 0;  // 2K
  std::size_t dim = 0;    // 2KN
  std::vector<VectorXd> pair_u, pair_v;  // indexed [sender * N + user]
  std::vector<double> gamma;
  double sigma2 = 1.0;

  static SocGeometry build(const ChannelSet& ch) {
    SocGeometry geo;
    geo.n_users = ch.n_users;
    geo.block = 2 * ch.n_antennas;
    geo.dim = geo.block * ch.n_users;
    geo.gamma = ch.gamma;
    geo.sigma2 = ch.sigma2;
    geo.pair_u.resize(ch.n_users * ch.n_users);
    geo.pair_v.resize(ch.n_users * ch.n_users);
    for (std::size_t j = 0; j < ch.n_users; ++j) {
      for (std::size_t i = 0; i < ch.n_users; ++i) {
        const ComplexVec& c = ch.h_at(j, i);
        VectorXd u(geo.block), v(geo.block);
        for (std::size_t m = 0; m < ch.n_antennas; ++m) {
          const double p = c.re_im[2 * m], q = c.re_im[2 * m + 1];
          u(2 * m) = p;
          u(2 * m + 1) = q;
          v(2 * m) = q;
          v(2 * m + 1) = -p;
        }
        geo.pair_u[j * ch.n_users + i] = std::move(u);
        geo.pair_v[j * ch.n_users + i] = std::move(v);
      }
    }
    return geo;
  }

  void inner(const VectorXd& y, std::size_t j, std::size_t i, double& re,
             double& im) const {
    const auto seg = y.segment(j * block, block);
    re = seg.dot(pair_u[j * n_users + i]);
    im = seg.dot(pair_v[j * n_users + i]);
  }

  double constraint(const VectorXd& y, std::size_t i) const {
    double re, im;
    inner(y, i, i, re, im);
    double s = re * re + im * im;
    double interf = sigma2;
    for (std::size_t j = 0; j < n_users; ++j) {
      if (j == i) continue;
      inner(y, j, i, re, im);
      interf += re * re + im * im;
    }
    return s - gamma[i] * interf;
  }

  VectorXd constraint_values(const VectorXd& y) const {
    VectorXd s(n_users);
    for (std::size_t i = 0; i < n_users; ++i) s(i) = constraint(y, i);
    return s;
  }

  bool strictly_feasible(const VectorXd& y) const {
    for (std::size_t i = 0; i < n_users; ++i)
      if (constraint(y, i) <= 0.0) return false;
    return true;
  }

  VectorXd constraint_grad(const VectorXd& y, std::size_t i) const {
    VectorXd g = VectorXd::Zero(dim);
    for (std::size_t j = 0; j < n_users; ++j) {
      const double coeff = (j == i) ? 1.0 : -gamma[i];
      double re, im;
      inner(y, j, i, re, im);
      g.segment(j * block, block) +=
          (2.0 * coeff) * (re * pair_u[j * n_users + i] + im * pair_v[j * n_users + i]);
    }
    return g;
  }

  // H (lower triangle) += scale * hessian(s_i); the hessian is block diagonal
  // with rank-2 blocks 2*c_ij*(u u^T + v v^T).
  void add_constraint_hessian(std::size_t i, double scale, MatrixXd& H) const {
    for (std::size_t j = 0; j < n_users; ++j) {
      const double coeff = 2.0 * scale * ((j == i) ? 1.0 : -gamma[i]);
      auto blk = H.block(j * block, j * block, block, block);
      blk.selfadjointView<Eigen::Lower>().rankUpdate(pair_u[j * n_users + i], coeff);
      blk.selfadjointView<Eigen::Lower>().rankUpdate(pair_v[j * n_users + i], coeff);
    }
  }
};

// Barrier objective psi(y) = t*||y - x||^2 - sum_i log s_i(y).
double barrier_value(const SocGeometry& geo, const VectorXd& x, double t,
                     const VectorXd& y, const VectorXd& s) {
  double v = t * (y - x).squaredNorm();
  for (Eigen::Index i = 0; i < s.size(); ++i) v -= std::log(s(i));
  return v;
}

VectorXd barrier_grad(const SocGeometry& geo, const VectorXd& x, double t,
                      const VectorXd& y, const VectorXd& s) {
  VectorXd g = 2.0 * t * (y - x);
  for (std::size_t i = 0; i < geo.n_users; ++i)
    g -= geo.constraint_grad(y, i) / s(i);
  return g;
}

MatrixXd barrier_hessian_lower(const SocGeometry& geo, double t, const VectorXd& y,
                               const VectorXd& s) {
  MatrixXd H = MatrixXd::Zero(geo.dim, geo.dim);
  for (std::size_t i = 0; i < geo.n_users; ++i) {
    const VectorXd gi = geo.constraint_grad(y, i);
    H.selfadjointView<Eigen::Lower>().rankUpdate(gi, 1.0 / (s(i) * s(i)));
    geo.add_constraint_hessian(i, -1.0 / s(i), H);
  }
  H.diagonal().array() += 2.0 * t;
  return H;
}

// Damped Newton centering for fixed t. Returns the number of iterations taken.
int center(const SocGeometry& geo, const VectorXd& x, double t, VectorXd& y,
           const ProjectorConfig& cfg) {
  int used = 0;
  for (int it = 0; it < cfg.max_newton; ++it) {
    const VectorXd s = geo.constraint_values(y);
    const VectorXd g = barrier_grad(geo, x, t, y, s);
    MatrixXd H = barrier_hessian_lower(geo, t, y, s);

    // Factor with a ridge escalation; the squared-margin barrier is not
    // globally convex, so the exact Hessian can be indefinite early on.
    VectorXd d;
    double ridge = 0.0;
    for (;;) {
      Eigen::LLT<MatrixXd, Eigen::Lower> llt(H);
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-g);
        if (g.dot(d) < 0.0) break;
      }
      ridge = (ridge == 0.0) ? 1e-8 * (2.0 * t + 1.0) : ridge * 10.0;
      H.diagonal().array() += ridge;
      if (!std::isfinite(ridge) || ridge > 1e30) {
        d = -g;  // give up on curvature, fall back to steepest descent
        break;
      }
    }

    const double dec = -g.dot(d);
    const double step_target = 1e-6 * (1.0 + y.norm());
    if (dec <= t * step_target * step_target) break;

    const double psi0 = barrier_value(geo, x, t, y, s);
    double alpha = 1.0;
    int guard = 0;
    while (guard < 70 && !geo.strictly_feasible(y + alpha * d)) {
      alpha *= 0.5;
      ++guard;
    }
    while (guard < 70) {
      const VectorXd cand = y + alpha * d;
      const VectorXd sc = geo.constraint_values(cand);
      if (sc.minCoeff() > 0.0 &&
          barrier_value(geo, x, t, cand, sc) <= psi0 + 1e-4 * alpha * g.dot(d))
        break;
      alpha *= 0.5;
      ++guard;
    }
    if (guard >= 70) break;
    y += alpha * d;
    ++used;
  }
  return used;
}

// Active-set KKT Newton refinement of the barrier output. Solves
//   2(y - x) = sum_{i in A} lambda_i grad s_i(y),  s_i(y) = 0 for i in A,
// and falls back to the barrier point if anything degrades.
bool polish(const SocGeometry& geo, const VectorXd& x, double t_final, VectorXd& y,
            int& iterations) {
  const VectorXd s = geo.constraint_values(y);
  VectorXd lambda_all(geo.n_users);
  for (std::size_t i = 0; i < geo.n_users; ++i) lambda_all(i) = 1.0 / (t_final * s(i));
  const double lam_max = lambda_all.maxCoeff();
  if (!(lam_max > 0.0) || !std::isfinite(lam_max)) return false;

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < geo.n_users; ++i)
    if (lambda_all(i) >= 1e-5 * lam_max) active.push_back(i);
  if (active.empty()) return false;

  const std::size_t n = geo.dim, m = active.size();
  VectorXd yc = y;
  VectorXd lam(m);
  for (std::size_t a = 0; a < m; ++a) lam(a) = lambda_all(active[a]);

  const double f_tol = 1e-11 * (1.0 + x.norm());
  double last_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 15; ++it) {
    std::vector<VectorXd> grads(m);
    VectorXd F(n + m);
    VectorXd F1 = 2.0 * (yc - x);
    for (std::size_t a = 0; a < m; ++a) {
      grads[a] = geo.constraint_grad(yc, active[a]);
      F1 -= lam(a) * grads[a];
      F(n + a) = geo.constraint(yc, active[a]);
    }
    F.head(n) = F1;
    const double fn = F.norm();
    if (!std::isfinite(fn) || fn > 10.0 * last_norm + 1.0) return false;
    if (fn <= f_tol) break;
    last_norm = std::min(last_norm, fn);

    MatrixXd J = MatrixXd::Zero(n + m, n + m);
    MatrixXd M = MatrixXd::Zero(n, n);
    for (std::size_t a = 0; a < m; ++a)
      geo.add_constraint_hessian(active[a], -lam(a), M);
    M.diagonal().array() += 2.0;
    J.topLeftCorner(n, n) = MatrixXd(M.selfadjointView<Eigen::Lower>());
    for (std::size_t a = 0; a < m; ++a) {
      J.block(0, n + a, n, 1) = -grads[a];
      J.block(n + a, 0, 1, n) = grads[a].transpose();
    }
    const VectorXd delta = J.colPivHouseholderQr().solve(-F);
    if (!delta.allFinite()) return false;
    yc += delta.head(n);
    lam += delta.tail(m);
    ++iterations;
  }

  // Accept only a genuine KKT point of the inequality problem.
  if (lam.minCoeff() < -1e-8) return false;
  const VectorXd sc = geo.constraint_values(yc);
  for (std::size_t i = 0; i < geo.n_users; ++i) {
    const bool is_active =
        std::find(active.begin(), active.end(), i) != active.end();
    const double floor = is_active ? -1e-9 * (1.0 + std::abs(geo.gamma[i] * geo.sigma2))
                                   : 0.0;
    if (sc(i) < floor) return false;
  }
  // Polish must not move the point away from x by more than the barrier error.
  if ((yc - x).norm() > (y - x).norm() * (1.0 + 1e-6) + 1e-9) return false;
  y = yc;
  return true;
}

ProjectionResult project_impl(const Beamformer& x, const ChannelSet& ch,
                              const ProjectorConfig& cfg, const Beamformer* start) {
  {
    const std::vector<double> margins = soc_residuals(x, ch);
    const double worst = *std::min_element(margins.begin(), margins.end());
    if (worst >= -cfg.feas_tol) return {x, 0.0, 0, true};
  }

  const SocGeometry geo = SocGeometry::build(ch);
  const std::vector<double> xf = x.flatten();
  const VectorXd xv = Eigen::Map<const VectorXd>(xf.data(), xf.size());

  VectorXd y;
  if (start != nullptr) {
    const std::vector<double> sf = start->flatten();
    y = Eigen::Map<const VectorXd>(sf.data(), sf.size());
    if (!geo.strictly_feasible(y))
      throw InfeasibleRegionError("project: supplied start is not strictly feasible");
  } else {
    try {
      const std::vector<double> zf = zf_init(ch, 2.0).flatten();
      y = Eigen::Map<const VectorXd>(zf.data(), zf.size());
    } catch (const std::exception& e) {
      throw InfeasibleRegionError(std::string("project: no strictly feasible start found (") +
                                  e.what() + ")");
    }
  }

  ProjectionResult result;
  double t = 1.0;
  int iterations = 0;
  bool gap_ok = false;
  double t_final = t;
  for (int stage = 0; stage < cfg.max_stages; ++stage) {
    iterations += center(geo, xv, t, y, cfg);
    t_final = t;
    const double f = (y - xv).squaredNorm();
    if (static_cast<double>(geo.n_users) / t <= cfg.newton_tol * std::max(1.0, f)) {
      gap_ok = true;
      break;
    }
    t *= cfg.barrier_mu;
  }

  polish(geo, xv, t_final, y, iterations);

  result.y = Beamformer::unflatten(std::vector<double>(y.data(), y.data() + y.size()),
                                   ch.n_users, ch.n_antennas);
  result.distance = (y - xv).norm();
  result.iterations = iterations;
  result.converged = gap_ok;
  return result;
}

}  // namespace

bool is_feasible(const Beamformer& W, const ChannelSet& ch, double tol) {
  const std::vector<double> margins = soc_residuals(W, ch);
  for (double m : margins)
    if (m < -tol) return false;
  return true;
}

Beamformer zf_init(const ChannelSet& ch, double power_margin) {
  if (power_margin <= 1.0)
    throw std::invalid_argument("zf_init: power_margin must exceed 1");
  const std::size_t K = ch.n_antennas, N = ch.n_users;
  if (K < N) throw UndeterminedError("zf_init: fewer antennas than users (K < N)");

  Beamformer out = Beamformer::zeros(N, K);
  for (std::size_t j = 0; j < N; ++j) {
    MatrixXcd channels(K, N);
    for (std::size_t i = 0; i < N; ++i) channels.col(i) = to_eigen(ch.h_at(j, i));
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(channels);
    if (static_cast<std::size_t>(qr.rank()) < N)
      throw RankDeficientError("zf_init: channel matrix is rank deficient");

    const VectorXcd direct = channels.col(j);
    VectorXcd residual = direct;
    if (N > 1) {
      MatrixXcd cross(K, N - 1);
      std::size_t c = 0;
      for (std::size_t i = 0; i < N; ++i)
        if (i != j) cross.col(c++) = channels.col(i);
      const VectorXcd coef = cross.colPivHouseholderQr().solve(direct);
      residual = direct - cross * coef;
    }
    const double rn2 = residual.squaredNorm();
    if (rn2 <= 1e-24 * direct.squaredNorm())
      throw RankDeficientError("zf_init: direct channel lies in the cross-channel span");

    const double scale = std::sqrt(power_margin * ch.gamma[j] * ch.sigma2) / rn2;
    for (std::size_t m = 0; m < K; ++m) out.w[j].set(m, scale * residual(m));
  }
  return out;
}

ProjectionResult project(const Beamformer& x, const ChannelSet& ch,
                         const ProjectorConfig& cfg) {
  return project_impl(x, ch, cfg, nullptr);
}

ProjectionResult project(const Beamformer& x, const ChannelSet& ch,
                         const ProjectorConfig& cfg, const Beamformer& start) {
  return project_impl(x, ch, cfg, &start);
}

double orthogonality_residual(const Beamformer& x, const Beamformer& y,
                              const Beamformer& z) {
  const std::vector<double> xf = x.flatten(), yf = y.flatten(), zf = z.flatten();
  double acc = 0.0;
  for (std::size_t m = 0; m < xf.size(); ++m)
    acc += (yf[m] - xf[m]) * (zf[m] - yf[m]);
  return acc;
}

Beamformer sample_feasible_point(const ChannelSet& ch, const Beamformer& reference,
                                 Rng& rng) {
  const std::vector<double> ref = reference.flatten();
  double rms = 0.0;
  for (double v : ref) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(ref.size()));

  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<double> dir = ref;
    for (std::size_t m = 0; m + 1 < dir.size(); m += 2) {
      double z0, z1;
      rng.next_gaussian_pair(z0, z1);
      dir[m] += 0.35 * rms * z0;
      dir[m + 1] += 0.35 * rms * z1;
    }
    const double back_off = 1.0 + 2.0 * rng.next_double();

    auto at_scale = [&](double c) {
      std::vector<double> scaled(dir.size());
      for (std::size_t m = 0; m < dir.size(); ++m) scaled[m] = c * dir[m];
      return Beamformer::unflatten(scaled, ch.n_users, ch.n_antennas);
    };
    // SINRs are monotone in the common scale, so feasibility is upward closed.
    double hi = 1.0;
    bool found = false;
    for (int k = 0; k < 24; ++k) {
      if (is_feasible(at_scale(hi), ch, 0.0)) {
        found = true;
        break;
      }
      hi *= 2.0;
    }
    if (!found) continue;  // direction infeasible at every scale
    double lo = 0.0;
    for (int k = 0; k < 60; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (is_feasible(at_scale(mid), ch, 0.0)) hi = mid;
      else lo = mid;
    }
    return at_scale(hi * back_off);
  }
  throw InfeasibleRegionError("sample_feasible_point: no feasible direction found");
}

}  // namespace pl2o
