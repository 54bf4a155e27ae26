#include "hasgld/lbfgs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hasgld {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

RawPair make_curvature_pair(const Eigen::VectorXd& beta_prev, const Eigen::VectorXd& beta_next,
                            const Eigen::VectorXd& grad_prev, const Eigen::VectorXd& grad_next) {
  const auto d = beta_prev.size();
  require(beta_next.size() == d && grad_prev.size() == d && grad_next.size() == d,
          "make_curvature_pair: dimension mismatch");
  RawPair raw{beta_next - beta_prev, grad_next - grad_prev};
  require(raw.s.norm() >= 1e-12 * (1.0 + beta_prev.norm()),
          "make_curvature_pair: parameter increment too small to carry curvature");
  return raw;
}

double gamma_init(const Eigen::VectorXd& s, const Eigen::VectorXd& y_bar, double delta_floor) {
  require(s.size() == y_bar.size(), "gamma_init: dimension mismatch");
  require(delta_floor > 0.0, "gamma_init: delta_floor must be positive");
  const double sty = s.dot(y_bar);
  require(sty > 0.0, "gamma_init: dot(s, y_bar) must be positive");
  return std::max(y_bar.squaredNorm() / sty, delta_floor);
}

DampResult damp(const Eigen::VectorXd& s, const Eigen::VectorXd& y_raw, double gamma, double r) {
  require(s.size() == y_raw.size(), "damp: dimension mismatch");
  require(gamma > 0.0, "damp: gamma must be positive");
  require(r > 0.0 && r < 1.0, "damp: r must lie in (0, 1)");
  const double snorm2 = s.squaredNorm();
  require(snorm2 > 0.0, "damp: s must be nonzero");
  const double sty = s.dot(y_raw);
  const double gs2 = gamma * snorm2;
  if (sty >= r * gs2) return {y_raw, 1.0};
  const double theta = (1.0 - r) * gs2 / (gs2 - sty);
  return {theta * y_raw + (1.0 - theta) * gamma * s, theta};
}

CurvaturePair build_curvature_pair(const RawPair& raw, double damping_r, double delta_floor) {
  require(delta_floor > 0.0, "build_curvature_pair: delta_floor must be positive");
  const double sty = raw.s.dot(raw.y_raw);
  const double provisional =
      sty > 0.0 ? std::max(raw.y_raw.squaredNorm() / sty, delta_floor) : delta_floor;
  DampResult damped = damp(raw.s, raw.y_raw, provisional, damping_r);
  return CurvaturePair{raw.s, raw.y_raw, std::move(damped.y_bar), damped.theta, provisional};
}

LbfgsMemory::LbfgsMemory(int capacity, double delta_floor, double initial_gamma)
    : capacity_(capacity), delta_floor_(delta_floor) {
  require(capacity >= 1, "LbfgsMemory: capacity must be at least 1");
  require(delta_floor > 0.0, "LbfgsMemory: delta_floor must be positive");
  gamma_ = std::max(initial_gamma, delta_floor);
}

void LbfgsMemory::push(CurvaturePair pair) {
  require(pair.s.size() == pair.y_bar.size() && pair.s.size() > 0,
          "LbfgsMemory::push: malformed pair");
  if (!pairs_.empty())
    require(pair.s.size() == pairs_.front().s.size(), "LbfgsMemory::push: dimension mismatch");
  gamma_ = gamma_init(pair.s, pair.y_bar, delta_floor_);
  if (static_cast<int>(pairs_.size()) == capacity_) pairs_.erase(pairs_.begin());
  pairs_.push_back(std::move(pair));
}

void LbfgsMemory::clear() {
  pairs_.clear();
  gamma_ = std::max(1.0, delta_floor_);
}

void memory_push(LbfgsMemory& mem, CurvaturePair pair) { mem.push(std::move(pair)); }

Eigen::MatrixXd dense_B_step(const Eigen::MatrixXd& B, const Eigen::VectorXd& s,
                             const Eigen::VectorXd& y_bar) {
  const double rho = y_bar.dot(s);
  require(rho > 0.0, "dense_B_step: dot(y_bar, s) must be positive");
  const Eigen::VectorXd a = B * s;
  const double sBs = s.dot(a);
  require(sBs > 0.0, "dense_B_step: s^T B s must be positive");
  return B + (y_bar * y_bar.transpose()) / rho - (a * a.transpose()) / sBs;
}

Eigen::MatrixXd dense_G_step(const Eigen::MatrixXd& G, const Eigen::VectorXd& s,
                             const Eigen::VectorXd& y_bar) {
  const double rho = y_bar.dot(s);
  require(rho > 0.0, "dense_G_step: dot(y_bar, s) must be positive");
  const Eigen::VectorXd u = G * y_bar;
  const double coef = (y_bar.dot(u) / rho + 1.0) / rho;
  Eigen::MatrixXd out = G;
  out.noalias() -= (s * u.transpose()) / rho;
  out.noalias() -= (u * s.transpose()) / rho;
  out.noalias() += coef * (s * s.transpose());
  return out;
}

Eigen::MatrixXd dense_S_step(const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                             const Eigen::VectorXd& s, const Eigen::VectorXd& y_bar) {
  const double rho = y_bar.dot(s);
  require(rho > 0.0, "dense_S_step: dot(y_bar, s) must be positive");
  const Eigen::VectorXd a = B * s;
  const double sBs = s.dot(a);
  require(sBs > 0.0, "dense_S_step: s^T B s must be positive");
  const Eigen::VectorXd q = y_bar - std::sqrt(rho / sBs) * a;
  Eigen::MatrixXd out = S;
  out.noalias() -= (s / rho) * (q.transpose() * S);
  return out;
}

DensePrecond dense_build(const LbfgsMemory& mem, Eigen::Index dim) {
  require(dim > 0, "dense_build: dimension must be positive");
  if (!mem.empty())
    require(mem.pairs().front().s.size() == dim, "dense_build: dimension mismatch");
  const double gamma = mem.gamma();
  DensePrecond out;
  out.gamma = gamma;
  out.B = gamma * Eigen::MatrixXd::Identity(dim, dim);
  out.G = (1.0 / gamma) * Eigen::MatrixXd::Identity(dim, dim);
  out.S = (1.0 / std::sqrt(gamma)) * Eigen::MatrixXd::Identity(dim, dim);
  for (const CurvaturePair& p : mem.pairs()) {
    out.S = dense_S_step(out.S, out.B, p.s, p.y_bar);  // consumes B before the update below
    out.G = dense_G_step(out.G, p.s, p.y_bar);
    out.B = dense_B_step(out.B, p.s, p.y_bar);
  }
  return out;
}

Eigen::VectorXd apply_Gg(const LbfgsMemory& mem, const Eigen::VectorXd& g) {
  const double gamma = mem.gamma();
  if (mem.empty()) return g / gamma;
  const auto& pairs = mem.pairs();
  require(pairs.front().s.size() == g.size(), "apply_Gg: dimension mismatch");
  const int m = static_cast<int>(pairs.size());
  Eigen::VectorXd q = g;
  std::vector<double> alpha(m);
  for (int i = m - 1; i >= 0; --i) {
    const double rho = pairs[i].y_bar.dot(pairs[i].s);
    alpha[i] = pairs[i].s.dot(q) / rho;
    q.noalias() -= alpha[i] * pairs[i].y_bar;
  }
  Eigen::VectorXd xi = q / gamma;
  for (int i = 0; i < m; ++i) {
    const double rho = pairs[i].y_bar.dot(pairs[i].s);
    const double beta = pairs[i].y_bar.dot(xi) / rho;
    xi.noalias() += (alpha[i] - beta) * pairs[i].s;
  }
  return xi;
}

Eigen::VectorXd apply_Sz(const LbfgsMemory& mem, const Eigen::VectorXd& z) {
  const double gamma = mem.gamma();
  if (mem.empty()) return z / std::sqrt(gamma);
  const auto& pairs = mem.pairs();
  require(pairs.front().s.size() == z.size(), "apply_Sz: dimension mismatch");
  const int m = static_cast<int>(pairs.size());

  // a[i] = B_i s_i, where B_i is the Hessian approximation after absorbing
  // pairs 0..i-1. T[j] carries B_t s_j across the outer sweeps.
  std::vector<Eigen::VectorXd> t(m);
  for (int j = 0; j < m; ++j) t[j] = gamma * pairs[j].s;
  std::vector<Eigen::VectorXd> a(m);
  a[0] = t[0];
  for (int i = 1; i < m; ++i) {
    const Eigen::VectorXd& y_prev = pairs[i - 1].y_bar;
    const Eigen::VectorXd& s_prev = pairs[i - 1].s;
    const double rho_prev = y_prev.dot(s_prev);
    const double sa_prev = s_prev.dot(a[i - 1]);
    require(sa_prev > 0.0, "apply_Sz: s^T B s must stay positive");
    for (int j = i; j < m; ++j) {
      t[j].noalias() += (y_prev.dot(pairs[j].s) / rho_prev) * y_prev;
      t[j].noalias() -= (a[i - 1].dot(pairs[j].s) / sa_prev) * a[i - 1];
    }
    a[i] = t[i];
  }

  Eigen::VectorXd eta = z / std::sqrt(gamma);
  for (int i = 0; i < m; ++i) {
    const double rho = pairs[i].y_bar.dot(pairs[i].s);
    const double sa = pairs[i].s.dot(a[i]);
    require(sa > 0.0, "apply_Sz: s^T B s must stay positive");
    const Eigen::VectorXd q = pairs[i].y_bar - std::sqrt(rho / sa) * a[i];
    eta.noalias() -= (q.dot(eta) / rho) * pairs[i].s;
  }
  return eta;
}

SpectralBounds hessian_spectral_bounds(Eigen::Index dim, int capacity, double damping_r,
                                       double delta_floor, double curvature_max) {
  require(dim > 0 && capacity >= 1, "hessian_spectral_bounds: bad dimensions");
  require(damping_r > 0.0 && damping_r < 1.0, "hessian_spectral_bounds: r must lie in (0, 1)");
  require(delta_floor > 0.0 && curvature_max > 0.0, "hessian_spectral_bounds: bad scales");
  const double d = static_cast<double>(dim);
  const double m = static_cast<double>(capacity);
  const double a_max = curvature_max;
  const double upper =
      d * (delta_floor + a_max) +
      (m / damping_r) * (a_max * a_max / delta_floor + (delta_floor + a_max) + 2.0 * a_max);
  const double lower = std::pow(upper, -(d - 1.0)) * std::pow(damping_r / upper, m) *
                       std::pow(delta_floor, d + m);
  return {lower, upper};
}

}  // namespace hasgld
