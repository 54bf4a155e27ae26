#pragma once

#include <Eigen/Dense>

#include <vector>

namespace hasgld {

// One curvature observation used by the limited-memory Hessian approximation.
// s is the parameter increment, y_raw the gradient increment measured on the
// same minibatch, and y_bar the damped increment actually consumed by the
// recursions. Invariants: theta in (0, 1]; theta == 1 implies y_bar == y_raw;
// theta < 1 implies dot(s, y_bar) == damping_r * gamma * |s|^2 (exact up to
// rounding); dot(s, y_bar) > 0 always.
struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y_raw;
  Eigen::VectorXd y_bar;
  double theta = 1.0;
  double gamma = 1.0;  // base-matrix scale in force when the pair was damped
};

// Raw increments before damping.
struct RawPair {
  Eigen::VectorXd s;
  Eigen::VectorXd y_raw;
};

// Damped gradient increment plus the convex weight that produced it.
struct DampResult {
  Eigen::VectorXd y_bar;
  double theta = 1.0;
};

// Builds the raw increment pair from two states and their gradients, which
// must come from the identical minibatch. Throws std::invalid_argument on
// dimension mismatch or when |s| < 1e-12 * (1 + |beta_prev|) (an increment
// that small carries no usable curvature).
RawPair make_curvature_pair(const Eigen::VectorXd& beta_prev, const Eigen::VectorXd& beta_next,
                            const Eigen::VectorXd& grad_prev, const Eigen::VectorXd& grad_next);

// Base scale for the recursion seed: max(|y_bar|^2 / dot(s, y_bar), delta_floor).
// Throws std::invalid_argument if dot(s, y_bar) <= 0.
double gamma_init(const Eigen::VectorXd& s, const Eigen::VectorXd& y_bar, double delta_floor);

// Powell-style damping against the base matrix gamma * I. Returns y_raw
// untouched (theta = 1) when dot(s, y_raw) >= r * gamma * |s|^2; otherwise
// blends y_bar = theta * y_raw + (1 - theta) * gamma * s with
// theta = (1 - r) * gamma * |s|^2 / (gamma * |s|^2 - dot(s, y_raw)),
// which makes dot(s, y_bar) = r * gamma * |s|^2 exactly.
// Requires s nonzero, gamma > 0, r in (0, 1).
DampResult damp(const Eigen::VectorXd& s, const Eigen::VectorXd& y_raw, double gamma, double r);

// Full pair assembly: a provisional scale is taken from the raw increments
// (max(|y_raw|^2 / dot(s, y_raw), delta_floor) when dot(s, y_raw) > 0, else
// delta_floor), damping runs against it, and that provisional scale is stored
// as the pair's gamma.
CurvaturePair build_curvature_pair(const RawPair& raw, double damping_r, double delta_floor);

// Bounded FIFO of curvature pairs (oldest first) plus the current base scale.
// The scale is recomputed from the newest pair on every push and never falls
// below delta_floor.
class LbfgsMemory {
public:
  LbfgsMemory(int capacity, double delta_floor, double initial_gamma = 1.0);

  // Appends a pair, evicting the oldest when at capacity, and refreshes the
  // base scale from the appended pair.
  void push(CurvaturePair pair);

  const std::vector<CurvaturePair>& pairs() const { return pairs_; }
  int capacity() const { return capacity_; }
  double delta_floor() const { return delta_floor_; }
  double gamma() const { return gamma_; }
  bool empty() const { return pairs_.empty(); }
  void clear();

private:
  int capacity_;
  double delta_floor_;
  double gamma_;
  std::vector<CurvaturePair> pairs_;
};

// Free-function spelling of LbfgsMemory::push.
void memory_push(LbfgsMemory& mem, CurvaturePair pair);

// Explicit matrices of the limited-memory approximation: B is the Hessian
// approximation, G its inverse, S a square root of G (S * S^T == G). These
// are the reference semantics the matrix-free paths must reproduce.
struct DensePrecond {
  Eigen::MatrixXd B;
  Eigen::MatrixXd G;
  Eigen::MatrixXd S;
  double gamma = 1.0;
};

// One rank-two update of the Hessian approximation:
// B' = B + y_bar y_bar^T / dot(y_bar, s) - (B s)(B s)^T / dot(s, B s).
Eigen::MatrixXd dense_B_step(const Eigen::MatrixXd& B, const Eigen::VectorXd& s,
                             const Eigen::VectorXd& y_bar);

// Matching inverse update:
// G' = (I - s y_bar^T / rho) G (I - y_bar s^T / rho) + s s^T / rho,
// rho = dot(y_bar, s).
Eigen::MatrixXd dense_G_step(const Eigen::MatrixXd& G, const Eigen::VectorXd& s,
                             const Eigen::VectorXd& y_bar);

// Matching square-root update: S' = (I - p q^T) S with p = s / rho and
// q = y_bar - sqrt(rho / dot(s, B s)) * B s, where B is the Hessian
// approximation *before* absorbing this pair. Keeps S' S'^T == G'.
Eigen::MatrixXd dense_S_step(const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                             const Eigen::VectorXd& s, const Eigen::VectorXd& y_bar);

// Runs the three dense recursions from B0 = gamma I, G0 = I / gamma,
// S0 = I / sqrt(gamma) through all stored pairs, oldest to newest.
DensePrecond dense_build(const LbfgsMemory& mem, Eigen::Index dim);

// Matrix-free product G g via the two-loop recursion; O(M d) and equal to
// dense_build(mem, d).G * g up to rounding. Empty memory yields g / gamma.
Eigen::VectorXd apply_Gg(const LbfgsMemory& mem, const Eigen::VectorXd& g);

// Matrix-free product S z; O(M^2 d) via the running products a_i = B_i s_i
// and equal to dense_build(mem, d).S * z up to rounding. Empty memory yields
// z / sqrt(gamma).
Eigen::VectorXd apply_Sz(const LbfgsMemory& mem, const Eigen::VectorXd& z);

// Eigenvalue envelope guaranteed for the Hessian approximation when every
// consumed pair satisfies y_bar = H_bar s for some matrix with spectrum in
// [0, curvature_max] (after damping). Both ends are spelled directly from
// the recursion's trace/determinant bounds; the lower end underflows toward
// zero quickly as dim and capacity grow, which is expected.
struct SpectralBounds {
  double lower = 0.0;
  double upper = 0.0;
};
SpectralBounds hessian_spectral_bounds(Eigen::Index dim, int capacity, double damping_r,
                                       double delta_floor, double curvature_max);

}  // namespace hasgld
