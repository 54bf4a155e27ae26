#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace hasgld {

// Robbins-Monro weight schedule omega_k = c1 * (k + c2)^(-alpha).
// Admissible schedules need alpha in (0.5, 1] so that the weights are square
// summable but not summable.
struct OmegaSchedule {
  double c1 = 5.0;
  double c2 = 10.0;
  double alpha = 0.9;
};

double omega(const OmegaSchedule& sched, std::int64_t k);

struct ScheduleCheck {
  bool ok = true;
  std::string message;
};

// Validates c1 > 0, c2 >= 0 and alpha in (0.5, 1], reporting which condition
// fails and why it matters.
ScheduleCheck validate_schedule(const OmegaSchedule& sched);

// Convex blend (1 - omega) * prev + omega * fresh of two same-shaped
// symmetric positive definite matrices; omega must lie in (0, 1].
Eigen::MatrixXd sa_matrix_update(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& fresh,
                                 double omega);

// Convex blend of smoothed product vectors. An empty prev (size 0) marks the
// first observation and returns fresh unchanged.
Eigen::VectorXd sa_product_update(const Eigen::VectorXd& prev, const Eigen::VectorXd& fresh,
                                  double omega);

enum class SaMode { kDense, kVector };

// Smoothing state carried across sampler steps. Dense mode keeps the blended
// preconditioner and its square root explicitly; vector mode keeps only the
// blended product vectors, substituting the previous step's products for the
// unavailable matrix-vector products.
struct SaState {
  SaMode mode = SaMode::kDense;
  Eigen::MatrixXd G;  // dense mode
  Eigen::MatrixXd S;  // dense mode
  Eigen::VectorXd smoothed_Gg;  // vector mode, size 0 until first step
  Eigen::VectorXd smoothed_Sz;  // vector mode, size 0 until first step
};

// Dense mode starts from the identity preconditioner; vector mode starts
// empty.
SaState make_sa_state(SaMode mode, Eigen::Index dim);

}  // namespace hasgld
