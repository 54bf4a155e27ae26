#include "hasgld/sa.hpp"

#include <cmath>
#include <stdexcept>

namespace hasgld {

double omega(const OmegaSchedule& sched, std::int64_t k) {
  if (k < 0) throw std::invalid_argument("omega: step index must be nonnegative");
  const double base = static_cast<double>(k) + sched.c2;
  if (base <= 0.0) throw std::invalid_argument("omega: k + c2 must be positive");
  return sched.c1 * std::pow(base, -sched.alpha);
}

ScheduleCheck validate_schedule(const OmegaSchedule& sched) {
  if (!(sched.c1 > 0.0)) return {false, "c1 must be positive (weights must be positive)"};
  if (!(sched.c2 >= 0.0)) return {false, "c2 must be nonnegative (weights must be defined for k >= 1)"};
  if (!(sched.alpha > 0.5))
    return {false, "alpha must exceed 0.5 (otherwise the squared weights are not summable)"};
  if (!(sched.alpha <= 1.0))
    return {false, "alpha must not exceed 1 (otherwise the weight sum converges and adaptation stalls)"};
  return {true, ""};
}

Eigen::MatrixXd sa_matrix_update(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& fresh,
                                 double omega) {
  if (prev.rows() != fresh.rows() || prev.cols() != fresh.cols())
    throw std::invalid_argument("sa_matrix_update: shape mismatch");
  if (!(omega > 0.0 && omega <= 1.0))
    throw std::invalid_argument("sa_matrix_update: omega must lie in (0, 1]");
  return (1.0 - omega) * prev + omega * fresh;
}

Eigen::VectorXd sa_product_update(const Eigen::VectorXd& prev, const Eigen::VectorXd& fresh,
                                  double omega) {
  if (!(omega > 0.0 && omega <= 1.0))
    throw std::invalid_argument("sa_product_update: omega must lie in (0, 1]");
  if (prev.size() == 0) return fresh;
  if (prev.size() != fresh.size())
    throw std::invalid_argument("sa_product_update: length mismatch");
  return (1.0 - omega) * prev + omega * fresh;
}

SaState make_sa_state(SaMode mode, Eigen::Index dim) {
  if (dim <= 0) throw std::invalid_argument("make_sa_state: dimension must be positive");
  SaState st;
  st.mode = mode;
  if (mode == SaMode::kDense) {
    st.G = Eigen::MatrixXd::Identity(dim, dim);
    st.S = Eigen::MatrixXd::Identity(dim, dim);
  }
  return st;
}

}  // namespace hasgld
