#include "hasgld/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace hasgld {

ActEstimate act(std::span<const double> series) {
  const Eigen::Index n = static_cast<Eigen::Index>(series.size());
  if (n < 10) throw std::invalid_argument("act: need at least 10 observations");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) throw std::invalid_argument("act: series is constant");

  const Eigen::Index cap = n / 4;
  ActEstimate out;
  double sum = 0.0;
  Eigen::Index t = 0;
  bool dropped = false;
  while (t < cap) {
    ++t;
    double ct = 0.0;
    for (Eigen::Index i = 0; i + t < n; ++i)
      ct += (series[i] - mean) * (series[i + t] - mean);
    ct /= static_cast<double>(n);
    const double rho = ct / c0;
    sum += rho;
    if (rho < 0.05) {
      dropped = true;
      break;
    }
  }
  out.tau = 1.0 + 2.0 * sum;
  out.truncation_lag = t;
  out.hit_cap = !dropped;
  return out;
}

double cov_error(const std::vector<Eigen::VectorXd>& samples, const Eigen::MatrixXd& sigma_true) {
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  if (n < 2) throw std::invalid_argument("cov_error: need at least 2 samples");
  const Eigen::Index d = sigma_true.rows();
  if (sigma_true.cols() != d) throw std::invalid_argument("cov_error: sigma_true must be square");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : samples) {
    if (x.size() != d) throw std::invalid_argument("cov_error: sample dimension mismatch");
    mean += x;
  }
  mean /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : samples) {
    const Eigen::VectorXd c = x - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(n - 1);
  return (cov - sigma_true).cwiseAbs().mean();
}

MseMae mse_mae(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0)
    throw std::invalid_argument("mse_mae: length mismatch or empty input");
  const Eigen::VectorXd diff = predicted - truth;
  return {diff.squaredNorm() / static_cast<double>(diff.size()),
          diff.cwiseAbs().mean()};
}

}  // namespace hasgld
