#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace hasgld {

// Integrated autocorrelation time estimate for one scalar series:
// tau = 1 + 2 * sum_{t=1..T*} rho_t, where T* is the first lag with
// rho_t < 0.05 or T/4, whichever is smaller.
struct ActEstimate {
  double tau = 1.0;
  Eigen::Index truncation_lag = 0;
  bool hit_cap = false;  // true when no lag dropped below the 0.05 cutoff
};

// Requires at least 10 observations and a nonconstant series.
ActEstimate act(std::span<const double> series);

// Mean absolute entrywise gap between the unbiased sample covariance of the
// rows in `samples` and `sigma_true`, averaged over all d^2 entries.
// Requires at least two samples and matching dimensions.
double cov_error(const std::vector<Eigen::VectorXd>& samples, const Eigen::MatrixXd& sigma_true);

struct MseMae {
  double mse = 0.0;
  double mae = 0.0;
};

// Mean squared and mean absolute error between two equally sized vectors.
MseMae mse_mae(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

// Named metric values plus estimator metadata (which estimator produced a
// number, truncation lags, sample counts).
struct MetricReport {
  std::map<std::string, double> values;
  std::map<std::string, std::string> metadata;
};

}  // namespace hasgld
