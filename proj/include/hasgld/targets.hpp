#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace hasgld {

// Posterior a sampler can drive: log-density gradients (ascent direction) on
// a minibatch of data indices, with an optional stochastic-approximation
// refresh of prior hyperparameters. An empty batch means the full data set.
// Dataset contents are immutable after construction; hyperparameter state is
// per-instance, so chains must not share a target instance.
class LogPosteriorTarget {
public:
  virtual ~LogPosteriorTarget() = default;

  virtual Eigen::Index dim() const = 0;

  // number of data items N (1 for purely analytic targets)
  virtual Eigen::Index data_count() const { return 1; }

  virtual double log_posterior(const Eigen::VectorXd& beta,
                               std::span<const Eigen::Index> batch) const = 0;

  virtual Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& beta,
                                             std::span<const Eigen::Index> batch) const = 0;

  // One hyperparameter refresh with weight omega; default is a no-op.
  virtual void adapt_hyper(const Eigen::VectorXd& /*beta*/,
                           std::span<const Eigen::Index> /*batch*/, double /*omega*/) {}
};

// ---------------------------------------------------------------------------
// bivariate Gaussian

class Gaussian2dTarget final : public LogPosteriorTarget {
public:
  // sigma must be symmetric positive definite
  Gaussian2dTarget(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma);

  Eigen::Index dim() const override { return 2; }
  double log_posterior(const Eigen::VectorXd& beta,
                       std::span<const Eigen::Index> batch) const override;
  Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& beta,
                                     std::span<const Eigen::Index> batch) const override;

  const Eigen::Vector2d& mu() const { return mu_; }
  const Eigen::Matrix2d& covariance() const { return sigma_; }

private:
  Eigen::Vector2d mu_;
  Eigen::Matrix2d sigma_;
  Eigen::Matrix2d sigma_inv_;
};

// -Sigma^{-1} (beta - mu)
Eigen::Vector2d gaussian2d_loggrad(const Eigen::Vector2d& beta, const Gaussian2dTarget& target);

// Covariance [[sx^2, c*sx*sy], [c*sx*sy, sy^2]] with correlation c.
Gaussian2dTarget make_gaussian2d(double sigma_x, double sigma_y, double correlation,
                                 const Eigen::Vector2d& mu = Eigen::Vector2d::Zero());

// ---------------------------------------------------------------------------
// sparse linear regression with a spike-and-slab prior

struct RegressionDataset {
  Eigen::MatrixXd X;       // n x p design
  Eigen::VectorXd y;       // n responses
  Eigen::MatrixXd X_test;  // held-out design
  Eigen::VectorXd y_test;  // held-out responses
  Eigen::VectorXd beta_true;
  double noise_var = 3.0;
  std::uint64_t seed = 0;
};

// Rows of X are drawn from N(0, C) with C_ij = 0.8^(|i-j|/4); the response is
// y = X beta_true + N(0, noise_var I) with beta_true = (3, 1, 0, ..., 0).
RegressionDataset make_regression_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                       Eigen::Index n_test = 50, double noise_var = 3.0);

// Prior hyperparameter state for the Gaussian-slab / Laplace-spike mixture.
// The slab is N(0, sigma2 * v1), the spike is Laplace with scale sigma * v0,
// delta is the slab weight and rho the per-coordinate slab responsibility.
struct SpikeSlabHyper {
  double v0 = 0.1;
  double v1 = 100.0;
  double nu = 1.0;      // pseudo-observations behind the sigma2 estimate
  double lambda = 1.0;  // pseudo-scale behind the sigma2 estimate
  double a = 1.0;       // slab pseudo-count for delta
  double b = 1.0;       // spike pseudo-count for delta (usually p)
  double delta = 0.5;
  double sigma2 = 1.0;
  Eigen::VectorXd rho;  // entries in [0, 1]
};

SpikeSlabHyper make_spike_slab_hyper(Eigen::Index p);

// Probability that beta_j belongs to the slab, computed in log space so that
// extreme density ratios cannot overflow.
double spike_slab_responsibility(double beta_j, double delta, double sigma2, double v0, double v1);

// Responsibility-weighted log prior and its gradient (responsibilities are
// held fixed; the Laplace subgradient at zero is taken to be zero).
double spike_slab_log_prior(const Eigen::VectorXd& beta, const SpikeSlabHyper& hyper);
Eigen::VectorXd spike_slab_prior_grad(const Eigen::VectorXd& beta, const SpikeSlabHyper& hyper);

// Minibatch-scaled Gaussian likelihood gradient: (N / |batch|) * sum over the
// batch of x_i (y_i - x_i^T beta) / sigma2.
Eigen::VectorXd regression_likelihood_grad(const Eigen::VectorXd& beta,
                                           std::span<const Eigen::Index> batch,
                                           const RegressionDataset& data, double sigma2);

double regression_logpost(const Eigen::VectorXd& beta, std::span<const Eigen::Index> batch,
                          const RegressionDataset& data, const SpikeSlabHyper& hyper);
Eigen::VectorXd regression_loggrad(const Eigen::VectorXd& beta,
                                   std::span<const Eigen::Index> batch,
                                   const RegressionDataset& data, const SpikeSlabHyper& hyper);

// One stochastic-approximation refresh: responsibilities, then the slab
// weight (posterior mode of a Beta, clamped to [1e-6, 1 - 1e-6]) and the
// noise variance (posterior mode of an inverse gamma with minibatch-scaled
// residuals); every hyperparameter is blended as h <- (1-omega) h + omega h*.
void hyper_sa_update(SpikeSlabHyper& hyper, const Eigen::VectorXd& beta,
                     std::span<const Eigen::Index> batch, const RegressionDataset& data,
                     double omega);

class SpikeSlabRegressionTarget final : public LogPosteriorTarget {
public:
  SpikeSlabRegressionTarget(std::shared_ptr<const RegressionDataset> data, SpikeSlabHyper hyper);

  Eigen::Index dim() const override { return data_->X.cols(); }
  Eigen::Index data_count() const override { return data_->X.rows(); }
  double log_posterior(const Eigen::VectorXd& beta,
                       std::span<const Eigen::Index> batch) const override;
  Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& beta,
                                     std::span<const Eigen::Index> batch) const override;
  void adapt_hyper(const Eigen::VectorXd& beta, std::span<const Eigen::Index> batch,
                   double omega) override;

  const SpikeSlabHyper& hyper() const { return hyper_; }
  const RegressionDataset& data() const { return *data_; }

private:
  std::shared_ptr<const RegressionDataset> data_;
  SpikeSlabHyper hyper_;
};

// ---------------------------------------------------------------------------
// small dense network regression

struct MlpDataset {
  Eigen::MatrixXd X;       // n x in
  Eigen::MatrixXd Y;       // n x out
  Eigen::MatrixXd X_test;
  Eigen::MatrixXd Y_test;
  std::uint64_t seed = 0;
};

// Inputs uniform on [-1, 1]^2, response sin(pi x1) + x1 x2 plus Gaussian
// noise with standard deviation noise_sd.
MlpDataset make_mlp_data(Eigen::Index n_train, Eigen::Index n_test, double noise_sd,
                         std::uint64_t seed);

// Parameter count of a dense tanh network with the given layer widths
// (weights plus biases, hidden activations tanh, linear output).
Eigen::Index mlp_param_count(const std::vector<int>& widths);

// Forward pass; params holds [W1, b1, W2, b2, ...] with each W stored
// column-major.
Eigen::VectorXd mlp_forward(const std::vector<int>& widths, const Eigen::VectorXd& params,
                            const Eigen::VectorXd& x);

double mlp_logpost(const std::vector<int>& widths, const Eigen::VectorXd& params,
                   std::span<const Eigen::Index> batch, const MlpDataset& data, double noise_var,
                   double prior_precision);

// Minibatch-scaled Gaussian-likelihood gradient by backpropagation plus the
// isotropic Gaussian prior term -prior_precision * params.
Eigen::VectorXd mlp_loggrad(const std::vector<int>& widths, const Eigen::VectorXd& params,
                            std::span<const Eigen::Index> batch, const MlpDataset& data,
                            double noise_var, double prior_precision);

class MlpTarget final : public LogPosteriorTarget {
public:
  MlpTarget(std::vector<int> widths, std::shared_ptr<const MlpDataset> data, double noise_var,
            double prior_precision);

  Eigen::Index dim() const override { return mlp_param_count(widths_); }
  Eigen::Index data_count() const override { return data_->X.rows(); }
  double log_posterior(const Eigen::VectorXd& beta,
                       std::span<const Eigen::Index> batch) const override;
  Eigen::VectorXd log_posterior_grad(const Eigen::VectorXd& beta,
                                     std::span<const Eigen::Index> batch) const override;

  const std::vector<int>& widths() const { return widths_; }
  const MlpDataset& data() const { return *data_; }
  double noise_var() const { return noise_var_; }

private:
  std::vector<int> widths_;
  std::shared_ptr<const MlpDataset> data_;
  double noise_var_;
  double prior_precision_;
};

}  // namespace hasgld
