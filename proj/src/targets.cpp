#include "hasgld/targets.hpp"

#include "hasgld/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hasgld {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Eigen::Index batch_count(std::span<const Eigen::Index> batch, Eigen::Index n) {
  return batch.empty() ? n : static_cast<Eigen::Index>(batch.size());
}

template <typename F>
void for_batch(std::span<const Eigen::Index> batch, Eigen::Index n, F&& f) {
  if (batch.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) f(i);
  } else {
    for (Eigen::Index i : batch) {
      require(i >= 0 && i < n, "batch index out of range");
      f(i);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// bivariate Gaussian

Gaussian2dTarget::Gaussian2dTarget(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma)
    : mu_(mu), sigma_(sigma) {
  require(std::abs(sigma(0, 1) - sigma(1, 0)) <= 1e-12 * (1.0 + std::abs(sigma(0, 1))),
          "Gaussian2dTarget: covariance must be symmetric");
  const double det = sigma.determinant();
  require(sigma(0, 0) > 0.0 && det > 0.0, "Gaussian2dTarget: covariance must be positive definite");
  sigma_inv_ = sigma.inverse();
}

double Gaussian2dTarget::log_posterior(const Eigen::VectorXd& beta,
                                       std::span<const Eigen::Index>) const {
  require(beta.size() == 2, "Gaussian2dTarget: dimension mismatch");
  const Eigen::Vector2d c = beta.head<2>() - mu_;
  return -0.5 * c.dot(sigma_inv_ * c) - std::log(kTwoPi) -
         0.5 * std::log(sigma_.determinant());
}

Eigen::VectorXd Gaussian2dTarget::log_posterior_grad(const Eigen::VectorXd& beta,
                                                     std::span<const Eigen::Index>) const {
  require(beta.size() == 2, "Gaussian2dTarget: dimension mismatch");
  return -(sigma_inv_ * (beta.head<2>() - mu_));
}

Eigen::Vector2d gaussian2d_loggrad(const Eigen::Vector2d& beta, const Gaussian2dTarget& target) {
  return target.log_posterior_grad(beta, {});
}

Gaussian2dTarget make_gaussian2d(double sigma_x, double sigma_y, double correlation,
                                 const Eigen::Vector2d& mu) {
  require(sigma_x > 0.0 && sigma_y > 0.0, "make_gaussian2d: scales must be positive");
  require(correlation > -1.0 && correlation < 1.0,
          "make_gaussian2d: correlation must lie in (-1, 1)");
  Eigen::Matrix2d sigma;
  const double c = correlation * sigma_x * sigma_y;
  sigma << sigma_x * sigma_x, c, c, sigma_y * sigma_y;
  return {mu, sigma};
}

// ---------------------------------------------------------------------------
// sparse linear regression

RegressionDataset make_regression_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                       Eigen::Index n_test, double noise_var) {
  require(n >= 1 && p >= 2 && n_test >= 0, "make_regression_data: bad sizes");
  require(noise_var > 0.0, "make_regression_data: noise_var must be positive");
  Eigen::MatrixXd row_cov(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      row_cov(i, j) = std::pow(0.8, std::abs(static_cast<double>(i - j)) / 4.0);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(row_cov).matrixL();

  CounterRng rng(seed, /*stream=*/0xDA7Aull);
  const auto draw_rows = [&](Eigen::Index rows) {
    Eigen::MatrixXd out(rows, p);
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
      out.row(i) = (chol * z).transpose();
    }
    return out;
  };

  RegressionDataset data;
  data.seed = seed;
  data.noise_var = noise_var;
  data.beta_true = Eigen::VectorXd::Zero(p);
  data.beta_true(0) = 3.0;
  data.beta_true(1) = 1.0;
  data.X = draw_rows(n);
  data.X_test = draw_rows(n_test);
  const double noise_sd = std::sqrt(noise_var);
  data.y = data.X * data.beta_true;
  for (Eigen::Index i = 0; i < n; ++i) data.y(i) += noise_sd * rng.normal();
  data.y_test = data.X_test * data.beta_true;
  for (Eigen::Index i = 0; i < n_test; ++i) data.y_test(i) += noise_sd * rng.normal();
  return data;
}

SpikeSlabHyper make_spike_slab_hyper(Eigen::Index p) {
  require(p >= 1, "make_spike_slab_hyper: p must be positive");
  SpikeSlabHyper h;
  h.b = static_cast<double>(p);
  h.rho = Eigen::VectorXd::Constant(p, 0.5);
  return h;
}

double spike_slab_responsibility(double beta_j, double delta, double sigma2, double v0,
                                 double v1) {
  require(sigma2 > 0.0 && v0 > 0.0 && v1 > 0.0, "spike_slab_responsibility: bad scales");
  if (delta <= 0.0) return 0.0;
  if (delta >= 1.0) return 1.0;
  const double slab_var = sigma2 * v1;
  const double spike_scale = std::sqrt(sigma2) * v0;
  const double log_slab =
      std::log(delta) - 0.5 * std::log(kTwoPi * slab_var) - beta_j * beta_j / (2.0 * slab_var);
  const double log_spike =
      std::log1p(-delta) - std::log(2.0 * spike_scale) - std::abs(beta_j) / spike_scale;
  return 1.0 / (1.0 + std::exp(log_spike - log_slab));
}

double spike_slab_log_prior(const Eigen::VectorXd& beta, const SpikeSlabHyper& hyper) {
  require(beta.size() == hyper.rho.size(), "spike_slab_log_prior: dimension mismatch");
  const double slab_var = hyper.sigma2 * hyper.v1;
  const double spike_scale = std::sqrt(hyper.sigma2) * hyper.v0;
  const double log_norm_slab = -0.5 * std::log(kTwoPi * slab_var);
  const double log_norm_spike = -std::log(2.0 * spike_scale);
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double r = hyper.rho(j);
    total += r * (log_norm_slab - beta(j) * beta(j) / (2.0 * slab_var));
    total += (1.0 - r) * (log_norm_spike - std::abs(beta(j)) / spike_scale);
  }
  return total;
}

Eigen::VectorXd spike_slab_prior_grad(const Eigen::VectorXd& beta, const SpikeSlabHyper& hyper) {
  require(beta.size() == hyper.rho.size(), "spike_slab_prior_grad: dimension mismatch");
  const double slab_var = hyper.sigma2 * hyper.v1;
  const double spike_scale = std::sqrt(hyper.sigma2) * hyper.v0;
  Eigen::VectorXd grad(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double r = hyper.rho(j);
    const double sgn = beta(j) > 0.0 ? 1.0 : (beta(j) < 0.0 ? -1.0 : 0.0);
    grad(j) = -r * beta(j) / slab_var - (1.0 - r) * sgn / spike_scale;
  }
  return grad;
}

Eigen::VectorXd regression_likelihood_grad(const Eigen::VectorXd& beta,
                                           std::span<const Eigen::Index> batch,
                                           const RegressionDataset& data, double sigma2) {
  const Eigen::Index n = data.X.rows();
  require(beta.size() == data.X.cols(), "regression_likelihood_grad: dimension mismatch");
  require(sigma2 > 0.0, "regression_likelihood_grad: sigma2 must be positive");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(beta.size());
  for_batch(batch, n, [&](Eigen::Index i) {
    const double resid = data.y(i) - data.X.row(i).dot(beta);
    grad.noalias() += resid * data.X.row(i).transpose();
  });
  const double scale = static_cast<double>(n) / static_cast<double>(batch_count(batch, n));
  return grad * (scale / sigma2);
}

double regression_logpost(const Eigen::VectorXd& beta, std::span<const Eigen::Index> batch,
                          const RegressionDataset& data, const SpikeSlabHyper& hyper) {
  const Eigen::Index n = data.X.rows();
  require(beta.size() == data.X.cols(), "regression_logpost: dimension mismatch");
  double loglik = 0.0;
  const double log_norm = -0.5 * std::log(kTwoPi * hyper.sigma2);
  for_batch(batch, n, [&](Eigen::Index i) {
    const double resid = data.y(i) - data.X.row(i).dot(beta);
    loglik += log_norm - resid * resid / (2.0 * hyper.sigma2);
  });
  const double scale = static_cast<double>(n) / static_cast<double>(batch_count(batch, n));
  return scale * loglik + spike_slab_log_prior(beta, hyper);
}

Eigen::VectorXd regression_loggrad(const Eigen::VectorXd& beta,
                                   std::span<const Eigen::Index> batch,
                                   const RegressionDataset& data, const SpikeSlabHyper& hyper) {
  return regression_likelihood_grad(beta, batch, data, hyper.sigma2) +
         spike_slab_prior_grad(beta, hyper);
}

void hyper_sa_update(SpikeSlabHyper& hyper, const Eigen::VectorXd& beta,
                     std::span<const Eigen::Index> batch, const RegressionDataset& data,
                     double omega) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index p = beta.size();
  require(p == hyper.rho.size(), "hyper_sa_update: dimension mismatch");
  require(omega > 0.0 && omega <= 1.0, "hyper_sa_update: omega must lie in (0, 1]");

  Eigen::VectorXd rho_star(p);
  for (Eigen::Index j = 0; j < p; ++j)
    rho_star(j) =
        spike_slab_responsibility(beta(j), hyper.delta, hyper.sigma2, hyper.v0, hyper.v1);

  double delta_star = (hyper.a - 1.0 + rho_star.sum()) /
                      (hyper.a + hyper.b - 2.0 + static_cast<double>(p));
  delta_star = std::min(std::max(delta_star, 1e-6), 1.0 - 1e-6);

  double rss = 0.0;
  for_batch(batch, n, [&](Eigen::Index i) {
    const double resid = data.y(i) - data.X.row(i).dot(beta);
    rss += resid * resid;
  });
  const double scale = static_cast<double>(n) / static_cast<double>(batch_count(batch, n));
  const double sigma2_star =
      (hyper.nu * hyper.lambda + scale * rss) / (hyper.nu + static_cast<double>(n) + 2.0);

  hyper.rho = (1.0 - omega) * hyper.rho + omega * rho_star;
  hyper.delta = (1.0 - omega) * hyper.delta + omega * delta_star;
  hyper.sigma2 = (1.0 - omega) * hyper.sigma2 + omega * sigma2_star;
}

SpikeSlabRegressionTarget::SpikeSlabRegressionTarget(std::shared_ptr<const RegressionDataset> data,
                                                     SpikeSlabHyper hyper)
    : data_(std::move(data)), hyper_(std::move(hyper)) {
  require(data_ != nullptr, "SpikeSlabRegressionTarget: null dataset");
  require(hyper_.rho.size() == data_->X.cols(), "SpikeSlabRegressionTarget: hyper size mismatch");
}

double SpikeSlabRegressionTarget::log_posterior(const Eigen::VectorXd& beta,
                                                std::span<const Eigen::Index> batch) const {
  return regression_logpost(beta, batch, *data_, hyper_);
}

Eigen::VectorXd SpikeSlabRegressionTarget::log_posterior_grad(
    const Eigen::VectorXd& beta, std::span<const Eigen::Index> batch) const {
  return regression_loggrad(beta, batch, *data_, hyper_);
}

void SpikeSlabRegressionTarget::adapt_hyper(const Eigen::VectorXd& beta,
                                            std::span<const Eigen::Index> batch, double omega) {
  hyper_sa_update(hyper_, beta, batch, *data_, omega);
}

// ---------------------------------------------------------------------------
// small dense network regression

MlpDataset make_mlp_data(Eigen::Index n_train, Eigen::Index n_test, double noise_sd,
                         std::uint64_t seed) {
  require(n_train >= 1 && n_test >= 0, "make_mlp_data: bad sizes");
  require(noise_sd >= 0.0, "make_mlp_data: noise_sd must be nonnegative");
  CounterRng rng(seed, /*stream=*/0x317Aull);
  const auto fill = [&](Eigen::Index rows, Eigen::MatrixXd& X, Eigen::MatrixXd& Y) {
    X.resize(rows, 2);
    Y.resize(rows, 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x1 = 2.0 * rng.uniform() - 1.0;
      const double x2 = 2.0 * rng.uniform() - 1.0;
      X(i, 0) = x1;
      X(i, 1) = x2;
      Y(i, 0) = std::sin(std::numbers::pi * x1) + x1 * x2 + noise_sd * rng.normal();
    }
  };
  MlpDataset data;
  data.seed = seed;
  fill(n_train, data.X, data.Y);
  fill(n_test, data.X_test, data.Y_test);
  return data;
}

namespace {

void check_widths(const std::vector<int>& widths) {
  require(widths.size() >= 2, "mlp: need at least input and output widths");
  for (int w : widths) require(w >= 1, "mlp: widths must be positive");
}

}  // namespace

Eigen::Index mlp_param_count(const std::vector<int>& widths) {
  check_widths(widths);
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    count += static_cast<Eigen::Index>(widths[l + 1]) * widths[l] + widths[l + 1];
  return count;
}

namespace {

// layer views into the flat parameter vector: W (out x in, column-major), b
struct LayerView {
  Eigen::Map<const Eigen::MatrixXd> W;
  Eigen::Map<const Eigen::VectorXd> b;
};

LayerView layer_view(const std::vector<int>& widths, const Eigen::VectorXd& params,
                     std::size_t l, Eigen::Index offset) {
  const Eigen::Index rows = widths[l + 1];
  const Eigen::Index cols = widths[l];
  return {Eigen::Map<const Eigen::MatrixXd>(params.data() + offset, rows, cols),
          Eigen::Map<const Eigen::VectorXd>(params.data() + offset + rows * cols, rows)};
}

}  // namespace

Eigen::VectorXd mlp_forward(const std::vector<int>& widths, const Eigen::VectorXd& params,
                            const Eigen::VectorXd& x) {
  check_widths(widths);
  require(params.size() == mlp_param_count(widths), "mlp_forward: parameter size mismatch");
  require(x.size() == widths.front(), "mlp_forward: input size mismatch");
  Eigen::VectorXd h = x;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const LayerView view = layer_view(widths, params, l, offset);
    offset += view.W.size() + view.b.size();
    Eigen::VectorXd z = view.W * h + view.b;
    if (l + 2 < widths.size()) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

double mlp_logpost(const std::vector<int>& widths, const Eigen::VectorXd& params,
                   std::span<const Eigen::Index> batch, const MlpDataset& data, double noise_var,
                   double prior_precision) {
  check_widths(widths);
  require(noise_var > 0.0 && prior_precision > 0.0, "mlp_logpost: bad scales");
  const Eigen::Index n = data.X.rows();
  const Eigen::Index out = data.Y.cols();
  require(widths.front() == data.X.cols() && widths.back() == out,
          "mlp_logpost: dataset shape mismatch");
  const double log_norm = -0.5 * std::log(kTwoPi * noise_var);
  double loglik = 0.0;
  for_batch(batch, n, [&](Eigen::Index i) {
    const Eigen::VectorXd f = mlp_forward(widths, params, data.X.row(i).transpose());
    const Eigen::VectorXd resid = data.Y.row(i).transpose() - f;
    loglik += static_cast<double>(out) * log_norm - resid.squaredNorm() / (2.0 * noise_var);
  });
  const double scale = static_cast<double>(n) / static_cast<double>(batch_count(batch, n));
  const double d = static_cast<double>(params.size());
  const double log_prior = 0.5 * d * std::log(prior_precision / kTwoPi) -
                           0.5 * prior_precision * params.squaredNorm();
  return scale * loglik + log_prior;
}

Eigen::VectorXd mlp_loggrad(const std::vector<int>& widths, const Eigen::VectorXd& params,
                            std::span<const Eigen::Index> batch, const MlpDataset& data,
                            double noise_var, double prior_precision) {
  check_widths(widths);
  require(params.size() == mlp_param_count(widths), "mlp_loggrad: parameter size mismatch");
  require(noise_var > 0.0 && prior_precision > 0.0, "mlp_loggrad: bad scales");
  const Eigen::Index n = data.X.rows();
  require(widths.front() == data.X.cols() && widths.back() == data.Y.cols(),
          "mlp_loggrad: dataset shape mismatch");

  const std::size_t layers = widths.size() - 1;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  std::vector<Eigen::VectorXd> act(layers + 1);
  std::vector<Eigen::Index> offsets(layers);
  {
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      offsets[l] = offset;
      offset += static_cast<Eigen::Index>(widths[l + 1]) * widths[l] + widths[l + 1];
    }
  }

  for_batch(batch, n, [&](Eigen::Index i) {
    act[0] = data.X.row(i).transpose();
    for (std::size_t l = 0; l < layers; ++l) {
      const LayerView view = layer_view(widths, params, l, offsets[l]);
      Eigen::VectorXd z = view.W * act[l] + view.b;
      if (l + 1 < layers) z = z.array().tanh();
      act[l + 1] = std::move(z);
    }
    // delta = d loglik_i / d z_l, starting from the linear output layer
    Eigen::VectorXd delta = data.Y.row(i).transpose() - act[layers];
    for (std::size_t l = layers; l-- > 0;) {
      const LayerView view = layer_view(widths, params, l, offsets[l]);
      const Eigen::Index rows = widths[l + 1];
      const Eigen::Index cols = widths[l];
      Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets[l], rows, cols);
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[l] + rows * cols, rows);
      gW.noalias() += delta * act[l].transpose();
      gb.noalias() += delta;
      if (l > 0)
        delta = (view.W.transpose() * delta).cwiseProduct(
            (1.0 - act[l].array().square()).matrix());
    }
  });

  const double scale = static_cast<double>(n) / static_cast<double>(batch_count(batch, n));
  return grad * (scale / noise_var) - prior_precision * params;
}

MlpTarget::MlpTarget(std::vector<int> widths, std::shared_ptr<const MlpDataset> data,
                     double noise_var, double prior_precision)
    : widths_(std::move(widths)),
      data_(std::move(data)),
      noise_var_(noise_var),
      prior_precision_(prior_precision) {
  check_widths(widths_);
  require(data_ != nullptr, "MlpTarget: null dataset");
  require(widths_.front() == data_->X.cols() && widths_.back() == data_->Y.cols(),
          "MlpTarget: dataset shape mismatch");
  require(noise_var > 0.0 && prior_precision > 0.0, "MlpTarget: bad scales");
}

double MlpTarget::log_posterior(const Eigen::VectorXd& beta,
                                std::span<const Eigen::Index> batch) const {
  return mlp_logpost(widths_, beta, batch, *data_, noise_var_, prior_precision_);
}

Eigen::VectorXd MlpTarget::log_posterior_grad(const Eigen::VectorXd& beta,
                                              std::span<const Eigen::Index> batch) const {
  return mlp_loggrad(widths_, beta, batch, *data_, noise_var_, prior_precision_);
}

}  // namespace hasgld
