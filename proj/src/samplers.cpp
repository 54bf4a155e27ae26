#include "hasgld/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hasgld {

namespace {

constexpr std::uint64_t kChainStream = 1;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::vector<Eigen::Index> sample_batch(CounterRng& rng, Eigen::Index n, std::int64_t batch_size) {
  if (batch_size <= 0 || batch_size >= n) return {};  // full data
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  // partial Fisher-Yates: the first batch_size entries are a uniform subset
  for (std::int64_t i = 0; i < batch_size; ++i) {
    const auto j = static_cast<Eigen::Index>(
        i + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n - i))));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(batch_size));
  return pool;
}

void mask_zero(Eigen::VectorXd& v, const PruningMask& mask) {
  if (mask.active.size() == 0) return;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (!mask.active(j)) v(j) = 0.0;
}

Eigen::VectorXd draw_normals(CounterRng& rng, Eigen::Index d) {
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
  return z;
}

// smoothing weight for step k (1-based): schedule value at k + 1, clamped
// into (0, 1] so the blend stays convex even for aggressive schedules
double smoothing_weight(const OmegaSchedule& sched, std::int64_t k) {
  return std::min(omega(sched, k + 1), 1.0);
}

// scheduled pruning plus re-masking; returns false only on schedule misuse
void fire_prune_events(ChainState& state, const SamplerConfig& cfg) {
  for (const PruneEvent& ev : cfg.pruning) {
    if (ev.iteration != state.k) continue;
    state.mask = magnitude_prune(state.beta, state.mask, ev.rate);
  }
  Eigen::VectorXd& beta = state.beta;
  mask_zero(beta, state.mask);
}

}  // namespace

double StepSizeSchedule::at(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("StepSizeSchedule: step index must be >= 1");
  if (decay_alpha == 0.0) return eps0;
  return eps0 * std::pow(static_cast<double>(k) + decay_c2, -decay_alpha);
}

void SamplerConfig::validate() const {
  require(step.eps0 > 0.0, "config: step size must be positive");
  require(step.decay_alpha >= 0.0, "config: step decay exponent must be nonnegative");
  require(step.decay_c2 >= 0.0, "config: step decay offset must be nonnegative");
  require(temperature > 0.0, "config: temperature must be positive");
  require(iterations >= 1, "config: iterations must be positive");
  require(burn_in >= 0 && burn_in < iterations, "config: burn_in must lie in [0, iterations)");
  require(thin >= 1, "config: thin must be positive");
  require(batch_size >= 0, "config: batch_size must be nonnegative");
  require(memory_capacity >= 1, "config: memory capacity must be at least 1");
  require(damping_r > 0.0 && damping_r < 1.0, "config: damping r must lie in (0, 1)");
  require(delta_floor > 0.0, "config: delta floor must be positive");
  const ScheduleCheck check = validate_schedule(omega);
  require(check.ok, "config: omega schedule invalid: " + check.message);
  std::int64_t prev_iter = 0;
  double prev_rate = 0.0;
  for (const PruneEvent& ev : pruning) {
    require(ev.iteration >= 1 && ev.iteration <= iterations,
            "config: prune iteration out of range");
    require(ev.iteration > prev_iter, "config: prune iterations must be strictly increasing");
    require(ev.rate >= 0.0 && ev.rate < 1.0, "config: prune rate must lie in [0, 1)");
    require(ev.rate >= prev_rate, "config: prune rates must be nondecreasing");
    prev_iter = ev.iteration;
    prev_rate = ev.rate;
  }
}

Eigen::Index PruningMask::inactive_count() const {
  return active.size() - active.count();
}

double PruningMask::sparsity() const {
  if (active.size() == 0) return 0.0;
  return static_cast<double>(inactive_count()) / static_cast<double>(active.size());
}

Eigen::VectorXd sgld_step(const Eigen::VectorXd& beta, const Eigen::VectorXd& grad, double eps,
                          double tau, const Eigen::VectorXd& noise) {
  require(beta.size() == grad.size() && beta.size() == noise.size(),
          "sgld_step: dimension mismatch");
  require(eps > 0.0 && tau > 0.0, "sgld_step: eps and tau must be positive");
  require(beta.allFinite() && grad.allFinite() && noise.allFinite(),
          "sgld_step: nonfinite input");
  return beta + eps * grad + std::sqrt(2.0 * eps / tau) * noise;
}

Eigen::VectorXd normalize_direction(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (n < 1e-300) return Eigen::VectorXd::Zero(v.size());
  return v / n;
}

PruningMask magnitude_prune(const Eigen::VectorXd& beta, const PruningMask& mask,
                            double target_rate) {
  const Eigen::Index d = beta.size();
  require(mask.active.size() == d, "magnitude_prune: mask size mismatch");
  require(target_rate >= 0.0 && target_rate < 1.0, "magnitude_prune: rate must lie in [0, 1)");
  const Eigen::Index current = mask.inactive_count();
  const auto target =
      static_cast<Eigen::Index>(std::llround(target_rate * static_cast<double>(d)));
  require(target >= current, "magnitude_prune: target rate below current sparsity");
  if (target == current) return mask;

  std::vector<Eigen::Index> candidates;
  candidates.reserve(static_cast<std::size_t>(d - current));
  for (Eigen::Index j = 0; j < d; ++j)
    if (mask.active(j)) candidates.push_back(j);
  std::sort(candidates.begin(), candidates.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(beta(a));
    const double mb = std::abs(beta(b));
    if (ma != mb) return ma < mb;
    return a < b;
  });

  PruningMask out = mask;
  for (Eigen::Index i = 0; i < target - current; ++i)
    out.active(candidates[static_cast<std::size_t>(i)]) = false;
  return out;
}

ChainState make_chain_state(const SamplerConfig& cfg, const Eigen::VectorXd& init) {
  require(init.size() > 0, "make_chain_state: init must be nonempty");
  ChainState state;
  state.beta = init;
  state.memory = LbfgsMemory(cfg.memory_capacity, cfg.delta_floor);
  state.sa = make_sa_state(cfg.sa_mode, init.size());
  state.mask = PruningMask(init.size());
  return state;
}

bool sgld_chain_step(ChainState& state, LogPosteriorTarget& target, const SamplerConfig& cfg,
                     CounterRng& rng, StepRecord* record) {
  const std::int64_t k = state.k + 1;
  const double eps = cfg.step.at(k);
  const double w = smoothing_weight(cfg.omega, k);
  const std::vector<Eigen::Index> batch = sample_batch(rng, target.data_count(), cfg.batch_size);

  Eigen::VectorXd grad = target.log_posterior_grad(state.beta, batch);
  mask_zero(grad, state.mask);
  const Eigen::VectorXd z = draw_normals(rng, state.beta.size());
  if (record) *record = {k, eps, w, grad.norm(), true};
  if (!grad.allFinite()) {
    state.diverged = true;
    if (record) record->ok = false;
    return false;
  }

  Eigen::VectorXd update = eps * grad + std::sqrt(2.0 * eps / cfg.temperature) * z;
  mask_zero(update, state.mask);
  state.beta += update;
  state.k = k;
  if (!state.beta.allFinite()) {
    state.diverged = true;
    if (record) record->ok = false;
    return false;
  }
  fire_prune_events(state, cfg);
  target.adapt_hyper(state.beta, batch, w);
  return true;
}

bool hasgld_sa_step(ChainState& state, LogPosteriorTarget& target, const SamplerConfig& cfg,
                    CounterRng& rng, StepRecord* record) {
  const std::int64_t k = state.k + 1;
  const double eps = cfg.step.at(k);
  const double w = smoothing_weight(cfg.omega, k);
  const std::vector<Eigen::Index> batch = sample_batch(rng, target.data_count(), cfg.batch_size);

  Eigen::VectorXd grad = target.log_posterior_grad(state.beta, batch);
  mask_zero(grad, state.mask);
  const Eigen::VectorXd z = draw_normals(rng, state.beta.size());
  if (record) *record = {k, eps, w, grad.norm(), true};
  if (!grad.allFinite()) {
    state.diverged = true;
    if (record) record->ok = false;
    return false;
  }

  Eigen::VectorXd xi;
  Eigen::VectorXd eta;
  if (cfg.fix_identity_precond) {
    xi = grad;
    eta = z;
  } else if (cfg.sa_mode == SaMode::kDense) {
    const DensePrecond fresh = dense_build(state.memory, state.beta.size());
    state.sa.G = sa_matrix_update(state.sa.G, fresh.G, w);
    state.sa.S = sa_matrix_update(state.sa.S, fresh.S, w);
    xi = state.sa.G * grad;
    eta = state.sa.S * z;
  } else {
    state.sa.smoothed_Gg = sa_product_update(state.sa.smoothed_Gg, apply_Gg(state.memory, grad), w);
    state.sa.smoothed_Sz = sa_product_update(state.sa.smoothed_Sz, apply_Sz(state.memory, z), w);
    xi = state.sa.smoothed_Gg;
    eta = state.sa.smoothed_Sz;
  }
  if (cfg.normalize_directions) {
    xi = normalize_direction(xi);
    eta = normalize_direction(eta);
  }

  Eigen::VectorXd update = eps * xi + std::sqrt(2.0 * eps / cfg.temperature) * eta;
  mask_zero(update, state.mask);
  const Eigen::VectorXd beta_next = state.beta + update;
  if (!beta_next.allFinite()) {
    state.diverged = true;
    if (record) record->ok = false;
    return false;
  }

  // Curvature pair on the same batch. The recursions approximate the Hessian
  // of the negative log posterior, so the gradient increment is negated.
  if (!cfg.fix_identity_precond &&
      update.norm() >= 1e-12 * (1.0 + state.beta.norm())) {
    Eigen::VectorXd grad_next = target.log_posterior_grad(beta_next, batch);
    mask_zero(grad_next, state.mask);
    if (grad_next.allFinite()) {
      RawPair raw{update, grad - grad_next};
      state.memory.push(build_curvature_pair(raw, cfg.damping_r, cfg.delta_floor));
    }
  }

  state.beta = beta_next;
  state.k = k;
  fire_prune_events(state, cfg);
  target.adapt_hyper(state.beta, batch, w);
  return true;
}

Trace run_chain(const SamplerConfig& cfg, LogPosteriorTarget& target, const Eigen::VectorXd& init,
                const StepObserver& observer) {
  cfg.validate();
  const Eigen::Index d = target.dim();
  require(init.size() == 0 || init.size() == d, "run_chain: init dimension mismatch");
  ChainState state =
      make_chain_state(cfg, init.size() == d ? init : Eigen::VectorXd::Zero(d).eval());
  CounterRng rng(cfg.seed, kChainStream);

  Trace trace;
  trace.seed = cfg.seed;
  trace.steps.reserve(static_cast<std::size_t>(cfg.iterations));
  Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(d);
  std::int64_t mean_count = 0;

  for (std::int64_t k = 1; k <= cfg.iterations; ++k) {
    StepRecord record;
    const bool ok = cfg.kind == SamplerKind::kSgld
                        ? sgld_chain_step(state, target, cfg, rng, &record)
                        : hasgld_sa_step(state, target, cfg, rng, &record);
    trace.steps.push_back(record);
    if (!ok) {
      trace.diverged = true;
      trace.diverged_at = k;
      break;
    }
    if (k > cfg.burn_in) {
      mean_sum += state.beta;
      ++mean_count;
      if ((k - cfg.burn_in) % cfg.thin == 0) {
        trace.samples.push_back(state.beta);
        trace.sample_steps.push_back(k);
      }
    }
    if (state.mask.inactive_count() > 0) {
      double worst = 0.0;
      for (Eigen::Index j = 0; j < d; ++j)
        if (!state.mask.active(j)) worst = std::max(worst, std::abs(state.beta(j)));
      trace.max_abs_pruned = std::max(trace.max_abs_pruned, worst);
    }
    if (observer)
      observer(k, state.beta, mean_count > 0 ? (mean_sum / mean_count).eval() : state.beta);
  }

  trace.posterior_mean = mean_count > 0 ? (mean_sum / mean_count).eval() : state.beta;
  trace.posterior_mean_count = mean_count;
  trace.final_sparsity = state.mask.sparsity();
  return trace;
}

}  // namespace hasgld
