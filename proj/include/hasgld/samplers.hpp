#pragma once

#include "hasgld/lbfgs.hpp"
#include "hasgld/rng.hpp"
#include "hasgld/sa.hpp"
#include "hasgld/targets.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace hasgld {

enum class SamplerKind { kSgld, kHasgldSa };

// Step size for step k (1-based): constant eps0 when decay_alpha == 0,
// otherwise eps0 * (k + decay_c2)^(-decay_alpha).
struct StepSizeSchedule {
  double eps0 = 0.01;
  double decay_alpha = 0.0;
  double decay_c2 = 0.0;

  double at(std::int64_t k) const;
};

struct PruneEvent {
  std::int64_t iteration = 0;  // step at which the target rate takes effect
  double rate = 0.0;           // inactive fraction to reach, in [0, 1)
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kHasgldSa;
  StepSizeSchedule step;
  double temperature = 1.0;
  std::int64_t iterations = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::int64_t batch_size = 0;  // 0 means the full data set
  std::uint64_t seed = 0;

  int memory_capacity = 5;
  double damping_r = 0.25;
  double delta_floor = 0.1;
  OmegaSchedule omega;
  bool normalize_directions = true;
  SaMode sa_mode = SaMode::kDense;
  // Debug switch: pins the preconditioner to the identity so the adaptive
  // sampler reduces exactly to SGLD (curvature collection is skipped).
  bool fix_identity_precond = false;

  std::vector<PruneEvent> pruning;  // strictly increasing iterations, nondecreasing rates

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

// Coordinate liveness for magnitude pruning. Once a coordinate goes inactive
// it never comes back, and the chain holds it at exactly zero.
struct PruningMask {
  Eigen::Array<bool, Eigen::Dynamic, 1> active;

  PruningMask() = default;
  explicit PruningMask(Eigen::Index d)
      : active(Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(d, true)) {}

  Eigen::Index inactive_count() const;
  double sparsity() const;  // inactive fraction
};

// One overdamped Langevin update with preset Gaussian noise:
// beta + eps * grad + sqrt(2 eps / tau) * noise. grad is the stochastic
// log-posterior gradient (ascent direction). Throws on nonfinite inputs.
Eigen::VectorXd sgld_step(const Eigen::VectorXd& beta, const Eigen::VectorXd& grad, double eps,
                          double tau, const Eigen::VectorXd& noise);

// v / |v|, or the zero vector when |v| < 1e-300.
Eigen::VectorXd normalize_direction(const Eigen::VectorXd& v);

// Deactivates the smallest-magnitude active coordinates (ties broken by
// lowest index) until round(target_rate * d) coordinates are inactive.
// Reaching the current count is a no-op; asking for fewer inactive
// coordinates than already exist throws.
PruningMask magnitude_prune(const Eigen::VectorXd& beta, const PruningMask& mask,
                            double target_rate);

struct StepRecord {
  std::int64_t k = 0;
  double eps = 0.0;
  double omega = 0.0;
  double grad_norm = 0.0;
  bool ok = true;
};

// Everything one chain produces. Samples are the post-burn-in states, thinned
// by cfg.thin; the posterior mean runs over every post-burn-in state.
struct Trace {
  std::vector<Eigen::VectorXd> samples;
  std::vector<std::int64_t> sample_steps;
  std::vector<StepRecord> steps;
  Eigen::VectorXd posterior_mean;
  std::int64_t posterior_mean_count = 0;
  bool diverged = false;
  std::int64_t diverged_at = -1;
  double final_sparsity = 0.0;
  double max_abs_pruned = 0.0;  // largest |beta_j| ever observed on an inactive coordinate
  std::uint64_t seed = 0;
};

// Mutable per-chain state; step functions advance it by one iteration.
struct ChainState {
  Eigen::VectorXd beta;
  std::int64_t k = 0;  // completed steps
  LbfgsMemory memory{1, 1.0};
  SaState sa;
  PruningMask mask;
  bool diverged = false;
};

ChainState make_chain_state(const SamplerConfig& cfg, const Eigen::VectorXd& init);

// One SGLD iteration: minibatch, masked gradient, Langevin update, mask
// application, scheduled pruning, hyperparameter refresh. Returns false and
// flags the state when the update goes nonfinite.
bool sgld_chain_step(ChainState& state, LogPosteriorTarget& target, const SamplerConfig& cfg,
                     CounterRng& rng, StepRecord* record = nullptr);

// One adaptive iteration: minibatch, masked gradient, preconditioned drift
// and noise directions smoothed by the omega schedule, optional direction
// normalization, masked update, curvature-pair collection on the same batch
// (gradient increments of the negative log posterior), mask application,
// scheduled pruning, hyperparameter refresh. Returns false on divergence.
bool hasgld_sa_step(ChainState& state, LogPosteriorTarget& target, const SamplerConfig& cfg,
                    CounterRng& rng, StepRecord* record = nullptr);

// Called after every completed step with the current state and the running
// posterior mean (the current state before burn-in has passed).
using StepObserver =
    std::function<void(std::int64_t k, const Eigen::VectorXd& beta, const Eigen::VectorXd& mean)>;

// Runs a full chain from `init` (zeros when empty). All randomness comes from
// cfg.seed, so identical configs produce identical traces.
Trace run_chain(const SamplerConfig& cfg, LogPosteriorTarget& target,
                const Eigen::VectorXd& init = {}, const StepObserver& observer = {});

}  // namespace hasgld
