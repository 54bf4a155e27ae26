#pragma once

#include "hasgld/diagnostics.hpp"
#include "hasgld/samplers.hpp"
#include "hasgld/targets.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace hasgld {

// Benchmark description: which samplers to run, over which step sizes, with
// how many replicate seeds, against which target. The target block is
// experiment-specific and validated on load.
struct ExperimentConfig {
  std::string experiment;  // gaussian2d | regression | mlp
  std::vector<SamplerKind> samplers;
  std::vector<double> step_sizes;
  double step_decay_alpha = 0.0;
  double step_decay_c2 = 0.0;
  std::int64_t iterations = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  double temperature = 1.0;
  int replicates = 1;
  std::uint64_t base_seed = 1;
  std::int64_t batch_size = 0;
  int memory_capacity = 5;
  double damping_r = 0.25;
  double delta_floor = 0.1;
  OmegaSchedule omega;
  bool normalize_directions = true;
  SaMode sa_mode = SaMode::kDense;
  std::vector<PruneEvent> pruning;
  nlohmann::json target;
  nlohmann::json raw;  // normalized snapshot of the parsed config

  // parameter dimension implied by the target block
  Eigen::Index dim() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sampler_name(SamplerKind kind);
SamplerKind sampler_from_name(const std::string& name);

struct RunOptions {
  std::filesystem::path out_dir;
  int workers = 1;
  std::uint64_t seed_offset = 0;
};

// Outcome of one (sampler, step size, seed) grid cell. Metrics that do not
// apply to an experiment are NaN; every metric of a diverged or failed cell
// is +infinity.
struct CellResult {
  std::string experiment;
  std::string sampler;
  int step_index = 0;
  double step_size = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::int64_t diverged_at = -1;
  double cov_err = std::numeric_limits<double>::quiet_NaN();
  double act_max = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double sparsity = 0.0;
  double wall_time = 0.0;
  double max_abs_pruned = 0.0;
  Eigen::VectorXd posterior_mean;
  std::map<std::string, double> extra;  // experiment-specific scalars
  std::string error;                    // nonempty when the cell failed outright
  std::filesystem::path trace_path;
  std::filesystem::path metrics_path;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::filesystem::path summary_path;
};

// Runs the full grid, writing per-cell trace CSVs and metrics JSON plus one
// summary.csv into opts.out_dir. Cells run in parallel up to opts.workers;
// outputs and ordering are independent of the worker count. A failed cell is
// recorded and does not abort the others.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

// Seed-aggregated medians per (sampler, step size), read back from a
// previously written summary.csv.
std::string report_summary(const std::filesystem::path& out_dir);

}  // namespace hasgld
