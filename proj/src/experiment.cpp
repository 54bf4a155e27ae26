#include "hasgld/experiment.hpp"

#include "hasgld/trace_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hasgld {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    require(known, "config: unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

// ---------------------------------------------------------------------------
// config parsing

const std::map<std::string, std::vector<std::string>>& target_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"gaussian2d", {"sigma_x", "sigma_y", "correlation", "mu"}},
      {"regression",
       {"n", "p", "data_seed", "n_test", "noise_var", "v0", "v1", "nu", "lambda", "a", "b",
        "delta_init", "sigma2_init", "eval_every"}},
      {"mlp",
       {"widths", "n_train", "n_test", "data_seed", "noise_sd", "noise_var", "prior_precision",
        "init_scale"}},
  };
  return keys;
}

nlohmann::json normalized_target(const std::string& experiment, const nlohmann::json& t) {
  nlohmann::json out = t;
  if (experiment == "gaussian2d") {
    out["sigma_x"] = get_or(t, "sigma_x", 0.12);
    out["sigma_y"] = get_or(t, "sigma_y", 1.0);
    out["correlation"] = get_or(t, "correlation", -0.95);
    if (!out.contains("mu")) out["mu"] = std::vector<double>{0.0, 0.0};
  } else if (experiment == "regression") {
    out["n"] = get_or<Eigen::Index>(t, "n", 100);
    out["p"] = get_or<Eigen::Index>(t, "p", 200);
    out["data_seed"] = get_or<std::uint64_t>(t, "data_seed", 20260824ull);
    out["n_test"] = get_or<Eigen::Index>(t, "n_test", 50);
    out["noise_var"] = get_or(t, "noise_var", 3.0);
    out["v0"] = get_or(t, "v0", 0.1);
    out["v1"] = get_or(t, "v1", 100.0);
    out["nu"] = get_or(t, "nu", 1.0);
    out["lambda"] = get_or(t, "lambda", 1.0);
    out["a"] = get_or(t, "a", 1.0);
    out["b"] = get_or(t, "b", static_cast<double>(out["p"].get<Eigen::Index>()));
    out["delta_init"] = get_or(t, "delta_init", 0.5);
    out["sigma2_init"] = get_or(t, "sigma2_init", 1.0);
    out["eval_every"] = get_or<Eigen::Index>(t, "eval_every", 10);
  } else if (experiment == "mlp") {
    out["widths"] = t.contains("widths") ? t.at("widths") : nlohmann::json{2, 16, 1};
    out["n_train"] = get_or<Eigen::Index>(t, "n_train", 256);
    out["n_test"] = get_or<Eigen::Index>(t, "n_test", 64);
    out["data_seed"] = get_or<std::uint64_t>(t, "data_seed", 7ull);
    out["noise_sd"] = get_or(t, "noise_sd", 0.1);
    out["noise_var"] = get_or(t, "noise_var", 0.01);
    out["prior_precision"] = get_or(t, "prior_precision", 1.0);
    out["init_scale"] = get_or(t, "init_scale", 0.2);
  }
  return out;
}

}  // namespace

Eigen::Index ExperimentConfig::dim() const {
  if (experiment == "gaussian2d") return 2;
  if (experiment == "regression") return target.at("p").get<Eigen::Index>();
  if (experiment == "mlp") return mlp_param_count(target.at("widths").get<std::vector<int>>());
  throw std::invalid_argument("config: unknown experiment '" + experiment + "'");
}

std::string sampler_name(SamplerKind kind) {
  return kind == SamplerKind::kSgld ? "sgld" : "hasgld_sa";
}

SamplerKind sampler_from_name(const std::string& name) {
  if (name == "sgld") return SamplerKind::kSgld;
  if (name == "hasgld_sa") return SamplerKind::kHasgldSa;
  throw std::invalid_argument("config: unknown sampler '" + name + "'");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  check_keys(j,
             {"experiment", "samplers", "step_sizes", "step_decay_alpha", "step_decay_c2",
              "iterations", "burn_in", "thin", "temperature", "replicates", "base_seed",
              "batch_size", "memory", "damping_r", "delta_floor", "omega",
              "normalize_directions", "sa_mode", "pruning", "target"},
             "top level");
  ExperimentConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  require(target_keys().count(cfg.experiment) == 1,
          "config: unknown experiment '" + cfg.experiment + "'");

  for (const auto& name : j.at("samplers")) {
    const SamplerKind kind = sampler_from_name(name.get<std::string>());
    for (SamplerKind seen : cfg.samplers)
      require(seen != kind, "config: duplicate sampler entry");
    cfg.samplers.push_back(kind);
  }
  require(!cfg.samplers.empty(), "config: samplers must be nonempty");

  cfg.step_sizes = j.at("step_sizes").get<std::vector<double>>();
  require(!cfg.step_sizes.empty(), "config: step_sizes must be nonempty");
  for (double eps : cfg.step_sizes) require(eps > 0.0, "config: step sizes must be positive");

  cfg.step_decay_alpha = get_or(j, "step_decay_alpha", 0.0);
  cfg.step_decay_c2 = get_or(j, "step_decay_c2", 0.0);
  cfg.iterations = get_or<std::int64_t>(j, "iterations", 1000);
  cfg.burn_in = get_or<std::int64_t>(j, "burn_in", 0);
  cfg.thin = get_or<std::int64_t>(j, "thin", 1);
  cfg.temperature = get_or(j, "temperature", 1.0);
  cfg.replicates = get_or(j, "replicates", 1);
  require(cfg.replicates >= 1, "config: replicates must be positive");
  cfg.base_seed = get_or<std::uint64_t>(j, "base_seed", 1ull);
  cfg.batch_size = get_or<std::int64_t>(j, "batch_size", 0);
  cfg.memory_capacity = get_or(j, "memory", 5);
  cfg.damping_r = get_or(j, "damping_r", 0.25);
  cfg.delta_floor = get_or(j, "delta_floor", 0.1);
  if (j.contains("omega")) {
    const auto& o = j.at("omega");
    check_keys(o, {"c1", "c2", "alpha"}, "omega");
    cfg.omega.c1 = get_or(o, "c1", 5.0);
    cfg.omega.c2 = get_or(o, "c2", 10.0);
    cfg.omega.alpha = get_or(o, "alpha", 0.9);
  }
  cfg.normalize_directions = get_or(j, "normalize_directions", true);
  const std::string mode = get_or<std::string>(j, "sa_mode", "dense");
  require(mode == "dense" || mode == "vector", "config: sa_mode must be 'dense' or 'vector'");
  cfg.sa_mode = mode == "dense" ? SaMode::kDense : SaMode::kVector;
  if (j.contains("pruning")) {
    for (const auto& ev : j.at("pruning")) {
      check_keys(ev, {"iteration", "rate"}, "pruning");
      cfg.pruning.push_back(
          {ev.at("iteration").get<std::int64_t>(), ev.at("rate").get<double>()});
    }
  }

  const nlohmann::json t = j.contains("target") ? j.at("target") : nlohmann::json::object();
  const auto& allowed = target_keys().at(cfg.experiment);
  for (const auto& item : t.items())
    require(std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end(),
            "config: unknown key '" + item.key() + "' in target");
  cfg.target = normalized_target(cfg.experiment, t);

  // representative sampler config exercises the shared validation rules
  SamplerConfig probe;
  probe.step = {cfg.step_sizes.front(), cfg.step_decay_alpha, cfg.step_decay_c2};
  probe.temperature = cfg.temperature;
  probe.iterations = cfg.iterations;
  probe.burn_in = cfg.burn_in;
  probe.thin = cfg.thin;
  probe.batch_size = cfg.batch_size;
  probe.memory_capacity = cfg.memory_capacity;
  probe.damping_r = cfg.damping_r;
  probe.delta_floor = cfg.delta_floor;
  probe.omega = cfg.omega;
  probe.sa_mode = cfg.sa_mode;
  probe.pruning = cfg.pruning;
  probe.validate();

  const Eigen::Index dim = cfg.dim();
  require(cfg.sa_mode == SaMode::kVector || dim <= 2000,
          "config: dense smoothing is limited to 2000 dimensions; use sa_mode 'vector'");

  nlohmann::json raw = j;
  raw["target"] = cfg.target;
  cfg.raw = raw;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// experiment execution

namespace {

struct SharedData {
  std::shared_ptr<const RegressionDataset> regression;
  std::shared_ptr<const MlpDataset> mlp;
  Eigen::Matrix2d gaussian_sigma;
  Eigen::Vector2d gaussian_mu;
};

SharedData prepare_shared(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  SharedData shared;
  const nlohmann::json& t = cfg.target;
  if (cfg.experiment == "gaussian2d") {
    const Gaussian2dTarget target =
        make_gaussian2d(t.at("sigma_x").get<double>(), t.at("sigma_y").get<double>(),
                        t.at("correlation").get<double>());
    shared.gaussian_sigma = target.covariance();
    const auto mu = t.at("mu").get<std::vector<double>>();
    require(mu.size() == 2, "config: mu must have two entries");
    shared.gaussian_mu = Eigen::Vector2d(mu[0], mu[1]);
  } else if (cfg.experiment == "regression") {
    auto data = std::make_shared<RegressionDataset>(make_regression_data(
        t.at("n").get<Eigen::Index>(), t.at("p").get<Eigen::Index>(),
        t.at("data_seed").get<std::uint64_t>(), t.at("n_test").get<Eigen::Index>(),
        t.at("noise_var").get<double>()));
    write_regression_dataset(*data, out_dir / "dataset.csv", out_dir / "dataset_meta.json");
    shared.regression = std::move(data);
  } else if (cfg.experiment == "mlp") {
    shared.mlp = std::make_shared<MlpDataset>(
        make_mlp_data(t.at("n_train").get<Eigen::Index>(), t.at("n_test").get<Eigen::Index>(),
                      t.at("noise_sd").get<double>(), t.at("data_seed").get<std::uint64_t>()));
  }
  return shared;
}

SamplerConfig cell_sampler_config(const ExperimentConfig& cfg, SamplerKind kind, double eps,
                                  std::uint64_t seed) {
  SamplerConfig s;
  s.kind = kind;
  s.step = {eps, cfg.step_decay_alpha, cfg.step_decay_c2};
  s.temperature = cfg.temperature;
  s.iterations = cfg.iterations;
  s.burn_in = cfg.burn_in;
  s.thin = cfg.thin;
  s.batch_size = cfg.batch_size;
  s.seed = seed;
  s.memory_capacity = cfg.memory_capacity;
  s.damping_r = cfg.damping_r;
  s.delta_floor = cfg.delta_floor;
  s.omega = cfg.omega;
  s.normalize_directions = cfg.normalize_directions;
  s.sa_mode = cfg.sa_mode;
  s.pruning = cfg.pruning;
  return s;
}

double max_coordinate_act(const std::vector<Eigen::VectorXd>& samples, nlohmann::json* detail) {
  if (samples.size() < 10) return kInf;
  const Eigen::Index d = samples.front().size();
  std::vector<double> column(samples.size());
  double worst = -kInf;
  std::vector<double> taus;
  std::vector<std::int64_t> lags;
  bool any = false;
  for (Eigen::Index jcoord = 0; jcoord < d; ++jcoord) {
    bool constant = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      column[i] = samples[i](jcoord);
      if (column[i] != column[0]) constant = false;
    }
    if (constant) {  // frozen (e.g. pruned) coordinates carry no mixing information
      taus.push_back(kNan);
      lags.push_back(0);
      continue;
    }
    const ActEstimate est = act(column);
    taus.push_back(est.tau);
    lags.push_back(est.truncation_lag);
    worst = std::max(worst, est.tau);
    any = true;
  }
  if (detail) {
    (*detail)["per_coordinate"] = taus;
    (*detail)["truncation_lags"] = lags;
    (*detail)["estimator"] = "initial-sequence, cutoff 0.05, cap T/4";
  }
  return any ? worst : kInf;
}

struct PhaseWindow {
  std::int64_t start = 1;
  std::int64_t end = 1;
  double rate = 0.0;
  Eigen::VectorXd sum;
  std::int64_t count = 0;
};

std::vector<PhaseWindow> make_phases(const ExperimentConfig& cfg, Eigen::Index dim) {
  std::vector<PhaseWindow> phases;
  std::int64_t start = 1;
  double rate = 0.0;
  for (const PruneEvent& ev : cfg.pruning) {
    if (ev.iteration > start)
      phases.push_back({start, ev.iteration - 1, rate, Eigen::VectorXd::Zero(dim), 0});
    start = ev.iteration;
    rate = ev.rate;
  }
  phases.push_back({start, cfg.iterations, rate, Eigen::VectorXd::Zero(dim), 0});
  return phases;
}

struct CellJob {
  SamplerKind kind;
  int step_index;
  double step_size;
  int replicate;
  std::uint64_t seed;
};

CellResult run_cell(const ExperimentConfig& cfg, const SharedData& shared, const CellJob& job,
                    const std::filesystem::path& out_dir) {
  CellResult cell;
  cell.experiment = cfg.experiment;
  cell.sampler = sampler_name(job.kind);
  cell.step_index = job.step_index;
  cell.step_size = job.step_size;
  cell.seed = job.seed;

  const SamplerConfig scfg = cell_sampler_config(cfg, job.kind, job.step_size, job.seed);
  std::ostringstream tag;
  tag << cell.sampler << "_e" << job.step_index << "_s" << job.seed;
  cell.trace_path = out_dir / ("trace_" + tag.str() + ".csv");
  cell.metrics_path = out_dir / ("metrics_" + tag.str() + ".json");

  const nlohmann::json& t = cfg.target;
  std::unique_ptr<LogPosteriorTarget> target;
  Eigen::VectorXd init;
  if (cfg.experiment == "gaussian2d") {
    target = std::make_unique<Gaussian2dTarget>(shared.gaussian_mu, shared.gaussian_sigma);
  } else if (cfg.experiment == "regression") {
    SpikeSlabHyper hyper = make_spike_slab_hyper(shared.regression->X.cols());
    hyper.v0 = t.at("v0").get<double>();
    hyper.v1 = t.at("v1").get<double>();
    hyper.nu = t.at("nu").get<double>();
    hyper.lambda = t.at("lambda").get<double>();
    hyper.a = t.at("a").get<double>();
    hyper.b = t.at("b").get<double>();
    hyper.delta = t.at("delta_init").get<double>();
    hyper.sigma2 = t.at("sigma2_init").get<double>();
    target = std::make_unique<SpikeSlabRegressionTarget>(shared.regression, std::move(hyper));
  } else {
    target = std::make_unique<MlpTarget>(t.at("widths").get<std::vector<int>>(), shared.mlp,
                                         t.at("noise_var").get<double>(),
                                         t.at("prior_precision").get<double>());
    const double init_scale = t.at("init_scale").get<double>();
    CounterRng init_rng(job.seed, /*stream=*/2);
    init.resize(target->dim());
    for (Eigen::Index i = 0; i < init.size(); ++i) init(i) = init_scale * init_rng.normal();
  }

  // observers
  std::vector<std::array<double, 3>> curve;  // step, mse, mae
  std::vector<PhaseWindow> phases;
  StepObserver observer;
  if (cfg.experiment == "regression") {
    const auto every = t.at("eval_every").get<Eigen::Index>();
    const auto* data = shared.regression.get();
    observer = [&curve, every, data](std::int64_t k, const Eigen::VectorXd&,
                                     const Eigen::VectorXd& mean) {
      if (k % every != 0) return;
      const Eigen::VectorXd pred = data->X_test * mean;
      const MseMae m = mse_mae(pred, data->y_test);
      curve.push_back({static_cast<double>(k), m.mse, m.mae});
    };
  } else if (cfg.experiment == "mlp") {
    phases = make_phases(cfg, target->dim());
    observer = [&phases](std::int64_t k, const Eigen::VectorXd& beta, const Eigen::VectorXd&) {
      for (PhaseWindow& ph : phases) {
        if (k < ph.start || k > ph.end) continue;
        if (k >= (ph.start + ph.end + 1) / 2) {  // settle during the first half of each phase
          ph.sum += beta;
          ++ph.count;
        }
        break;
      }
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Trace trace = run_chain(scfg, *target, init, observer);
  cell.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_trace_csv(trace, cell.trace_path);
  cell.diverged = trace.diverged;
  cell.diverged_at = trace.diverged_at;
  cell.sparsity = trace.final_sparsity;
  cell.max_abs_pruned = trace.max_abs_pruned;
  cell.posterior_mean = trace.posterior_mean;

  nlohmann::json metrics;
  nlohmann::json act_detail;
  if (trace.diverged) {
    cell.cov_err = cell.act_max = cell.mse = cell.mae = kInf;
  } else {
    if (cfg.experiment == "gaussian2d") {
      cell.cov_err = trace.samples.size() >= 2 ? cov_error(trace.samples, shared.gaussian_sigma)
                                               : kInf;
      cell.act_max = max_coordinate_act(trace.samples, &act_detail);
    } else if (cfg.experiment == "regression") {
      const auto* data = shared.regression.get();
      const MseMae m = mse_mae(data->X_test * trace.posterior_mean, data->y_test);
      cell.mse = m.mse;
      cell.mae = m.mae;
      cell.act_max = max_coordinate_act(trace.samples, &act_detail);
      cell.extra["beta1"] = trace.posterior_mean(0);
      cell.extra["beta2"] = trace.posterior_mean(1);
      cell.extra["max_tail_abs"] =
          trace.posterior_mean.tail(trace.posterior_mean.size() - 2).cwiseAbs().maxCoeff();
      const auto& hyper = dynamic_cast<const SpikeSlabRegressionTarget&>(*target).hyper();
      cell.extra["delta_final"] = hyper.delta;
      cell.extra["sigma2_final"] = hyper.sigma2;
    } else if (cfg.experiment == "mlp") {
      const auto& mlp = dynamic_cast<const MlpTarget&>(*target);
      const auto& data = mlp.data();
      int idx = 0;
      for (const PhaseWindow& ph : phases) {
        if (ph.count == 0) continue;
        const Eigen::VectorXd theta = ph.sum / static_cast<double>(ph.count);
        Eigen::VectorXd pred(data.X_test.rows());
        for (Eigen::Index i = 0; i < data.X_test.rows(); ++i)
          pred(i) = mlp_forward(mlp.widths(), theta, data.X_test.row(i).transpose())(0);
        const MseMae m = mse_mae(pred, data.Y_test.col(0));
        cell.extra["phase" + std::to_string(idx) + "_rate"] = ph.rate;
        cell.extra["phase" + std::to_string(idx) + "_mse"] = m.mse;
        cell.extra["phase" + std::to_string(idx) + "_mae"] = m.mae;
        cell.mse = m.mse;  // summary carries the last evaluated phase
        cell.mae = m.mae;
        ++idx;
      }
      cell.act_max = max_coordinate_act(trace.samples, &act_detail);
    }
  }

  // per-cell metrics sidecar
  metrics["experiment"] = cfg.experiment;
  metrics["sampler"] = cell.sampler;
  metrics["step_size"] = cell.step_size;
  metrics["seed"] = cell.seed;
  metrics["iterations"] = cfg.iterations;
  metrics["burn_in"] = cfg.burn_in;
  metrics["thin"] = cfg.thin;
  metrics["diverged"] = cell.diverged;
  metrics["diverged_at"] = cell.diverged_at;
  metrics["retained_samples"] = trace.samples.size();
  metrics["posterior_mean_count"] = trace.posterior_mean_count;
  metrics["max_abs_pruned"] = cell.max_abs_pruned;
  metrics["wall_time_seconds"] = cell.wall_time;
  nlohmann::json vals;
  vals["cov_error"] = cell.cov_err;
  vals["act_max"] = cell.act_max;
  vals["mse"] = cell.mse;
  vals["mae"] = cell.mae;
  vals["sparsity"] = cell.sparsity;
  for (const auto& [key, value] : cell.extra) vals[key] = value;
  metrics["metrics"] = vals;
  if (!act_detail.is_null()) metrics["act"] = act_detail;
  if (trace.posterior_mean.size() > 0 && trace.posterior_mean.size() <= 2048)
    metrics["posterior_mean"] = std::vector<double>(
        trace.posterior_mean.data(), trace.posterior_mean.data() + trace.posterior_mean.size());
  if (!trace.steps.empty()) {
    double grad_sum = 0.0;
    std::int64_t grad_n = 0;
    for (const StepRecord& r : trace.steps)
      if (std::isfinite(r.grad_norm)) {
        grad_sum += r.grad_norm;
        ++grad_n;
      }
    nlohmann::json steps;
    steps["count"] = trace.steps.size();
    steps["mean_grad_norm"] = grad_n > 0 ? grad_sum / static_cast<double>(grad_n) : kNan;
    steps["final_eps"] = trace.steps.back().eps;
    steps["final_omega"] = trace.steps.back().omega;
    metrics["steps_summary"] = steps;
  }

  std::ofstream mout(cell.metrics_path);
  require(mout.good(), "cannot write " + cell.metrics_path.string());
  mout << metrics.dump(2) << "\n";

  if (!curve.empty()) {
    std::ofstream cout_file(out_dir / ("curve_" + tag.str() + ".csv"));
    require(cout_file.good(), "cannot write curve file");
    cout_file << "step,mse,mae\n";
    for (const auto& row : curve)
      cout_file << static_cast<std::int64_t>(row[0]) << ',' << format_double(row[1]) << ','
                << format_double(row[2]) << "\n";
  }
  return cell;
}

std::string csv_field(double v) { return format_double(v); }

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  require(!opts.out_dir.empty(), "run_experiment: output directory required");
  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream snap(opts.out_dir / "config_snapshot.json");
    require(snap.good(), "cannot write config snapshot");
    snap << cfg.raw.dump(2) << "\n";
  }
  const SharedData shared = prepare_shared(cfg, opts.out_dir);

  std::vector<CellJob> jobs;
  for (SamplerKind kind : cfg.samplers)
    for (int e = 0; e < static_cast<int>(cfg.step_sizes.size()); ++e)
      for (int r = 0; r < cfg.replicates; ++r)
        jobs.push_back({kind, e, cfg.step_sizes[static_cast<std::size_t>(e)], r,
                        cfg.base_seed + opts.seed_offset + static_cast<std::uint64_t>(r)});

  std::vector<CellResult> cells(jobs.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        cells[i] = run_cell(cfg, shared, jobs[i], opts.out_dir);
      } catch (const std::exception& e) {
        CellResult& cell = cells[i];
        cell.experiment = cfg.experiment;
        cell.sampler = sampler_name(jobs[i].kind);
        cell.step_index = jobs[i].step_index;
        cell.step_size = jobs[i].step_size;
        cell.seed = jobs[i].seed;
        cell.diverged = true;
        cell.cov_err = cell.act_max = cell.mse = cell.mae = kInf;
        cell.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  ExperimentResult result;
  result.summary_path = opts.out_dir / "summary.csv";
  std::ofstream out(result.summary_path);
  require(out.good(), "cannot write summary.csv");
  out << "experiment,sampler,step_size,seed,cov_error,act_max,mse,mae,sparsity,wall_time\n";
  for (const CellResult& cell : cells) {
    out << cell.experiment << ',' << cell.sampler << ',' << csv_field(cell.step_size) << ','
        << cell.seed << ',' << csv_field(cell.cov_err) << ',' << csv_field(cell.act_max) << ','
        << csv_field(cell.mse) << ',' << csv_field(cell.mae) << ',' << csv_field(cell.sparsity)
        << ',' << csv_field(cell.wall_time) << "\n";
  }
  require(out.good(), "failed writing summary.csv");
  result.cells = std::move(cells);
  return result;
}

std::string report_summary(const std::filesystem::path& out_dir) {
  std::ifstream in(out_dir / "summary.csv");
  require(in.good(), "no summary.csv in " + out_dir.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty summary.csv");

  struct Group {
    std::vector<double> cov, act, mse, mae;
    int diverged = 0;
    int count = 0;
  };
  std::map<std::pair<std::string, double>, Group> groups;
  std::string experiment;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    require(f.size() == 10, "malformed summary row");
    experiment = f[0];
    Group& g = groups[{f[1], parse_double(f[2])}];
    const double cov = parse_double(f[4]);
    const double act_v = parse_double(f[5]);
    const double mse_v = parse_double(f[6]);
    const double mae_v = parse_double(f[7]);
    ++g.count;
    if (std::isinf(cov) || std::isinf(act_v) || std::isinf(mse_v)) ++g.diverged;
    g.cov.push_back(cov);
    g.act.push_back(act_v);
    g.mse.push_back(mse_v);
    g.mae.push_back(mae_v);
  }

  const auto median = [](std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return kNan;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };

  std::ostringstream os;
  os << "experiment: " << experiment << "\n";
  os << std::left << std::setw(12) << "sampler" << std::setw(12) << "step_size" << std::setw(14)
     << "med_cov_err" << std::setw(14) << "med_act_max" << std::setw(14) << "med_mse"
     << std::setw(14) << "med_mae" << std::setw(10) << "cells" << "diverged\n";
  for (const auto& [key, g] : groups) {
    os << std::left << std::setw(12) << key.first << std::setw(12) << format_double(key.second)
       << std::setw(14) << format_double(median(g.cov)) << std::setw(14)
       << format_double(median(g.act)) << std::setw(14) << format_double(median(g.mse))
       << std::setw(14) << format_double(median(g.mae)) << std::setw(10) << g.count << g.diverged
       << "\n";
  }
  return os.str();
}

}  // namespace hasgld
