#include "invfilter/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "invfilter/csv.hpp"
#include "invfilter/errors.hpp"
#include "invfilter/filter_core.hpp"
#include "invfilter/mekf.hpp"
#include "invfilter/parallel.hpp"

namespace invfilter {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::IEKF: return "iekf";
    case FilterKind::IEnKF: return "ienkf";
    case FilterKind::FixedGain: return "fixed-gain";
    case FilterKind::MEKF: return "mekf";
    case FilterKind::AsymptoticIEKF: return "asymptotic-iekf";
  }
  return {};
}

FilterKind parse_filter_kind(const std::string& text) {
  for (FilterKind k : {FilterKind::IEKF, FilterKind::IEnKF, FilterKind::FixedGain, FilterKind::MEKF,
                       FilterKind::AsymptoticIEKF}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown filter '" + text + "' (expected iekf, ienkf, fixed-gain, mekf or asymptotic-iekf)");
}

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = scenario_keys();
    for (const char* key :
         {"seed", "num_trajectories", "filter", "filters", "k1", "k2", "k", "lambda", "particles", "ienkf_seed",
          "centered", "regularization", "qw_mode", "asymptotic_tol", "mekf_inflation", "burn_in", "retain",
          "chains", "k_min", "k_max", "k_count", "lambda_min", "lambda_max", "lambda_count", "mekf_min",
          "mekf_max", "mekf_count", "stationary_prior_std"}) {
      k.insert(key);
    }
    return k;
  }();
  return keys;
}

ExperimentConfig experiment_from_config(const Config& config) {
  config.check_known(experiment_keys());
  ExperimentConfig e;
  e.scenario = scenario_from_config(config);
  e.seed = config.get_u64("seed", 1);
  e.n_trajectories = config.get_int("num_trajectories", 100);
  if (e.n_trajectories < 1) throw ConfigError("num_trajectories must be >= 1");
  e.filter = parse_filter_kind(config.get_string("filter", "iekf"));
  if (config.has("filters")) {
    for (const auto& f : config.get_list("filters")) e.compare.push_back(parse_filter_kind(f));
  }
  FilterSettings& s = e.settings;
  const OutputMap& out = e.scenario.output;
  if (out.kind() == OutputKind::TwoVector) {
    s.two_vector.b1 = out.b1();
    s.two_vector.b2 = out.b2();
  }
  if (out.kind() == OutputKind::SingleVector) s.horizon.g_ref = out.g_ref();
  s.two_vector.k1 = config.get_double("k1", s.two_vector.k1);
  s.two_vector.k2 = config.get_double("k2", s.two_vector.k2);
  s.horizon.k = config.get_double("k", s.horizon.k);
  s.horizon.lambda = config.get_double("lambda", s.horizon.lambda);
  s.ienkf.particles = config.get_int("particles", s.ienkf.particles);
  s.ienkf.seed = config.get_u64("ienkf_seed", e.seed + 1);
  s.ienkf.centered = config.get_bool("centered", false);
  s.ienkf.regularization = config.get_double("regularization", s.ienkf.regularization);
  const std::string qw = config.get_string("qw_mode", "lyapunov");
  if (qw == "lyapunov") {
    s.qw_mode = QwMode::Lyapunov;
  } else if (qw == "as-printed") {
    s.qw_mode = QwMode::AsPrinted;
  } else {
    throw ConfigError("qw_mode must be lyapunov or as-printed");
  }
  s.asymptotic_tol = config.get_double("asymptotic_tol", s.asymptotic_tol);
  s.mekf_inflation = config.get_double("mekf_inflation", s.mekf_inflation);
  if (!(s.mekf_inflation > 0.0)) throw ConfigError("mekf_inflation must be positive");
  return e;
}

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

TrajectoryBatch simulate_batch(const Scenario& scenario, int n_trajectories, std::uint64_t seed) {
  if (n_trajectories < 1) throw ConfigError("need at least one trajectory");
  const DiscreteModel model = scenario.model();
  const GaussianSampler prior(scenario.prior_cov);
  TrajectoryBatch batch;
  batch.estimate0 = scenario.truth_init;
  batch.trajectories.resize(static_cast<std::size_t>(n_trajectories));
  parallel_for(batch.trajectories.size(), [&](std::size_t t) {
    RandomStream rng(seed, t);
    const GroupElement eta0 = exp_g(scenario.descriptor, prior.sample(rng));
    batch.trajectories[t] = simulate_trajectory(model, eta0 * batch.estimate0, scenario.horizon, rng);
  });
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& tr : batch.trajectories) {
    for (const auto& g : tr.truth) hash_bytes(h, g.matrix().data(), sizeof(double) * g.matrix().size());
  }
  batch.truth_hash = h;
  return batch;
}

namespace {

struct FilterOutput {
  std::vector<GroupElement> estimates;
  std::vector<Eigen::MatrixXd> covariances;  ///< covariance of log(eta_n); empty if none
  std::vector<Eigen::MatrixXd> gains;
};

Eigen::MatrixXd asymptotic_iekf_gain(const Scenario& s, const DiscreteModel& model, const Eigen::MatrixXd& Qw,
                                     double tol) {
  const Linearization lin = linearize(s.output);
  const IekfRun riccati = iekf_riccati(model.left(0), s.prior_cov, Qw, lin, s.noise.obs_cov, 5000);
  // Shortest prefix whose last 10 differences are below tol.
  for (std::size_t n = 11; n <= riccati.gains.size(); ++n) {
    const std::vector<Eigen::MatrixXd> head(riccati.gains.begin(), riccati.gains.begin() + static_cast<long>(n));
    if (auto L = asymptotic_gain(head, tol)) return *L;
  }
  throw NumericalError("IEKF gains did not converge within 5000 steps");
}

}  // namespace

MonteCarloReport run_filter_batch(const ExperimentConfig& config, FilterKind filter, const TrajectoryBatch& batch,
                                  const GainSchedule* schedule) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario& s = config.scenario;
  const DiscreteModel model = s.model();
  const int d = s.descriptor.algebra_dim();
  const int N = s.horizon;
  const auto T = batch.trajectories.size();
  const Eigen::MatrixXd Qw =
      compute_Qw(s.noise.process_cov, AlgebraVector(s.descriptor, s.upsilon), s.dt, config.settings.qw_mode);
  const Eigen::MatrixXd& Qv = s.noise.obs_cov;

  MonteCarloReport report;
  report.filter = filter;
  report.steps = N;
  report.dim = d;
  report.n_trajectories = static_cast<int>(T);
  report.seed = config.seed;
  report.truth_hash = batch.truth_hash;

  std::vector<FilterOutput> outputs(T);
  std::optional<GainSchedule> own_schedule;
  std::optional<GainFunction> constant_gain;
  std::vector<Eigen::MatrixXd> shared_cov;

  switch (filter) {
    case FilterKind::IEKF: {
      const IekfRun riccati = iekf_riccati(model.left(0), s.prior_cov, Qw, linearize(s.output), Qv, N);
      report.gains = riccati.gains;
      report.covariances = riccati.covariances;
      shared_cov = riccati.covariances;
      break;
    }
    case FilterKind::AsymptoticIEKF: {
      const Eigen::MatrixXd L = asymptotic_iekf_gain(s, model, Qw, config.settings.asymptotic_tol);
      constant_gain = GainFunction::linear_exp(s.descriptor, L, s.output.h0());
      report.gains.assign(static_cast<std::size_t>(N), L);
      break;
    }
    case FilterKind::IEnKF: {
      if (!schedule) {
        own_schedule = offline_gains(s, config.settings.ienkf);
        schedule = &*own_schedule;
      }
      report.gains = schedule->gains;
      shared_cov = schedule->error_moments;
      break;
    }
    case FilterKind::FixedGain: {
      if (s.output.kind() == OutputKind::TwoVector) {
        constant_gain = GainFunction::two_vector(config.settings.two_vector);
      } else if (s.output.kind() == OutputKind::SingleVector) {
        constant_gain = GainFunction::horizon(config.settings.horizon);
      } else {
        throw ConfigError("fixed-gain filters need a two_vector or single_vector output");
      }
      break;
    }
    case FilterKind::MEKF:
      if (s.descriptor.id() != GroupId::SO3) throw ConfigError("the MEKF baseline runs on SO3 only");
      break;
  }

  parallel_for(T, [&](std::size_t t) {
    const Trajectory& tr = batch.trajectories[t];
    FilterOutput& out = outputs[t];
    switch (filter) {
      case FilterKind::IEKF: {
        const IekfRun run = run_iekf(model, tr, IekfState{batch.estimate0, s.prior_cov, 0}, Qw, Qv);
        out.estimates = run.estimates;
        break;
      }
      case FilterKind::AsymptoticIEKF:
      case FilterKind::FixedGain:
        out.estimates = run_filter(model, tr, batch.estimate0, *constant_gain);
        break;
      case FilterKind::IEnKF:
        out.estimates = apply_schedule(s, tr, *schedule, batch.estimate0);
        break;
      case FilterKind::MEKF: {
        MekfState init;
        init.estimate = batch.estimate0.matrix();
        init.P = init.estimate.transpose() * s.prior_cov * init.estimate;
        const MekfRun run = run_mekf(model, tr, init, Eigen::Matrix3d(Qw),
                                     config.settings.mekf_inflation * Qv);
        out.estimates = run.estimates;
        out.covariances.assign(run.error_covariances.begin(), run.error_covariances.end());
        if (t == 0) out.gains = run.gains;
        break;
      }
    }
  });
  if (filter == FilterKind::MEKF) report.gains = outputs.front().gains;

  report.errors.resize(T);
  parallel_for(T, [&](std::size_t t) {
    Eigen::MatrixXd e(N + 1, d);
    const Trajectory& tr = batch.trajectories[t];
    for (int n = 0; n <= N; ++n) {
      const auto i = static_cast<std::size_t>(n);
      e.row(n) = log_g(error_of(tr.truth[i], outputs[t].estimates[i])).coords.transpose();
    }
    report.errors[t] = std::move(e);
  });

  report.has_reported_covariance = !shared_cov.empty() || filter == FilterKind::MEKF;
  report.mean = Eigen::MatrixXd::Zero(N + 1, d);
  report.std_dev = Eigen::MatrixXd::Zero(N + 1, d);
  report.rmse = Eigen::VectorXd::Zero(N + 1);
  report.coverage = Eigen::MatrixXd::Constant(N + 1, d, std::nan(""));
  report.reported_3sigma = Eigen::MatrixXd::Constant(N + 1, d, std::nan(""));
  const auto Td = static_cast<double>(T);
  for (const auto& e : report.errors) {
    report.mean += e;
    report.rmse += e.rowwise().squaredNorm();
  }
  report.mean /= Td;
  report.rmse = (report.rmse / Td).cwiseSqrt();
  for (const auto& e : report.errors) report.std_dev += (e - report.mean).cwiseAbs2();
  report.std_dev = (report.std_dev / Td).cwiseSqrt();

  if (report.has_reported_covariance) {
    report.coverage.setZero();
    report.reported_3sigma.setZero();
    for (std::size_t t = 0; t < T; ++t) {
      for (int n = 0; n <= N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const Eigen::MatrixXd& P = shared_cov.empty() ? outputs[t].covariances[i] : shared_cov[i];
        for (int a = 0; a < d; ++a) {
          const double three_sigma = 3.0 * std::sqrt(std::max(P(a, a), 0.0));
          report.reported_3sigma(n, a) += three_sigma;
          if (std::abs(report.errors[t](n, a)) <= three_sigma) report.coverage(n, a) += 1.0;
        }
      }
    }
    report.coverage /= Td;
    report.reported_3sigma /= Td;
  }
  report.final_rmse = report.rmse(N);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

MonteCarloReport run_experiment(const ExperimentConfig& config) {
  const TrajectoryBatch batch = simulate_batch(config.scenario, config.n_trajectories, config.seed);
  return run_filter_batch(config, config.filter, batch);
}

namespace {

std::vector<std::string> indexed(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

void write_gains(const std::vector<Eigen::MatrixXd>& gains, const std::string& path) {
  if (gains.empty()) return;
  const Eigen::Index rows = gains.front().rows(), cols = gains.front().cols();
  std::vector<std::string> header{"step"};
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) header.push_back("L_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
  CsvWriter csv(path, header);
  for (std::size_t n = 0; n < gains.size(); ++n) {
    std::vector<double> v;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) v.push_back(gains[n](r, c));
    csv.row({std::to_string(n + 1)}, v);
  }
}

}  // namespace

void write_report(const MonteCarloReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const int d = report.dim;
  {
    std::vector<std::string> header{"step", "traj_id"};
    append(header, indexed("e", d));
    CsvWriter csv(out_dir + "/errors.csv", header);
    for (std::size_t t = 0; t < report.errors.size(); ++t) {
      for (int n = 0; n <= report.steps; ++n) {
        std::vector<double> v;
        for (int a = 0; a < d; ++a) v.push_back(report.errors[t](n, a));
        csv.row({std::to_string(n), std::to_string(t)}, v);
      }
    }
  }
  {
    std::vector<std::string> header{"step"};
    append(header, indexed("mean", d));
    append(header, indexed("std", d));
    header.push_back("rmse");
    append(header, indexed("coverage", d));
    append(header, indexed("reported_3sigma", d));
    CsvWriter csv(out_dir + "/envelope.csv", header);
    for (int n = 0; n <= report.steps; ++n) {
      std::vector<double> v;
      for (int a = 0; a < d; ++a) v.push_back(report.mean(n, a));
      for (int a = 0; a < d; ++a) v.push_back(report.std_dev(n, a));
      v.push_back(report.rmse(n));
      for (int a = 0; a < d; ++a) v.push_back(report.coverage(n, a));
      for (int a = 0; a < d; ++a) v.push_back(report.reported_3sigma(n, a));
      csv.row({std::to_string(n)}, v);
    }
  }
  write_gains(report.gains, out_dir + "/gains.csv");
  if (!report.covariances.empty()) {
    std::vector<std::string> header{"step"};
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) header.push_back("P_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    CsvWriter csv(out_dir + "/covariance.csv", header);
    for (std::size_t n = 0; n < report.covariances.size(); ++n) {
      std::vector<double> v;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) v.push_back(report.covariances[n](i, j));
      csv.row({std::to_string(n)}, v);
    }
  }
}

ComparisonResult compare_filters(const ExperimentConfig& config, const std::vector<FilterKind>& filters) {
  if (filters.empty()) throw ConfigError("compare needs at least one filter");
  const TrajectoryBatch batch = simulate_batch(config.scenario, config.n_trajectories, config.seed);
  std::optional<GainSchedule> schedule;
  ComparisonResult result;
  result.truth_hash = batch.truth_hash;
  for (FilterKind f : filters) {
    if (f == FilterKind::IEnKF && !schedule) schedule = offline_gains(config.scenario, config.settings.ienkf);
    result.reports.push_back(run_filter_batch(config, f, batch, schedule ? &*schedule : nullptr));
  }
  return result;
}

void write_comparison(const ComparisonResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> header{"step"};
  for (const auto& r : result.reports) {
    header.push_back("rmse_" + to_string(r.filter));
    header.push_back("coverage1_" + to_string(r.filter));
  }
  CsvWriter csv(out_dir + "/comparison.csv", header);
  const int N = result.reports.front().steps;
  for (int n = 0; n <= N; ++n) {
    std::vector<double> v;
    for (const auto& r : result.reports) {
      v.push_back(r.rmse(n));
      v.push_back(r.coverage(n, 0));
    }
    csv.row({std::to_string(n)}, v);
  }
}

double mean_coverage(const MonteCarloReport& report, int axis, int from, int to) {
  if (from < 0 || to > report.steps || from > to) throw ConfigError("coverage window out of range");
  double sum = 0.0;
  for (int n = from; n <= to; ++n) sum += report.coverage(n, axis);
  return sum / (to - from + 1);
}

}  // namespace invfilter
