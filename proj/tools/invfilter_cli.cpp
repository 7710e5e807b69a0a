#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invfilter/config.hpp"
#include "invfilter/csv.hpp"
#include "invfilter/errors.hpp"
#include "invfilter/experiment.hpp"
#include "invfilter/fixed_gain.hpp"
#include "invfilter/mekf.hpp"

using namespace invfilter;

namespace {

struct Common {
  std::string config = "exp-table3";
  std::string out = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> trajectories;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Preset name or config file")->capture_default_str();
  cmd->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--trajectories", c.trajectories, "Number of Monte-Carlo trajectories");
  cmd->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
}

Config resolve(const Common& c) {
  Config cfg = load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.trajectories) cfg.set("num_trajectories", std::to_string(*c.trajectories));
  return cfg;
}

void print_timing(const char* what, double seconds) {
  std::printf("%s: %.3f s\n", what, seconds);
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_presets(const std::string& out) {
  for (const auto& name : preset_names()) {
    std::cout << name << "\n";
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      std::ofstream f(out + "/" + name + ".cfg", std::ios::binary);
      f << preset(name).text();
      if (!f) throw ConfigError("cannot write " + out + "/" + name + ".cfg");
    }
  }
  return 0;
}

int cmd_simulate(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig e = experiment_from_config(resolve(c));
  const TrajectoryBatch batch = simulate_batch(e.scenario, e.n_trajectories, e.seed);
  std::filesystem::create_directories(c.out);
  const int m = e.scenario.descriptor.matrix_size();
  std::vector<std::string> th{"traj_id", "step"};
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < m; ++k) th.push_back("X_" + std::to_string(r + 1) + "_" + std::to_string(k + 1));
  CsvWriter truth(c.out + "/truth.csv", th);
  std::vector<std::string> oh{"traj_id", "step"};
  for (int i = 1; i <= e.scenario.output.obs_dim(); ++i) oh.push_back("y" + std::to_string(i));
  CsvWriter obs(c.out + "/observations.csv", oh);
  for (std::size_t t = 0; t < batch.trajectories.size(); ++t) {
    const Trajectory& tr = batch.trajectories[t];
    for (std::size_t n = 0; n < tr.truth.size(); ++n) {
      const Eigen::MatrixXd& X = tr.truth[n].matrix();
      std::vector<double> v;
      for (int r = 0; r < m; ++r)
        for (int k = 0; k < m; ++k) v.push_back(X(r, k));
      truth.row({std::to_string(t), std::to_string(n)}, v);
      if (n > 0) {
        const Eigen::VectorXd& y = tr.observations[n];
        obs.row({std::to_string(t), std::to_string(n)}, std::vector<double>(y.data(), y.data() + y.size()));
      }
    }
  }
  std::printf("simulated %d trajectories of %d steps (truth hash %016llx)\n", e.n_trajectories,
              e.scenario.horizon, static_cast<unsigned long long>(batch.truth_hash));
  print_timing("wall time", since(t0));
  return 0;
}

int cmd_filter(const Common& c, const std::string& filter, const std::string& load, const std::string& save) {
  const auto t0 = std::chrono::steady_clock::now();
  Config cfg = resolve(c);
  if (!filter.empty()) cfg.set("filter", filter);
  const ExperimentConfig e = experiment_from_config(cfg);
  const TrajectoryBatch batch = simulate_batch(e.scenario, e.n_trajectories, e.seed);
  std::optional<GainSchedule> schedule;
  if (e.filter == FilterKind::IEnKF) {
    schedule = load.empty() ? offline_gains(e.scenario, e.settings.ienkf) : load_schedule(load);
    if (!save.empty()) save_schedule(save, *schedule);
  } else if (!load.empty() || !save.empty()) {
    throw ConfigError("--load-schedule/--save-schedule apply to the ienkf filter only");
  }
  const MonteCarloReport r = run_filter_batch(e, e.filter, batch, schedule ? &*schedule : nullptr);
  write_report(r, c.out);
  std::printf("%s: final RMSE %.6g over %d trajectories\n", to_string(r.filter).c_str(), r.final_rmse,
              r.n_trajectories);
  print_timing("wall time", since(t0));
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& filters) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig e = experiment_from_config(resolve(c));
  std::vector<FilterKind> kinds;
  for (const auto& f : filters) kinds.push_back(parse_filter_kind(f));
  if (kinds.empty()) kinds = e.compare;
  if (kinds.empty()) kinds = {e.filter};
  const ComparisonResult result = compare_filters(e, kinds);
  write_comparison(result, c.out);
  for (const auto& r : result.reports) {
    write_report(r, c.out + "/" + to_string(r.filter));
    std::printf("%-16s final RMSE %.6g  (%.3f s)\n", to_string(r.filter).c_str(), r.final_rmse, r.wall_seconds);
  }
  print_timing("wall time", since(t0));
  return 0;
}

StationaryOptions stationary_options(const Config& cfg) {
  StationaryOptions o;
  o.burn_in = cfg.get_int("burn_in", o.burn_in);
  o.retain = cfg.get_int("retain", o.retain);
  o.chains = cfg.get_int("chains", o.chains);
  o.seed = cfg.get_u64("seed", o.seed);
  if (cfg.has("stationary_prior_std")) {
    const double s = cfg.get_double("stationary_prior_std");
    o.prior_cov = Eigen::MatrixXd::Identity(3, 3) * s * s;
  }
  return o;
}

int cmd_optimize(const Common& c, bool skip_mekf) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = resolve(c);
  const ExperimentConfig e = experiment_from_config(cfg);
  StationaryOptions opts = stationary_options(cfg);
  opts.keep_samples = false;
  const auto ks = log_grid(cfg.get_double("k_min", 0.02), cfg.get_double("k_max", 0.5), cfg.get_int("k_count", 10));
  const auto ls = log_grid(cfg.get_double("lambda_min", 5e-4), cfg.get_double("lambda_max", 0.1),
                           cfg.get_int("lambda_count", 10));
  const GridResult grid = grid_optimize_horizon(e.scenario, ks, ls, opts);
  std::filesystem::create_directories(c.out);
  write_surface_csv(c.out + "/surface.csv", grid);
  std::ofstream opt(c.out + "/optimum.txt", std::ios::binary);
  opt << "k = " << format_number(grid.best().k) << "\n"
      << "lambda = " << format_number(grid.best().lambda) << "\n"
      << "rmse = " << format_number(grid.best().rmse) << "\n";
  std::printf("fixed-gain optimum: k = %.4g, lambda = %.4g, RMSE = %.6g\n", grid.best().k, grid.best().lambda,
              grid.best().rmse);
  if (!skip_mekf) {
    MekfTuningOptions mo;
    mo.burn_in = opts.burn_in;
    mo.retain = opts.retain;
    mo.chains = opts.chains;
    mo.seed = opts.seed;
    const auto fs = log_grid(cfg.get_double("mekf_min", 1.0), cfg.get_double("mekf_max", 1e4),
                             cfg.get_int("mekf_count", 17));
    const MekfTuning tuning = tune_mekf_obs_noise(e.scenario, fs, mo);
    CsvWriter csv(c.out + "/mekf_tuning.csv", {"inflation", "rmse"});
    for (const auto& p : tuning.points) csv.values(p.inflation, p.rmse);
    opt << "mekf_inflation = " << format_number(tuning.best().inflation) << "\n"
        << "mekf_rmse = " << format_number(tuning.best().rmse) << "\n";
    std::printf("MEKF optimum: Qv inflation = %.4g, RMSE = %.6g\n", tuning.best().inflation, tuning.best().rmse);
  }
  print_timing("wall time", since(t0));
  return 0;
}

int cmd_stationary(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = resolve(c);
  const ExperimentConfig e = experiment_from_config(cfg);
  const OutputKind kind = e.scenario.output.kind();
  GainFunction gain = kind == OutputKind::TwoVector      ? GainFunction::two_vector(e.settings.two_vector)
                      : kind == OutputKind::SingleVector ? GainFunction::horizon(e.settings.horizon)
                                                         : throw ConfigError("stationary needs a vector output");
  StationaryOptions opts = stationary_options(cfg);
  opts.keep_samples = false;
  const StationaryReport r = estimate_stationary(e.scenario, gain, opts);
  std::filesystem::create_directories(c.out);
  CsvWriter csv(c.out + "/histogram.csv", {"axis", "bin_lo", "bin_hi", "count"});
  for (std::size_t a = 0; a < r.marginals.size(); ++a) {
    const Histogram& h = r.marginals[a];
    const double w = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      csv.row({std::to_string(a + 1), format_number(h.lo + w * static_cast<double>(b)),
               format_number(h.lo + w * static_cast<double>(b + 1)), std::to_string(h.counts[b])});
    }
  }
  std::ofstream s(c.out + "/summary.txt", std::ios::binary);
  s << "chains = " << r.chains << "\nburn_in = " << r.burn_in << "\nretain = " << r.retain
    << "\nsamples = " << r.n_samples << "\nrmse = " << format_number(r.rmse) << "\n";
  for (Eigen::Index a = 0; a < r.axis_rmse.size(); ++a)
    s << "axis" << a + 1 << "_rmse = " << format_number(r.axis_rmse(a)) << "\n";
  std::printf("stationary RMSE %.6g from %zu samples\n", r.rmse, r.n_samples);
  print_timing("wall time", since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant filtering on matrix Lie groups"};
  app.require_subcommand(1);

  Common common;
  std::string presets_out;
  auto* presets = app.add_subcommand("presets", "List the built-in presets");
  presets->add_option("-o,--out", presets_out, "Also write each preset as <name>.cfg here");

  auto* simulate = app.add_subcommand("simulate", "Simulate trajectories");
  add_common(simulate, common);

  std::string filter, load, save;
  auto* filt = app.add_subcommand("filter", "Run one filter over simulated trajectories");
  add_common(filt, common);
  filt->add_option("-f,--filter", filter, "iekf | ienkf | fixed-gain | mekf | asymptotic-iekf");
  filt->add_option("--load-schedule", load, "Reuse an IEnKF gain schedule");
  filt->add_option("--save-schedule", save, "Store the IEnKF gain schedule");

  std::vector<std::string> filters;
  auto* compare = app.add_subcommand("compare", "Run several filters on the same trajectories");
  add_common(compare, common);
  compare->add_option("-f,--filter", filters, "Filters to compare (defaults to the config's list)");

  bool skip_mekf = false;
  auto* optimize = app.add_subcommand("optimize-horizon", "Grid-search the horizon gain and tune the MEKF");
  add_common(optimize, common);
  optimize->add_flag("--skip-mekf", skip_mekf, "Skip the MEKF noise tuning");

  auto* stationary = app.add_subcommand("stationary", "Estimate the stationary error law of a fixed gain");
  add_common(stationary, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*presets) return cmd_presets(presets_out);
    if (*simulate) return cmd_simulate(common);
    if (*filt) return cmd_filter(common, filter, load, save);
    if (*compare) return cmd_compare(common, filters);
    if (*optimize) return cmd_optimize(common, skip_mekf);
    if (*stationary) return cmd_stationary(common);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const BranchError& e) {
    std::cerr << "branch error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
