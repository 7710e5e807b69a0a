#include "invfilter/fixed_gain.hpp"

#include <algorithm>
#include <cmath>

#include "invfilter/csv.hpp"
#include "invfilter/errors.hpp"
#include "invfilter/parallel.hpp"
#include "invfilter/so3.hpp"

namespace invfilter {

std::vector<GroupElement> noiseless_iterate(const GroupElement& gamma0, const GainFunction& gain,
                                            const GroupElement& upsilon, const OutputMap& output, int steps) {
  if (steps < 0) throw ConfigError("noiseless_iterate needs steps >= 0");
  const GroupElement upsilon_inv = inverse(upsilon);
  std::vector<GroupElement> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(gamma0);
  for (int n = 0; n < steps; ++n) {
    const GroupElement pred = upsilon * out.back() * upsilon_inv;
    out.push_back(pred * inverse(gain(output.evaluate(pred))));
  }
  return out;
}

double lyapunov_E(const Eigen::Matrix3d& gamma, const TwoVectorGainParams& p) {
  return p.k1 * (gamma.transpose() * p.b1 - p.b1).squaredNorm() +
         p.k2 * (gamma.transpose() * p.b2 - p.b2).squaredNorm();
}

double lyapunov_E(const GroupElement& gamma, const TwoVectorGainParams& p) {
  if (gamma.descriptor().id() != GroupId::SO3) throw DimensionError("lyapunov_E is defined on SO3");
  return lyapunov_E(Eigen::Matrix3d(gamma.matrix()), p);
}

namespace {

Eigen::Vector3d tilt_vector(const Eigen::Matrix3d& eta, const Eigen::Vector3d& g) {
  const Eigen::Vector3d gn = g.normalized();
  const Eigen::Vector3d u = eta.transpose() * gn;
  const Eigen::Vector3d c = u.cross(gn);
  const double n = c.norm();
  if (n < kHorizonDegenerate) return Eigen::Vector3d::Zero();
  return (so3::angle_between(u, gn) / n) * c;
}

double horizon_squared_error(const Eigen::Matrix3d& eta, const Eigen::Vector3d& g) {
  return (eta * g - g).squaredNorm();
}

}  // namespace

Eigen::VectorXd stationary_coordinates(const GroupElement& eta, const OutputMap& output) {
  if (output.kind() == OutputKind::SingleVector) {
    return tilt_vector(eta.matrix(), output.g_ref());
  }
  return log_g(eta).coords;
}

double stationary_squared_error(const GroupElement& eta, const OutputMap& output) {
  if (output.kind() == OutputKind::SingleVector) return horizon_squared_error(eta.matrix(), output.g_ref());
  return log_g(eta).coords.squaredNorm();
}

namespace {

/// Stream index offset of the prior draws; chains use indices [0, chains).
constexpr std::uint64_t kPriorStreamOffset = std::uint64_t{1} << 40;

struct ChainAccumulator {
  double sum_sq = 0.0;
  Eigen::VectorXd axis_sum_sq;
};

/// Fixed-size SO3 chain for the two built-in attitude outputs. Draws follow
/// NoiseSampler exactly, so it reproduces the generic recursion.
template <int P>
class So3Chain {
 public:
  So3Chain(const Scenario& s, const GainFunction& gain, const NoiseSampler& noise, const GroupElement& upsilon)
      : output_(s.output), gain_(gain) {
    upsilon_ = upsilon.matrix();
    upsilon_identity_ = upsilon_.isIdentity(0.0);
    proc_factor_ = noise.process_sampler().factor();
    obs_factor_ = noise.observation_sampler().factor();
    outlier_ = noise.outlier();
    if constexpr (P == 6) {
      b1_ = s.output.b1();
      b2_ = s.output.b2();
    } else {
      b1_ = s.output.g_ref();
    }
  }

  Eigen::Matrix3d step(const Eigen::Matrix3d& eta, RandomStream& rng) const {
    const Eigen::Vector3d w = proc_factor_ * rng.gaussian_fixed<3>();
    Eigen::Matrix3d pred = so3::compose(so3::exp(w), eta);
    if (!upsilon_identity_) pred = so3::compose(so3::compose(upsilon_, pred), upsilon_.transpose());

    Eigen::Matrix<double, P, 1> v = obs_factor_ * rng.gaussian_fixed<P>();
    const double u = rng.uniform();
    const Eigen::Matrix<double, P, 1> extra = rng.gaussian_fixed<P>();
    if (u < outlier_.probability) v += outlier_.std_dev * extra;

    const Eigen::Matrix3d pt = pred.transpose();
    Eigen::Matrix3d k;
    if constexpr (P == 6) {
      k = two_vector_gain_matrix(pt * (b1_ + v.template head<3>()), pt * (b2_ + v.template tail<3>()),
                                 *gain_.as_two_vector());
    } else {
      k = horizon_gain_matrix(pt * (b1_ + v), *gain_.as_horizon());
    }
    return so3::compose(pred, k.transpose());
  }

 private:
  const OutputMap& output_;
  const GainFunction& gain_;
  Eigen::Matrix3d upsilon_;
  bool upsilon_identity_ = false;
  Eigen::Matrix3d proc_factor_;
  Eigen::Matrix<double, P, P> obs_factor_;
  OutlierSpec outlier_;
  Eigen::Vector3d b1_, b2_;
};

bool has_fast_path(const Scenario& s, const GainFunction& gain) {
  if (s.descriptor.id() != GroupId::SO3) return false;
  if (s.output.kind() == OutputKind::SingleVector && gain.as_horizon()) return true;
  return s.output.kind() == OutputKind::TwoVector && gain.as_two_vector();
}

template <typename StepFn, typename CoordFn, typename ErrFn>
void run_chain(Eigen::Matrix3d eta, RandomStream& rng, int burn_in, int retain, StepFn&& step,
               CoordFn&& coords, ErrFn&& sq_err, ChainAccumulator& acc, Eigen::MatrixXd* samples,
               Eigen::Index row0) {
  for (int n = 0; n < burn_in; ++n) eta = step(eta, rng);
  for (int j = 0; j < retain; ++j) {
    eta = step(eta, rng);
    const Eigen::Vector3d c = coords(eta);
    acc.sum_sq += sq_err(eta);
    acc.axis_sum_sq += c.cwiseAbs2();
    if (samples) samples->row(row0 + j) = c.transpose();
  }
}

void fill_marginals(StationaryReport& report, const StationaryOptions& options) {
  if (report.samples.rows() == 0 || options.histogram_bins < 1) return;
  for (Eigen::Index a = 0; a < report.samples.cols(); ++a) {
    Histogram h;
    double half = options.histogram_range;
    if (!(half > 0.0)) half = 5.0 * report.axis_rmse(a);
    if (!(half > 0.0)) half = 1e-12;
    h.lo = -half;
    h.hi = half;
    h.counts.assign(static_cast<std::size_t>(options.histogram_bins), 0);
    const double width = (h.hi - h.lo) / options.histogram_bins;
    for (Eigen::Index i = 0; i < report.samples.rows(); ++i) {
      const double x = report.samples(i, a);
      if (x < h.lo || x >= h.hi) continue;
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>((x - h.lo) / width),
                                             h.counts.size() - 1);
      ++h.counts[bin];
    }
    report.marginals.push_back(std::move(h));
  }
}

}  // namespace

StationaryReport estimate_stationary(const Scenario& scenario, const GainFunction& gain,
                                     const StationaryOptions& options) {
  scenario.validate();
  if (options.chains < 1 || options.retain < 1 || options.burn_in < 0) {
    throw ConfigError("stationary estimation needs chains >= 1, retain >= 1 and burn_in >= 0");
  }
  if (!(gain.descriptor() == scenario.descriptor) || gain.input_dim() != scenario.output.obs_dim()) {
    throw DimensionError("gain function does not match the scenario");
  }
  const DiscreteModel model = scenario.model();
  const NoiseSampler noise(scenario.noise, scenario.descriptor, scenario.output.obs_dim(), scenario.dt);
  const GaussianSampler prior(options.prior_cov ? *options.prior_cov : scenario.prior_cov);
  if (prior.dim() != scenario.descriptor.algebra_dim()) throw DimensionError("prior covariance size mismatch");

  const int coord_dim = scenario.output.kind() == OutputKind::SingleVector ? 3 : scenario.descriptor.algebra_dim();
  StationaryReport report;
  report.burn_in = options.burn_in;
  report.retain = options.retain;
  report.chains = options.chains;
  report.n_samples = static_cast<std::size_t>(options.chains) * static_cast<std::size_t>(options.retain);
  if (options.keep_samples) report.samples.resize(static_cast<Eigen::Index>(report.n_samples), coord_dim);
  Eigen::MatrixXd* samples = options.keep_samples ? &report.samples : nullptr;

  std::vector<ChainAccumulator> acc(static_cast<std::size_t>(options.chains));
  for (auto& a : acc) a.axis_sum_sq = Eigen::VectorXd::Zero(coord_dim);

  const bool fast = has_fast_path(scenario, gain);
  const OutputMap& output = scenario.output;
  const GroupElement& upsilon = model.left(0);

  parallel_for(static_cast<std::size_t>(options.chains), [&](std::size_t c) {
    RandomStream prior_rng(options.seed, kPriorStreamOffset + c);
    RandomStream rng(options.seed, c);
    const GroupElement eta0 = exp_g(scenario.descriptor, prior.sample(prior_rng));
    const auto row0 = static_cast<Eigen::Index>(c) * options.retain;
    if (fast) {
      const Eigen::Matrix3d e0 = eta0.matrix();
      if (output.kind() == OutputKind::SingleVector) {
        const So3Chain<3> chain(scenario, gain, noise, upsilon);
        const Eigen::Vector3d g = output.g_ref();
        run_chain(
            e0, rng, options.burn_in, options.retain,
            [&](const Eigen::Matrix3d& e, RandomStream& r) { return chain.step(e, r); },
            [&](const Eigen::Matrix3d& e) { return tilt_vector(e, g); },
            [&](const Eigen::Matrix3d& e) { return horizon_squared_error(e, g); }, acc[c], samples, row0);
      } else {
        const So3Chain<6> chain(scenario, gain, noise, upsilon);
        run_chain(
            e0, rng, options.burn_in, options.retain,
            [&](const Eigen::Matrix3d& e, RandomStream& r) { return chain.step(e, r); },
            [](const Eigen::Matrix3d& e) { return so3::log(e); },
            [](const Eigen::Matrix3d& e) { return so3::log(e).squaredNorm(); }, acc[c], samples, row0);
      }
      return;
    }
    GroupElement eta = eta0;
    for (int n = 0; n < options.burn_in + options.retain; ++n) {
      const GroupElement w = noise.process(rng);
      const Eigen::VectorXd v = noise.observation(rng);
      eta = propagate_error(eta, w, v, upsilon, gain, output).eta;
      if (n < options.burn_in) continue;
      const Eigen::VectorXd coords = stationary_coordinates(eta, output);
      acc[c].sum_sq += stationary_squared_error(eta, output);
      acc[c].axis_sum_sq += coords.cwiseAbs2();
      if (samples) samples->row(row0 + (n - options.burn_in)) = coords.transpose();
    }
  });

  double total = 0.0;
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(coord_dim);
  for (const auto& a : acc) {
    total += a.sum_sq;
    axis += a.axis_sum_sq;
  }
  const auto n = static_cast<double>(report.n_samples);
  report.rmse = std::sqrt(total / n);
  report.axis_rmse = (axis / n).cwiseSqrt();
  fill_marginals(report, options);
  return report;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("log grid needs n >= 1 and 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

GridResult grid_optimize_horizon(const Scenario& scenario, const std::vector<double>& k_grid,
                                 const std::vector<double>& lambda_grid, const StationaryOptions& options) {
  if (k_grid.empty() || lambda_grid.empty()) throw ConfigError("gain grid is empty");
  if (scenario.output.kind() != OutputKind::SingleVector) {
    throw ConfigError("horizon gain search needs a single_vector output");
  }
  StationaryOptions opt = options;
  opt.keep_samples = false;
  GridResult result;
  result.surface.reserve(k_grid.size() * lambda_grid.size());
  for (double k : k_grid) {
    for (double lambda : lambda_grid) {
      const GainFunction gain = GainFunction::horizon(HorizonGainParams{k, lambda, scenario.output.g_ref()});
      const StationaryReport r = estimate_stationary(scenario, gain, opt);
      result.surface.push_back(GridPoint{k, lambda, r.rmse, r.n_samples});
    }
  }
  for (std::size_t i = 1; i < result.surface.size(); ++i) {
    if (result.surface[i].rmse < result.surface[result.best_index].rmse) result.best_index = i;
  }
  return result;
}

void write_surface_csv(const std::string& path, const GridResult& result) {
  CsvWriter csv(path, {"k", "lambda", "rmse", "n_samples"});
  for (const auto& p : result.surface) csv.values(p.k, p.lambda, p.rmse, p.n_samples);
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("wasserstein1 needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |Qa(t) - Qb(t)| over t in [0, 1] across the merged breakpoints.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double t = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ta = static_cast<double>(i + 1) / na;
    const double tb = static_cast<double>(j + 1) / nb;
    const double next = std::min(ta, tb);
    total += (next - t) * std::abs(a[i] - b[j]);
    t = next;
    if (ta <= next) ++i;
    if (tb <= next) ++j;
  }
  return total;
}

}  // namespace invfilter
