#include "invfilter/ienkf.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "invfilter/csv.hpp"
#include "invfilter/errors.hpp"
#include "invfilter/filter_core.hpp"
#include "invfilter/iekf.hpp"
#include "invfilter/parallel.hpp"

namespace invfilter {

namespace {

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& rows, bool centered) {
  const auto m = static_cast<double>(rows.rows());
  if (!centered) return rows.transpose() * rows / m;
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd c = rows.rowwise() - mean;
  return c.transpose() * c / m;
}

}  // namespace

GainSchedule offline_gains(const Scenario& scenario, const IenkfOptions& options) {
  scenario.validate();
  if (options.particles < 2) throw ConfigError("IEnKF needs at least 2 particles");
  if (!(options.regularization >= 0.0)) throw ConfigError("IEnKF regularization must be >= 0");
  const DiscreteModel model = scenario.model();
  const GroupDescriptor& d = scenario.descriptor;
  const OutputMap& output = scenario.output;
  const int dim = d.algebra_dim();
  const int p = output.obs_dim();
  const auto M = static_cast<std::size_t>(options.particles);
  const Eigen::MatrixXd H = linearize(output).H_xi;
  const Eigen::VectorXd& h0 = output.h0();
  const NoiseSampler noise(scenario.noise, d, p, scenario.dt);
  const GaussianSampler prior(scenario.prior_cov);
  const GroupElement& upsilon = model.left(0);
  const GroupElement upsilon_inv = inverse(upsilon);

  GainSchedule schedule;
  schedule.descriptor = d;
  schedule.obs_dim = p;
  schedule.fingerprint = scenario.fingerprint();

  std::vector<RandomStream> streams;
  streams.reserve(M);
  for (std::size_t i = 0; i < M; ++i) streams.emplace_back(options.seed, i);

  std::vector<GroupElement> particles(M, GroupElement::identity(d));
  std::vector<std::size_t> resampled(M, 0);
  Eigen::MatrixXd logs(static_cast<Eigen::Index>(M), dim);
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(M), p);

  // Log of a particle; a particle at the rotation cut is redrawn from the prior.
  auto safe_log = [&](std::size_t i, GroupElement& eta) -> Eigen::VectorXd {
    for (;;) {
      try {
        return log_g(eta).coords;
      } catch (const BranchError&) {
        eta = exp_g(d, prior.sample(streams[i]));
        ++resampled[i];
      }
    }
  };

  parallel_for(M, [&](std::size_t i) {
    particles[i] = exp_g(d, prior.sample(streams[i]));
    logs.row(static_cast<Eigen::Index>(i)) = safe_log(i, particles[i]).transpose();
  });
  schedule.error_moments.push_back(second_moment(logs, options.centered));

  for (int n = 0; n < scenario.horizon; ++n) {
    parallel_for(M, [&](std::size_t i) {
      const GroupElement w = noise.process(streams[i]);
      const Eigen::VectorXd v = noise.observation(streams[i]);
      GroupElement pred = upsilon * w * particles[i] * upsilon_inv;
      logs.row(static_cast<Eigen::Index>(i)) = safe_log(i, pred).transpose();
      ys.row(static_cast<Eigen::Index>(i)) = output.evaluate(pred, v).transpose();
      particles[i] = std::move(pred);
    });
    const Eigen::MatrixXd P = second_moment(logs, options.centered);
    Eigen::MatrixXd S = second_moment(ys, options.centered);
    S += options.regularization * Eigen::MatrixXd::Identity(p, p);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw NumericalError("IEnKF innovation moment is singular at step " + std::to_string(n + 1));
    }
    const Eigen::MatrixXd L = ldlt.solve(H * P).transpose();
    if (!L.allFinite()) throw NumericalError("IEnKF gain is not finite at step " + std::to_string(n + 1));

    parallel_for(M, [&](std::size_t i) {
      const Eigen::VectorXd y = ys.row(static_cast<Eigen::Index>(i)).transpose();
      particles[i] = particles[i] * exp_g(d, -(L * (y - h0)));
      logs.row(static_cast<Eigen::Index>(i)) = safe_log(i, particles[i]).transpose();
    });
    schedule.predicted_moments.push_back(P);
    schedule.error_moments.push_back(second_moment(logs, options.centered));
    schedule.gains.push_back(L);
  }
  for (std::size_t r : resampled) schedule.resampled += r;
  return schedule;
}

std::vector<GroupElement> apply_schedule(const Scenario& scenario, const Trajectory& trajectory,
                                         const GainSchedule& schedule, const GroupElement& estimate0) {
  if (schedule.fingerprint != scenario.fingerprint()) {
    throw ConfigError("gain schedule was computed for a different scenario");
  }
  if (schedule.horizon() < trajectory.steps()) throw ConfigError("gain schedule is shorter than the trajectory");
  const DiscreteModel model = scenario.model();
  std::vector<GainFunction> gains;
  gains.reserve(schedule.gains.size());
  for (const auto& L : schedule.gains) gains.push_back(GainFunction::linear_exp(schedule.descriptor, L, scenario.output.h0()));
  return run_filter(model, trajectory, estimate0,
                    [&gains](int n) -> const GainFunction& { return gains.at(static_cast<std::size_t>(n) - 1); });
}

void save_schedule(const std::string& path, const GainSchedule& schedule) {
  const int dim = schedule.descriptor.algebra_dim();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << "group_id,N,p,algebra_dim,fingerprint\n";
  out << schedule.descriptor.name() << ',' << schedule.horizon() << ',' << schedule.obs_dim << ',' << dim << ','
      << schedule.fingerprint << '\n';
  out << "step";
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < schedule.obs_dim; ++c) out << ",L_" << r + 1 << '_' << c + 1;
  out << '\n';
  for (std::size_t n = 0; n < schedule.gains.size(); ++n) {
    out << n + 1;
    const Eigen::MatrixXd& L = schedule.gains[n];
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < schedule.obs_dim; ++c) out << ',' << format_number(L(r, c));
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

template <typename T>
T parse_cell(const std::string& s, const std::string& path) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(path + ": cannot parse '" + s + "'");
  }
  return value;
}

}  // namespace

GainSchedule load_schedule(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "group_id,N,p,algebra_dim,fingerprint") throw ConfigError(path + ": not a gain schedule");
  std::getline(in, line);
  const auto head = split_commas(line);
  if (head.size() != 5) throw ConfigError(path + ": malformed schedule header");
  GainSchedule s;
  s.descriptor = GroupDescriptor::parse(head[0]);
  const int N = parse_cell<int>(head[1], path);
  s.obs_dim = parse_cell<int>(head[2], path);
  const int dim = parse_cell<int>(head[3], path);
  s.fingerprint = parse_cell<std::uint64_t>(head[4], path);
  if (dim != s.descriptor.algebra_dim() || N < 0 || s.obs_dim < 1) throw ConfigError(path + ": inconsistent header");
  std::getline(in, line);  // column names
  for (int n = 0; n < N; ++n) {
    if (!std::getline(in, line)) throw ConfigError(path + ": missing gain rows");
    const auto cells = split_commas(line);
    if (cells.size() != static_cast<std::size_t>(1 + dim * s.obs_dim)) throw ConfigError(path + ": malformed gain row");
    if (parse_cell<int>(cells[0], path) != n + 1) throw ConfigError(path + ": gain rows out of order");
    Eigen::MatrixXd L(dim, s.obs_dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < s.obs_dim; ++c)
        L(r, c) = parse_cell<double>(cells[static_cast<std::size_t>(1 + r * s.obs_dim + c)], path);
    s.gains.push_back(std::move(L));
  }
  return s;
}

}  // namespace invfilter
