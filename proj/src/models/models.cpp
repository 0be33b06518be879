#include "polyfactor/models/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/hybrid/conditional_factor.hpp"
#include "polyfactor/hybrid/indicator_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    fail(ErrorCode::config_invalid, message);
  }
}

void require_spd(const Matrix& m, Eigen::Index n, const std::string& what) {
  require(m.rows() == n && m.cols() == n, fmt::format("{} must be {}×{}, got {}×{}", what, n, n, m.rows(), m.cols()));
  require(m.allFinite() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
          what + " must be symmetric");
  require(SpdFactor::is_spd(m), what + " must be positive definite");
}

void require_distribution(const std::vector<double>& p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, what + " has a negative or non-finite entry");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-9, fmt::format("{} sums to {}, not 1", what, total));
}

std::vector<Variable> numbered(const std::string& stem, Eigen::Index n) {
  std::vector<Variable> vars;
  for (Eigen::Index i = 0; i < n; ++i) {
    vars.push_back(Variable::continuous(stem + std::to_string(i + 1)));
  }
  return vars;
}

std::vector<Variable> previous_of(const std::vector<Variable>& vars) {
  std::vector<Variable> out;
  for (const auto& v : vars) {
    out.push_back(v.renamed(previous_name(v.name())));
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  return out;
}

}  // namespace

FactorGraphModel burglary_model() {
  const auto B = Variable::discrete("B", 2);
  const auto E = Variable::discrete("E", 2);
  const auto A = Variable::discrete("A", 2);
  const auto J = Variable::discrete("J", 2);
  const auto M = Variable::discrete("M", 2);
  FactorGraphModel m;
  m.name = "burglary";
  m.description = "Alarm network with the textbook conditional probability tables (state 1 = true)";
  m.variables = {B, E, A, J, M};
  m.factors = {
      TableFactor::make({B}, {0.999, 0.001}),
      TableFactor::make({E}, {0.998, 0.002}),
      // P(A | B, E), rows (B, E) = 00, 01, 10, 11.
      TableFactor::make({B, E, A}, {0.999, 0.001, 0.71, 0.29, 0.06, 0.94, 0.05, 0.95}),
      TableFactor::make({A, J}, {0.95, 0.05, 0.10, 0.90}),
      TableFactor::make({A, M}, {0.99, 0.01, 0.30, 0.70}),
  };
  return m;
}

void LinearGaussianConfig::validate() const {
  const Eigen::Index d = transition.rows();
  const Eigen::Index k = emission.rows();
  require(d > 0 && transition.cols() == d, "transition must be a non-empty square matrix");
  require(k > 0 && emission.cols() == d, fmt::format("emission must be k×{}", d));
  require(initial_mean.size() == d, fmt::format("initial mean must have {} entries", d));
  require(transition.allFinite() && emission.allFinite() && initial_mean.allFinite(), "parameters must be finite");
  require_spd(process_noise, d, "process noise");
  require_spd(observation_noise, k, "observation noise");
  require_spd(initial_covariance, d, "initial covariance");
}

StateSpaceModel linear_gaussian_model(const LinearGaussianConfig& cfg) {
  cfg.validate();
  const auto xs = numbered("X", cfg.transition.rows());
  const auto ys = numbered("Y", cfg.emission.rows());
  StateSpaceModel m{
      .name = "linear-gaussian",
      .description = fmt::format("{}-dimensional linear-Gaussian state-space model", xs.size()),
      .state = Scope(xs),
      .observed = Scope(ys),
      .prior = CanonicalGaussian::from_moments(xs, cfg.initial_mean, cfg.initial_covariance, 0.0),
      .transition = CanonicalGaussian::linear_gaussian(previous_of(xs), xs, cfg.transition,
                                                       Vector::Zero(cfg.transition.rows()), cfg.process_noise),
      .observation = CanonicalGaussian::linear_gaussian(xs, ys, cfg.emission, Vector::Zero(cfg.emission.rows()),
                                                        cfg.observation_noise),
  };
  m.validate();
  return m;
}

void HmmConfig::validate() const {
  const std::size_t n = prior.size();
  require(n > 0, "HMM needs at least one hidden state");
  require_distribution(prior, "prior");
  require(transition.size() == n, "transition must have one row per hidden state");
  for (std::size_t i = 0; i < n; ++i) {
    require(transition[i].size() == n, fmt::format("transition row {} must have {} entries", i, n));
    require_distribution(transition[i], fmt::format("transition row {}", i));
  }
  require(emission.size() == n && !emission[0].empty(), "emission must have one non-empty row per hidden state");
  for (std::size_t i = 0; i < n; ++i) {
    require(emission[i].size() == emission[0].size(), "emission rows must have equal length");
    require_distribution(emission[i], fmt::format("emission row {}", i));
  }
}

StateSpaceModel hmm_model(const HmmConfig& cfg) {
  cfg.validate();
  const auto H = Variable::discrete("H", cfg.prior.size());
  const auto O = Variable::discrete("O", cfg.emission[0].size());
  std::vector<double> trans;
  std::vector<double> emit;
  for (const auto& row : cfg.transition) {
    trans.insert(trans.end(), row.begin(), row.end());
  }
  for (const auto& row : cfg.emission) {
    emit.insert(emit.end(), row.begin(), row.end());
  }
  StateSpaceModel m{
      .name = "hmm",
      .description = "Discrete hidden Markov model",
      .state = Scope{H},
      .observed = Scope{O},
      .prior = TableFactor::make({H}, cfg.prior),
      .transition = TableFactor::make({H.renamed(previous_name("H")), H}, trans),
      .observation = TableFactor::make({H, O}, emit),
  };
  m.validate();
  return m;
}

QuadrantConfig QuadrantConfig::defaults() {
  const double r = 1.0 / std::sqrt(2.0);
  QuadrantConfig cfg;
  cfg.drifts = {{{-r, r}, {-r, -r}, {r, -r}, {r, r}}};
  cfg.process_noise = 0.01 * Matrix::Identity(2, 2);
  cfg.observation_noise = 0.05 * Matrix::Identity(2, 2);
  cfg.start_covariance = 0.01 * Matrix::Identity(2, 2);
  return cfg;
}

QuadrantConfig QuadrantConfig::low_noise() {
  QuadrantConfig cfg = defaults();
  cfg.process_noise = 0.001 * Matrix::Identity(2, 2);
  cfg.observation_noise = 0.01 * Matrix::Identity(2, 2);
  return cfg;
}

void QuadrantConfig::validate() const {
  for (const auto& d : drifts) {
    require(std::isfinite(d[0]) && std::isfinite(d[1]), "drift vectors must be finite");
  }
  require(std::isfinite(step) && step >= 0.0, "step scale must be finite and nonnegative");
  require(std::isfinite(start[0]) && std::isfinite(start[1]), "start must be finite");
  require(horizon > 0, "horizon must be positive");
  require_spd(process_noise, 2, "process noise");
  require_spd(observation_noise, 2, "observation noise");
  require_spd(start_covariance, 2, "start covariance");
}

std::size_t quadrant_of(double x, double y) {
  if (y >= 0.0) {
    return x >= 0.0 ? 0 : 1;
  }
  return x >= 0.0 ? 3 : 2;
}

StateSpaceModel quadrant_model(const QuadrantConfig& cfg) {
  cfg.validate();
  const auto S = Variable::discrete("S", 4);
  const auto F1 = Variable::continuous("F1");
  const auto F2 = Variable::continuous("F2");
  const auto Y1 = Variable::continuous("Y1");
  const auto Y2 = Variable::continuous("Y2");
  const std::vector<Variable> f{F1, F2};
  const std::vector<Variable> f_prev = previous_of(f);
  const auto S_prev = S.renamed(previous_name("S"));

  const Factor start = CanonicalGaussian::from_moments(f, (Vector(2) << cfg.start[0], cfg.start[1]).finished(),
                                                       cfg.start_covariance, 0.0);
  const Factor dynamics =
      ConditionalFactor::build(Scope{S_prev}, Scope{F1, F2, f_prev[0], f_prev[1]}, [&](const Assignment& a) {
        const auto& d = cfg.drifts[a.index(S_prev)];
        const Vector offset = (Vector(2) << cfg.step * d[0], cfg.step * d[1]).finished();
        return CanonicalGaussian::linear_gaussian(f_prev, f, Matrix::Identity(2, 2), offset, cfg.process_noise);
      });
  StateSpaceModel m{
      .name = "quadrant",
      .description = "Quadrant-switching drift model on the plane",
      .state = Scope{S, F1, F2},
      .observed = Scope{Y1, Y2},
      .prior = multiply(quadrant_indicator(S, F1, F2), start),
      .transition = multiply(dynamics, quadrant_indicator(S, F1, F2)),
      .observation = CanonicalGaussian::linear_gaussian(f, {Y1, Y2}, Matrix::Identity(2, 2), Vector::Zero(2),
                                                        cfg.observation_noise),
  };
  m.validate();
  return m;
}

Simulation simulate(const StateSpaceModel& model, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  Simulation sim;
  const Scope prev = previous_scope(model.state);
  const auto prior = model.prior.impl().make_sampler(Scope{});
  const Scope given_t = model.transition.scope().intersect(prev);
  const auto trans = model.transition.impl().make_sampler(given_t);
  const Scope given_o = model.observation.scope().intersect(model.state);
  const auto obs = model.observation.impl().make_sampler(given_o);

  auto to_assignment = [](const Scope& scope, const std::vector<double>& values) {
    Assignment a;
    for (std::size_t i = 0; i < scope.size(); ++i) {
      a.set(scope[i].name(), values[i]);
    }
    return a;
  };
  auto draw = [&rng](const ConditionalSampler& s, const std::vector<double>& given, const char* what) {
    std::vector<double> out(s.drawn_scope().size());
    if (!(s.draw(given, out, rng) > -std::numeric_limits<double>::infinity())) {
      fail(ErrorCode::degenerate, std::string("simulation reached a state with zero ") + what + " mass");
    }
    return out;
  };

  Assignment x = to_assignment(prior->drawn_scope(), draw(*prior, {}, "prior"));
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> g;
    for (const auto& v : given_t) {
      g.push_back(*x.find(std::string_view(v.name()).substr(0, v.name().size() - kPreviousSuffix.size())));
    }
    x = to_assignment(trans->drawn_scope(), draw(*trans, g, "transition"));
    sim.observations.push_back(
        to_assignment(obs->drawn_scope(), draw(*obs, x.values_for(given_o), "observation")));
    sim.states.push_back(x);
  }
  return sim;
}

std::vector<Variable> column_order(const Scope& scope) {
  std::vector<Variable> out = scope.discrete_part().vars();
  const Scope c = scope.continuous_part();
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

void write_simulation_csv(std::ostream& out, const StateSpaceModel& model, const Simulation& sim) {
  const auto state = column_order(model.state);
  const auto observed = column_order(model.observed);
  out << "t";
  for (const auto& v : state) {
    out << ',' << lower(v.name()) << "_true";
  }
  for (const auto& v : observed) {
    out << ',' << lower(v.name());
  }
  out << '\n';
  for (std::size_t t = 0; t < sim.states.size(); ++t) {
    out << t + 1;
    for (const auto& v : state) {
      out << fmt::format(",{:.17g}", sim.states[t].at(v));
    }
    for (const auto& v : observed) {
      out << fmt::format(",{:.17g}", sim.observations[t].at(v));
    }
    out << '\n';
  }
}

Simulation read_simulation_csv(std::istream& in, const StateSpaceModel& model) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::parse_error, "observation file is empty");
  }
  const auto header = split_csv(line);
  const auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::pair<Variable, std::size_t>> observed;
  for (const auto& v : model.observed) {
    const auto col = column_of(lower(v.name()));
    if (!col) {
      fail(ErrorCode::schema_error, "observation file has no column '" + lower(v.name()) + "'");
    }
    observed.emplace_back(v, *col);
  }
  std::vector<std::pair<Variable, std::size_t>> truth;
  for (const auto& v : model.state) {
    if (const auto col = column_of(lower(v.name()) + "_true")) {
      truth.emplace_back(v, *col);
    }
  }
  const bool with_states = truth.size() == model.state.size();

  const auto fill = [](Assignment& a, const std::vector<std::pair<Variable, std::size_t>>& columns,
                       const std::vector<std::string>& cells, std::size_t line_no) {
    for (const auto& [v, col] : columns) {
      double value = 0.0;
      const std::string& cell = col < cells.size() ? cells[col] : std::string();
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        fail(ErrorCode::parse_error,
             fmt::format("line {}, column {}: '{}' is not a number", line_no, col + 1, cell));
      }
      check_value(v, value);
      a.set(v.name(), value);
    }
  };

  Simulation out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto cells = split_csv(line);
    Assignment y;
    fill(y, observed, cells, line_no);
    out.observations.push_back(std::move(y));
    if (with_states) {
      Assignment x;
      fill(x, truth, cells, line_no);
      out.states.push_back(std::move(x));
    }
  }
  return out;
}

std::vector<Assignment> read_observations_csv(std::istream& in, const StateSpaceModel& model) {
  return read_simulation_csv(in, model).observations;
}

}  // namespace polyfactor
