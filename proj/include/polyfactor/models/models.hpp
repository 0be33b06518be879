#ifndef POLYFACTOR_MODELS_MODELS_HPP
#define POLYFACTOR_MODELS_MODELS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "polyfactor/gaussian/linalg.hpp"
#include "polyfactor/inference/model.hpp"

namespace polyfactor {

/// The alarm network over binary B, E, A, J, M (state 1 = true) with the textbook CPTs.
[[nodiscard]] FactorGraphModel burglary_model();

/// x₀ ~ N(m0, P0), x_t = A x_{t−1} + w, w ~ N(0, Q), y_t = C x_t + v, v ~ N(0, R).
/// State variables are X1..Xd and observations Y1..Yk.
struct LinearGaussianConfig {
  Matrix transition;
  Matrix process_noise;
  Matrix emission;
  Matrix observation_noise;
  Vector initial_mean;
  Matrix initial_covariance;

  /// Throws ConfigInvalid on shape mismatches or covariances that are not positive definite.
  void validate() const;
};

[[nodiscard]] StateSpaceModel linear_gaussian_model(const LinearGaussianConfig& cfg);

/// Discrete HMM with hidden H and observed symbol O:
/// prior[i], transition[i][j] = P(H_t = j | H_{t−1} = i), emission[i][k] = P(O = k | H = i).
struct HmmConfig {
  std::vector<double> prior;
  std::vector<std::vector<double>> transition;
  std::vector<std::vector<double>> emission;

  void validate() const;
};

[[nodiscard]] StateSpaceModel hmm_model(const HmmConfig& cfg);

/// Switching model on the plane: the quadrant S_{t−1} of the previous position selects
/// the drift of F_t, and S_t is the quadrant containing F_t.
struct QuadrantConfig {
  std::array<std::array<double, 2>, 4> drifts;
  Matrix process_noise;
  Matrix observation_noise;
  double step = 0.1;
  std::array<double, 2> start{1.0, 0.0};
  Matrix start_covariance;
  std::size_t horizon = 200;
  std::uint64_t seed = 1;

  /// Counterclockwise drifts, Q = 0.01·I, R = 0.05·I, Δ = 0.1, start (1, 0) with covariance 0.01·I.
  static QuadrantConfig defaults();
  /// defaults() with Q = 0.001·I and R = 0.01·I.
  static QuadrantConfig low_noise();

  /// Throws ConfigInvalid when a covariance is not symmetric positive definite or a value is out of range.
  void validate() const;
};

/// State (S, F1, F2) with S ∈ {0..3} numbered 0 = (+,+), 1 = (−,+), 2 = (−,−), 3 = (+,−);
/// observations (Y1, Y2).
///
/// prior       = 1[S = quadrant(F)] · N(F; start, start_covariance)
/// transition  = [F_t | F_{t−1}, S_{t−1} = s ~ N(F_{t−1} + Δ·d_s, Q)] · 1[S_t = quadrant(F_t)]
/// observation = N(Y; F, R)
[[nodiscard]] StateSpaceModel quadrant_model(const QuadrantConfig& cfg);

/// Index of the quadrant containing (x, y) under the half-open convention.
[[nodiscard]] std::size_t quadrant_of(double x, double y);

struct Simulation {
  std::vector<Assignment> states;        ///< x_1..x_T
  std::vector<Assignment> observations;  ///< y_1..y_T
};

/// Ancestral sampling x₀ ~ prior, x_t ~ transition(x_{t−1}, ·), y_t ~ observation(x_t, ·).
/// Deterministic per seed; Unsupported when a factor cannot be sampled.
[[nodiscard]] Simulation simulate(const StateSpaceModel& model, std::size_t steps, std::uint64_t seed);

/// Column order used by the CSV writers: discrete variables first, then continuous, each by name.
[[nodiscard]] std::vector<Variable> column_order(const Scope& scope);

/// Header `t,<state>_true...,<observed>...` (lower-case names), one row per step, 17 significant digits.
void write_simulation_csv(std::ostream& out, const StateSpaceModel& model, const Simulation& sim);

/// Observations read back from a simulation CSV (columns named after the observed variables).
[[nodiscard]] std::vector<Assignment> read_observations_csv(std::istream& in, const StateSpaceModel& model);

/// Observations plus, when every `<state>_true` column is present, the true states
/// (`states` is left empty otherwise).
[[nodiscard]] Simulation read_simulation_csv(std::istream& in, const StateSpaceModel& model);

}  // namespace polyfactor

#endif
