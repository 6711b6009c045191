#pragma once

// Gramian constructions:
//  - Lall empirical gramians (impulse / initial-state ensembles, centered outer products),
//  - LTV gramians from the fundamental solution integrated forward and backward,
//  - bilinear gramians from the exact impulse response of a nilpotent bilinear system,
//  - nonlinear gramians built on the state-space averaged fundamental solution <Theta(t)>.
//
// Improper integrals are truncated at QuadratureConfig::horizon; the quadrature nodes double
// as the simulation grid, so every member trajectory is sampled exactly at the nodes.

#include <string>
#include <vector>

#include "embalance/linalg.hpp"
#include "embalance/model.hpp"
#include "embalance/ode.hpp"
#include "embalance/parallel.hpp"

namespace embalance {

enum class QuadratureRule { trapezoid, simpson };

std::string to_string(QuadratureRule r);
QuadratureRule quadrature_rule_from_string(const std::string& s);

struct QuadratureConfig {
  double horizon = 1.0;
  Index nodes = 101;
  QuadratureRule rule = QuadratureRule::simpson;

  void validate() const;
  std::vector<double> node_times() const;
  std::vector<double> weights() const;
  std::string describe() const;
  bool operator==(const QuadratureConfig&) const = default;
};

/// Centering of member trajectories in the Lall constructions.
enum class MeanMode { equilibrium, time_average };

std::string to_string(MeanMode m);
MeanMode mean_mode_from_string(const std::string& s);

struct EmpiricalOptions {
  IntegratorConfig integrator;
  MeanMode mean = MeanMode::equilibrium;
  double cond_limit = kDefaultConditionLimit;
  /// Member simulations use atol * |c_m|, so that tiny perturbations are resolved.
  bool scale_atol = true;
  Execution exec = Execution::parallel;
};

enum class TimeDirection { forward, backward };

/// <Theta(t_j)> at the quadrature nodes (t_j = -tau_j when backward).
struct AveragedFundamental {
  std::vector<double> grid;
  std::vector<Mat> values;
  PerturbationSets sets;
  TimeDirection direction = TimeDirection::forward;
};

struct GramianPair {
  Gramian P;
  Gramian Q;
};

Gramian lall_controllability(const NonlinearModel& model, const PerturbationSets& sets,
                             const QuadratureConfig& quad, const EmpiricalOptions& opts = {});

Gramian lall_observability(const NonlinearModel& model, const PerturbationSets& sets,
                           const QuadratureConfig& quad, const EmpiricalOptions& opts = {});

/// P = int Theta^{-1}(-tau) B B^T Theta^{-T}(-tau),  Q = int Theta^T C^T C Theta.
GramianPair ltv_gramians(const LTVModel& model, const QuadratureConfig& quad,
                         const EmpiricalOptions& opts = {});

/// <Theta(t)> = (1/rs) sum_{i,l,m} (1/c_m) (x^{ilm}(t) - x_eq) e_i^T T_l^T over zero-input
/// solutions from x_eq + c_m T_l e_i. Non-finite members are reported with their (i, l, m).
AveragedFundamental averaged_fundamental(const NonlinearModel& model, const PerturbationSets& sets,
                                         TimeDirection direction, const QuadratureConfig& quad,
                                         const EmpiricalOptions& opts = {});

Gramian nonlinear_controllability(const NonlinearModel& model, const PerturbationSets& sets,
                                  const QuadratureConfig& quad, const EmpiricalOptions& opts = {});

Gramian nonlinear_observability(const NonlinearModel& model, const PerturbationSets& sets,
                                const QuadratureConfig& quad, const EmpiricalOptions& opts = {});

/// sum_m v_m v_m^T with v_m = sum_k (c_m/2)^k N^k B; divided by s when `normalize` (the weight
/// 1/(s c_m^2) applied to the impulse state c_m v_m).
Mat bilinear_input_outer(const BilinearModel& model, const std::vector<double>& scales,
                         bool normalize);

/// Lyapunov-form gramians of the bilinear impulse construction. `solver` may carry a Schur
/// factorization of model.A that is reused.
GramianPair bilinear_gramians(const BilinearModel& model, const std::vector<double>& scales,
                              bool normalize = true, const LyapunovSolver* solver = nullptr);

/// Gramians of the linear part (A, B, C) only.
GramianPair linear_part_gramians(const BilinearModel& model, const LyapunovSolver* solver = nullptr);

/// Infinite-horizon Lyapunov gramians of an LTI system.
GramianPair lti_gramians(const LtiMatrices& m);

}  // namespace embalance
