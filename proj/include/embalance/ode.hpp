#pragma once

// Initial-value integration forward and backward in time, sampled on uniform grids.

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "embalance/model.hpp"
#include "embalance/types.hpp"

namespace embalance {

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

std::string to_string(IntegratorMethod m);
IntegratorMethod integrator_method_from_string(const std::string& s);

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk45_adaptive;
  /// Fixed step for rk4-fixed (shrunk so that steps land on grid points).
  double step = 1e-3;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::size_t max_steps = 5'000'000;

  void validate() const;
  bool operator==(const IntegratorConfig&) const = default;
};

/// Uniform samples of one simulation. Rows of `states`/`outputs` follow `grid`.
struct Trajectory {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> grid;
  Mat states;
  Mat outputs;  // zero columns when outputs were not evaluated

  Index samples() const { return static_cast<Index>(grid.size()); }
  Index dim() const { return states.cols(); }
};

using RhsFn = std::function<Vec(double t, const Vec& x)>;
using InputSignal = std::function<Vec(double t)>;
using ScalarSignal = std::function<double(double t)>;

/// N+1 uniform points from t0 to t1 with the endpoints exact.
std::vector<double> uniform_grid(double t0, double t1, Index N);

/// Integrates x' = rhs(t, x) from t0 to t1 (t1 < t0 runs backward), sampled on N+1 points.
/// Adaptive steps are mapped to the grid with cubic Hermite dense output.
/// Throws NonFiniteState on NaN/Inf or step-size collapse, StepLimitExceeded past max_steps.
Trajectory integrate(const RhsFn& rhs, const Vec& x0, double t0, double t1, Index N,
                     const IntegratorConfig& cfg);

/// x' = f(t,x) + B(t) u(t); outputs are filled in.  An empty `u` means zero input.
Trajectory integrate(const NonlinearModel& model, const Vec& x0, const InputSignal& u, double t0,
                     double t1, Index N, const IntegratorConfig& cfg);

/// x' = A x + N x u + B u, from x0 at t0; outputs are filled in.
Trajectory simulate(const BilinearModel& model, const Vec& x0, const ScalarSignal& u, double t0,
                    double t1, Index N, const IntegratorConfig& cfg);

/// Response to u = scale * direction * delta(t), realized as the jump x(0+) = x_eq + jump and
/// zero input afterwards. `direction` lives in input space (length p).
Trajectory impulse_response(const NonlinearModel& model, double scale, const Vec& direction,
                            double t1, Index N, const IntegratorConfig& cfg);

/// Trapezoid-rule time average (1/(t1-t0)) * integral of each column of `samples` over `grid`.
Vec mean_value(const std::vector<double>& grid, const Mat& samples);
inline Vec mean_value(const Trajectory& traj) { return mean_value(traj.grid, traj.states); }

/// Header `t,x1,...,xn[,y1,...,yq]`, 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj);

}  // namespace embalance
