#pragma once

// Second-order Carleman bilinearization of input-affine systems with constant B and C.

#include "embalance/model.hpp"

namespace embalance {

/// f(x_eq + x) - f(x_eq) ~= A1 x + A2 (x (x) x), with (x (x) y)_{i n + j} = x_i y_j.
struct PolynomialDrift {
  Mat A1;  // n x n
  Mat A2;  // n x n^2, symmetric in the two Kronecker factors

  Index dim() const { return A1.rows(); }
  Vec evaluate(const Vec& x) const;
};

/// Finite-difference step used by taylor_drift for models without analytic derivatives.
inline constexpr double kTaylorStep = 1e-5;

/// Jacobian and half-Hessian of the drift at the equilibrium (time t = 0). The ladder preset
/// uses its analytic derivatives; `order` 1 leaves A2 = 0.
PolynomialDrift taylor_drift(const NonlinearModel& model, int order);

/// Same as taylor_drift, but always by central differences.
PolynomialDrift taylor_drift_numeric(const NonlinearModel& model, int order, double step = kTaylorStep);

/// Lift to x_hat = [x; x (x) x]: A_hat = [[A1, A2], [0, A1(x)I + I(x)A1]],
/// N_hat = [[0, 0], [B(x)I + I(x)B, 0]], B_hat = [B; 0], C_hat = [C, 0].
BilinearModel carleman_lift(const PolynomialDrift& pd, const Vec& B, const RowVec& C);

/// Lift of a single-input single-output model with constant input and linear output maps.
BilinearModel carleman_lift(const NonlinearModel& model);

/// x' = A1 x + A2 (x (x) x) + B u,  y = C x, as a NonlinearModel.
NonlinearModel polynomial_model(const PolynomialDrift& pd, const Vec& B, const RowVec& C,
                                const std::string& name = "polynomial");

/// Embeds a physical state x as [x; x (x) x].
Vec lift_state(const Vec& x);

}  // namespace embalance
