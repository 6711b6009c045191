#pragma once

// Square-root balanced truncation and Petrov-Galerkin projection.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "embalance/linalg.hpp"
#include "embalance/model.hpp"
#include "embalance/ode.hpp"

namespace embalance {

/// Trial basis V and test basis W with W^T V = I_k.
struct ReductionBasis {
  Mat V;
  Mat W;
  Vec hankel;                   // sigma_1 >= ... >= sigma_k > 0
  double discarded_tail = 0.0;  // sigma_{k+1}, 0 if none

  Index order() const { return V.cols(); }
};

/// Singular values below this fraction of sigma_1 do not count towards the rank bound.
inline constexpr double kHankelRankTol = 1e-12;

ReductionBasis balance(const Mat& P, const Mat& Q, Index k);
inline ReductionBasis balance(const Gramian& P, const Gramian& Q, Index k) {
  return balance(P.matrix, Q.matrix, k);
}

struct ReducedModel {
  std::variant<NonlinearModel, BilinearModel> model;
  ReductionBasis basis;
  std::string provenance;
  /// False when a projected bilinear N is no longer nilpotent.
  bool nilpotent = true;

  bool is_bilinear() const { return std::holds_alternative<BilinearModel>(model); }
  Index dim() const { return basis.order(); }
};

/// drift_r(t, z) = W^T f(t, x_eq + V z),  B_r = W^T B(t),  h_r(t, z) = h(t, x_eq + V z).
ReducedModel project_nonlinear(const NonlinearModel& model, const ReductionBasis& basis,
                               const std::string& provenance = "");

/// (W^T A V, W^T N V, W^T B, C V).
ReducedModel project_bilinear(const BilinearModel& model, const ReductionBasis& basis,
                              const std::string& provenance = "");

struct StabilityOptions {
  double horizon = 1.0;
  int trials = 5;
  double amplitude = 1e-3;
  double growth_limit = 1e3;
  std::uint64_t seed = 7;
  IntegratorConfig integrator;
};

struct StabilityReport {
  bool stable = true;
  /// Largest eigenvalue real part of the reduced A (bilinear/linear models only).
  double max_real_part = 0.0;
  /// Largest ||z(t)|| / ||z(0)|| seen over the trial simulations (nonlinear models only).
  double max_growth = 0.0;
  std::string detail;
};

StabilityReport stability_check(const ReducedModel& model, const StabilityOptions& opts = {});

/// Header row: the Hankel values labelling the V columns then the W columns; then n rows [V W].
void write_basis(const std::filesystem::path& path, const ReductionBasis& basis);

}  // namespace embalance
