#pragma once

// System-model abstractions and the benchmark systems.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "embalance/types.hpp"

namespace embalance {

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using InputMapFn = std::function<Mat(double t)>;
using OutputFn = std::function<Vec(double t, const Vec& x)>;
/// State increment produced by the impulsive input `scale * direction * delta(t)`.
using ImpulseJumpFn = std::function<Vec(double scale, const Vec& direction)>;

/// Identifies a model built by build_rc_ladder (enables analytic derivatives).
struct RcLadderInfo {
  Index nodes = 0;
};

/// x' = f(t, x) + B(t) u,  y = h(t, x).
///
/// Evaluation maps must be pure; models are immutable and shareable across threads.
struct NonlinearModel {
  std::string name;
  Index n = 0;
  Index p = 0;
  Index q = 0;
  DriftFn drift;
  InputMapFn input_map;
  OutputFn output_map;
  Vec equilibrium;
  /// Empty for input-affine models, where the jump is B(0) * scale * direction.
  ImpulseJumpFn impulse_jump;
  std::optional<RcLadderInfo> ladder;

  Vec rhs(double t, const Vec& x, const Vec& u) const;
  Vec impulse_increment(double scale, const Vec& direction) const;
};

struct LtiMatrices {
  Mat A;
  Mat B;
  Mat C;
};

/// x' = A(t) x + B(t) u,  y = C(t) x.
struct LTVModel {
  Index n = 0;
  Index p = 0;
  Index q = 0;
  std::function<Mat(double)> A;
  std::function<Mat(double)> B;
  std::function<Mat(double)> C;
  /// Present when the coefficients are constant.
  std::optional<LtiMatrices> lti;

  static LTVModel constant(const Mat& A, const Mat& B, const Mat& C);
  NonlinearModel to_nonlinear(const std::string& name = "ltv") const;
};

/// x' = A x + N x u + B u,  y = C x  (scalar input and output).
struct BilinearModel {
  Mat A;
  Mat N;
  Vec B;
  RowVec C;
  /// Smallest k with N^k = 0; 0 when unknown or N is not nilpotent.
  Index nilpotency_index = 0;

  Index dim() const { return A.rows(); }
  Vec rhs(const Vec& x, double u) const;
  /// Exact jump for u = c * delta(t):  sum_k (c/2)^k N^k B c, truncated at the nilpotency index.
  Vec impulse_jump(double c) const;
  /// Zero-input dynamics plus the exact impulse jump, for impulse-driven gramian constructions.
  NonlinearModel impulse_view() const;
};

/// Smallest k <= dim with ||N^k|| <= tol * max(1, ||N||)^k, or 0 if none.
Index nilpotency_index(const Mat& N, double tol = 1e-12);

/// Scales M and rotations T of the empirical gramian constructions; E is implicit.
struct PerturbationSets {
  std::vector<double> scales;
  /// Orthogonal matrices; empty means {I} of whatever dimension the construction needs.
  std::vector<Mat> rotations;

  void validate(Index dim) const;
  std::vector<Mat> rotations_for(Index dim) const;
  std::size_t rotation_count() const { return rotations.empty() ? 1 : rotations.size(); }
  std::string summary() const;

  static PerturbationSets identity(std::vector<double> scales) { return {std::move(scales), {}}; }
};

/// `count` random orthogonal dim x dim matrices (QR of Gaussian), deterministic per seed.
std::vector<Mat> random_rotations(Index dim, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// RC ladder: n nodes, unit capacitors, nonlinear resistors i(v) = e^{40 v} - 1 + v from
// node 1 to ground and between consecutive nodes; current source into node 1, y = v1.

inline constexpr double kDiodeExponent = 40.0;
inline constexpr double kExponentLimit = 700.0;

/// Resistor law i(v) = e^{40 v} - 1 + v.
double resistor_current(double v);

NonlinearModel build_rc_ladder(Index n);

/// Gradient potential V with drift = -grad V. Throws ExponentOverflow when an exponent exceeds 700.
double potential(const RcLadderInfo& ladder, const Vec& x);
Vec potential_gradient(const RcLadderInfo& ladder, const Vec& x);

/// Constant-coefficient model with every eigenvalue real part <= -0.1, deterministic per seed.
LTVModel random_stable_lti(Index n, std::uint64_t seed, Index p = 1, Index q = 1);

// Structured-text LTI files (dense row-major A, B, C with explicit n, p, q).
LtiMatrices load_lti(const std::string& path);
void save_lti(const std::string& path, const LtiMatrices& m);
BilinearModel load_bilinear(const std::string& path);
void save_bilinear(const std::string& path, const BilinearModel& m);

/// Preset lookup used by the CLI: "rc-ladder" (nodes) or "random-lti" (nodes, seed).
NonlinearModel model_preset(const std::string& name, Index nodes, std::uint64_t seed);

}  // namespace embalance
