#pragma once

// Dense kernels for the gramian and balancing pipelines.

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "embalance/types.hpp"

namespace embalance {

enum class GramianKind {
  lall_P,
  lall_Q,
  ltv_P,
  ltv_Q,
  bilinear_P,
  bilinear_Q,
  nonlinear_P,
  nonlinear_Q,
  lti_P,
  lti_Q,
};

std::string to_string(GramianKind k);

/// Per-quadrature-node traces: integrand Frobenius norm (tail diagnostics) and, for the
/// averaged-fundamental controllability gramian, the condition number that was inverted.
struct GramianDiagnostics {
  std::vector<double> nodes;
  std::vector<double> integrand_norm;
  std::vector<double> condition;
};

/// Symmetric positive-semidefinite n x n matrix with its provenance.
struct Gramian {
  Mat matrix;
  GramianKind method = GramianKind::lti_P;
  double horizon = 0.0;  // 0 for exact (Lyapunov) gramians, i.e. infinite horizon
  std::string quadrature = "exact";
  std::string set_summary;
  double clipped_mass = 0.0;
  bool degenerate = false;
  GramianDiagnostics diagnostics;

  Index dim() const { return matrix.rows(); }
};

/// Solves A X + X A^T + M = 0 (and the adjoint A^T X + X A + M = 0) through one complex Schur
/// factorization A = U T U^H, reused across right-hand sides.
class LyapunovSolver {
 public:
  explicit LyapunovSolver(const Mat& A);

  /// A X + X A^T + M = 0.
  Mat solve(const Mat& M) const;
  /// A^T X + X A + M = 0.
  Mat solve_adjoint(const Mat& M) const;

  const Eigen::VectorXcd& eigenvalues() const { return eigenvalues_; }
  double max_real_part() const;

 private:
  Mat A_;
  Eigen::MatrixXcd U_;
  Eigen::MatrixXcd T_;
  Eigen::VectorXcd eigenvalues_;
};

/// Relative residual tolerance enforced by the solver.
inline constexpr double kLyapunovResidualTol = 1e-10;

Mat solve_lyapunov(const Mat& A, const Mat& M);

struct PsdFactor {
  Mat factor;  // n x r, G ~= factor * factor^T
  Index rank = 0;
  double clipped_mass = 0.0;  // sum of |eigenvalues| discarded
};

/// Eigenvalues below 1e-12 * lambda_max are clipped to zero; columns follow decreasing eigenvalue.
PsdFactor psd_factor(const Mat& G);

inline constexpr double kPsdClip = 1e-12;

struct PsdRepair {
  Mat matrix;
  double clipped_mass = 0.0;
};

/// Symmetrizes and clips eigenvalues below 1e-12 * lambda_max.
PsdRepair repair_psd(const Mat& G);

inline constexpr double kDefaultConditionLimit = 1e12;

/// SVD-based inverse; throws IllConditioned when sigma_max / sigma_min > cond_limit.
Mat conditioned_inverse(const Mat& M, double cond_limit = kDefaultConditionLimit);

/// Condition number sigma_max / sigma_min (infinity for singular input).
double condition_number(const Mat& M);

struct Svd {
  Mat U;      // m x m
  Vec sigma;  // min(m, n), non-increasing
  Mat V;      // n x n
};

Svd svd(const Mat& M);

Mat symmetrize(const Mat& M);

/// `<base>.csv` (dense row-major) and `<base>.meta` (method, horizon, quadrature, sets).
void write_gramian(const std::filesystem::path& base, const Gramian& g);
/// Node, integrand norm and (when present) condition number per quadrature node.
void write_gramian_trace(const std::filesystem::path& path, const Gramian& g);

}  // namespace embalance
