#include "embalance/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "embalance/csv.hpp"
#include "embalance/errors.hpp"

namespace embalance {

std::string to_string(GramianKind k) {
  switch (k) {
    case GramianKind::lall_P: return "lall-P";
    case GramianKind::lall_Q: return "lall-Q";
    case GramianKind::ltv_P: return "ltv-P";
    case GramianKind::ltv_Q: return "ltv-Q";
    case GramianKind::bilinear_P: return "bilinear-P";
    case GramianKind::bilinear_Q: return "bilinear-Q";
    case GramianKind::nonlinear_P: return "nonlinear-P";
    case GramianKind::nonlinear_Q: return "nonlinear-Q";
    case GramianKind::lti_P: return "lti-P";
    case GramianKind::lti_Q: return "lti-Q";
  }
  return "unknown";
}

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

LyapunovSolver::LyapunovSolver(const Mat& A) : A_(A) {
  if (A.rows() != A.cols()) throw ConfigError("Lyapunov: A must be square");
  Eigen::ComplexSchur<Mat> schur(A, true);
  if (schur.info() != Eigen::Success) throw ConvergenceFailure("complex Schur decomposition failed");
  U_ = schur.matrixU();
  T_ = schur.matrixT();
  eigenvalues_ = T_.diagonal();
  const double mr = max_real_part();
  if (!(mr < 0.0))
    throw UnstableA("Lyapunov: A has an eigenvalue with real part " + std::to_string(mr), mr);
}

double LyapunovSolver::max_real_part() const {
  double mr = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < eigenvalues_.size(); ++i) mr = std::max(mr, eigenvalues_(i).real());
  return mr;
}

namespace {

void check_residual(const Mat& A, const Mat& X, const Mat& M, bool adjoint) {
  const Mat R = adjoint ? Mat(A.transpose() * X + X * A + M) : Mat(A * X + X * A.transpose() + M);
  const double scale = M.norm();
  if (!X.allFinite() || R.norm() > kLyapunovResidualTol * std::max(scale, 1e-300))
    throw ResidualFailure("Lyapunov residual " + std::to_string(R.norm()) + " exceeds " +
                          std::to_string(kLyapunovResidualTol) + " * ||M||");
}

}  // namespace

Mat LyapunovSolver::solve(const Mat& M) const {
  const Index n = A_.rows();
  if (M.rows() != n || M.cols() != n) throw ConfigError("Lyapunov: M has wrong shape");
  if (M.norm() == 0.0) return Mat::Zero(n, n);
  // T Y + Y T^H = -U^H M U; column j couples to columns k > j through conj(T(j,k)).
  CMat rhs = -(U_.adjoint() * M.cast<std::complex<double>>() * U_);
  CMat Y(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    CVec y = rhs.col(j);
    const std::complex<double> shift = std::conj(T_(j, j));
    for (Index i = n - 1; i >= 0; --i) {
      y(i) /= (T_(i, i) + shift);
      if (i > 0) y.head(i).noalias() -= y(i) * T_.col(i).head(i);
    }
    Y.col(j) = y;
    if (j > 0) rhs.leftCols(j).noalias() -= y * T_.col(j).head(j).adjoint();
  }
  Mat X = (U_ * Y * U_.adjoint()).real();
  X = symmetrize(X);
  check_residual(A_, X, M, false);
  return X;
}

Mat LyapunovSolver::solve_adjoint(const Mat& M) const {
  const Index n = A_.rows();
  if (M.rows() != n || M.cols() != n) throw ConfigError("Lyapunov: M has wrong shape");
  if (M.norm() == 0.0) return Mat::Zero(n, n);
  // T^H Y + Y T = -U^H M U; column j couples to columns k < j through T(k,j).
  CMat rhs = -(U_.adjoint() * M.cast<std::complex<double>>() * U_);
  const CMat TH = T_.adjoint();
  CMat Y(n, n);
  for (Index j = 0; j < n; ++j) {
    CVec y = rhs.col(j);
    const std::complex<double> shift = T_(j, j);
    for (Index i = 0; i < n; ++i) {
      y(i) /= (TH(i, i) + shift);
      const Index rest = n - i - 1;
      if (rest > 0) y.tail(rest).noalias() -= y(i) * TH.col(i).tail(rest);
    }
    Y.col(j) = y;
    const Index rest = n - j - 1;
    if (rest > 0) rhs.rightCols(rest).noalias() -= y * T_.row(j).tail(rest);
  }
  Mat X = (U_ * Y * U_.adjoint()).real();
  X = symmetrize(X);
  check_residual(A_, X, M, true);
  return X;
}

Mat solve_lyapunov(const Mat& A, const Mat& M) { return LyapunovSolver(A).solve(M); }

Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

PsdFactor psd_factor(const Mat& G) {
  const Index n = G.rows();
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(G));
  if (eig.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver failed");
  const Vec& w = eig.eigenvalues();  // ascending
  const double wmax = n > 0 ? w(n - 1) : 0.0;
  const double cut = kPsdClip * std::max(wmax, 0.0);
  PsdFactor out;
  std::vector<Index> keep;
  for (Index i = n - 1; i >= 0; --i) {
    if (w(i) > cut && w(i) > 0.0) keep.push_back(i);
    else out.clipped_mass += std::abs(w(i));
  }
  out.rank = static_cast<Index>(keep.size());
  out.factor.resize(n, out.rank);
  for (Index c = 0; c < out.rank; ++c)
    out.factor.col(c) = eig.eigenvectors().col(keep[static_cast<std::size_t>(c)]) *
                        std::sqrt(w(keep[static_cast<std::size_t>(c)]));
  return out;
}

PsdRepair repair_psd(const Mat& G) {
  const PsdFactor f = psd_factor(G);
  return {f.factor * f.factor.transpose(), f.clipped_mass};
}

Svd svd(const Mat& M) {
  Eigen::BDCSVD<Mat> dec(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (dec.info() != Eigen::Success) throw ConvergenceFailure("SVD did not converge");
  return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

double condition_number(const Mat& M) {
  Eigen::JacobiSVD<Mat> dec(M);
  const Vec& s = dec.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Mat conditioned_inverse(const Mat& M, double cond_limit) {
  if (M.rows() != M.cols()) throw ConfigError("conditioned_inverse: matrix must be square");
  if (!M.allFinite()) throw IllConditioned("matrix has non-finite entries",
                                           std::numeric_limits<double>::infinity());
  Eigen::JacobiSVD<Mat> dec(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = dec.singularValues();
  const double smin = s.size() ? s(s.size() - 1) : 1.0;
  const double cond = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= cond_limit))
    throw IllConditioned("condition number " + std::to_string(cond) + " exceeds limit " +
                             std::to_string(cond_limit),
                         cond);
  return dec.matrixV() * s.cwiseInverse().asDiagonal() * dec.matrixU().transpose();
}

void write_gramian(const std::filesystem::path& base, const Gramian& g) {
  {
    auto os = csv::open(base.string() + ".csv");
    csv::write_matrix(os, g.matrix);
  }
  auto meta = csv::open(base.string() + ".meta");
  meta << "method = " << to_string(g.method) << '\n'
       << "dim = " << g.dim() << '\n'
       << "horizon = " << csv::format(g.horizon) << '\n'
       << "quadrature = " << g.quadrature << '\n'
       << "sets = " << g.set_summary << '\n'
       << "clipped_mass = " << csv::format(g.clipped_mass) << '\n'
       << "degenerate = " << (g.degenerate ? "true" : "false") << '\n';
}

void write_gramian_trace(const std::filesystem::path& path, const Gramian& g) {
  auto os = csv::open(path);
  const auto& d = g.diagnostics;
  const bool cond = !d.condition.empty();
  csv::write_row(os, cond ? std::vector<std::string>{"tau", "integrand_norm", "condition"}
                          : std::vector<std::string>{"tau", "integrand_norm"});
  for (std::size_t k = 0; k < d.nodes.size(); ++k) {
    if (cond) csv::write_row(os, std::vector<double>{d.nodes[k], d.integrand_norm[k], d.condition[k]});
    else csv::write_row(os, std::vector<double>{d.nodes[k], d.integrand_norm[k]});
  }
}

}  // namespace embalance
