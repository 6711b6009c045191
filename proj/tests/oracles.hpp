#pragma once

// Independent reference computations used only by the tests.

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>

#include "embalance/types.hpp"

namespace oracle {

using embalance::Index;
using embalance::Mat;
using embalance::Vec;

/// A X + X A^T + M = 0 via the dense vec-trick system (I (x) A + A (x) I) vec X = -vec M.
inline Mat kron_lyapunov(const Mat& A, const Mat& M) {
  const Index n = A.rows();
  Mat K = Mat::Zero(n * n, n * n);
  const Mat I = Mat::Identity(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A;
      K.block(i * n, j * n, n, n) += A(i, j) * I;
    }
  const Vec x = K.fullPivLu().solve(-Eigen::Map<const Vec>(M.data(), n * n));
  return Eigen::Map<const Mat>(x.data(), n, n);
}

inline Mat expm(const Mat& A) { return A.exp(); }

/// 10-point Gauss-Legendre on each of `panels` equal panels of [a, b].
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
  static const double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h, half = 0.5 * h;
    for (int k = 0; k < 5; ++k) sum += w[k] * half * (f(mid - half * x[k]) + f(mid + half * x[k]));
  }
  return sum;
}

inline Mat gauss_legendre(const std::function<Mat(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
  static const double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};
  const double h = (b - a) / panels;
  Mat sum = Mat::Zero(f(a).rows(), f(a).cols());
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h, half = 0.5 * h;
    for (int k = 0; k < 5; ++k) sum += w[k] * half * (f(mid - half * x[k]) + f(mid + half * x[k]));
  }
  return sum;
}

/// Central-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_fro(const Mat& a, const Mat& ref) { return (a - ref).norm() / ref.norm(); }

}  // namespace oracle
