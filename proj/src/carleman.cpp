#include "embalance/carleman.hpp"

#include <cmath>

#include "embalance/errors.hpp"

namespace embalance {

namespace {

Vec kron(const Vec& x, const Vec& y) {
  Vec out(x.size() * y.size());
  for (Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
  return out;
}

// Analytic derivatives of the ladder drift at 0: g'(0) = 41, g''(0)/2 = 800 per resistor.
PolynomialDrift ladder_taylor(Index n, int order) {
  const double g1 = kDiodeExponent + 1.0;
  const double g2 = 0.5 * kDiodeExponent * kDiodeExponent;
  PolynomialDrift pd;
  pd.A1 = Mat::Zero(n, n);
  pd.A2 = Mat::Zero(n, n * n);
  // Each branch carries g(a.x) out of node `from` (and into node `to` when present).
  auto branch = [&](Index from, Index to) {
    Vec a = Vec::Zero(n);
    a(from) = 1.0;
    if (to >= 0) a(to) = -1.0;
    const RowVec lin = g1 * a.transpose();
    const RowVec quad = order >= 2 ? RowVec(g2 * kron(a, a).transpose()) : RowVec::Zero(n * n);
    pd.A1.row(from) -= lin;
    pd.A2.row(from) -= quad;
    if (to >= 0) {
      pd.A1.row(to) += lin;
      pd.A2.row(to) += quad;
    }
  };
  branch(0, -1);
  for (Index k = 0; k + 1 < n; ++k) branch(k, k + 1);
  return pd;
}

}  // namespace

Vec PolynomialDrift::evaluate(const Vec& x) const { return A1 * x + A2 * kron(x, x); }

PolynomialDrift taylor_drift_numeric(const NonlinearModel& model, int order, double step) {
  if (order != 1 && order != 2) throw ConfigError("taylor order must be 1 or 2");
  const Index n = model.n;
  const Vec& x0 = model.equilibrium;
  const double h = step;
  auto f = [&](const Vec& x) {
    Vec v = model.drift(0.0, x);
    if (!v.allFinite()) throw NonFiniteState("drift is not finite near the equilibrium", 0.0);
    return v;
  };
  PolynomialDrift pd;
  pd.A1.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    const Vec e = h * Vec::Unit(n, j);
    pd.A1.col(j) = (f(x0 + e) - f(x0 - e)) / (2.0 * h);
  }
  pd.A2 = Mat::Zero(n, n * n);
  if (order == 2) {
    for (Index j = 0; j < n; ++j) {
      for (Index k = j; k < n; ++k) {
        const Vec ej = h * Vec::Unit(n, j), ek = h * Vec::Unit(n, k);
        const Vec hess = (f(x0 + ej + ek) - f(x0 + ej - ek) - f(x0 - ej + ek) + f(x0 - ej - ek)) /
                         (4.0 * h * h);
        pd.A2.col(j * n + k) = 0.5 * hess;
        pd.A2.col(k * n + j) = 0.5 * hess;
      }
    }
  }
  if (!pd.A1.allFinite() || !pd.A2.allFinite())
    throw NonFiniteState("finite-difference derivatives are not finite", 0.0);
  return pd;
}

PolynomialDrift taylor_drift(const NonlinearModel& model, int order) {
  if (order != 1 && order != 2) throw ConfigError("taylor order must be 1 or 2");
  if (model.ladder && model.equilibrium.isZero(0.0)) return ladder_taylor(model.ladder->nodes, order);
  return taylor_drift_numeric(model, order);
}

BilinearModel carleman_lift(const PolynomialDrift& pd, const Vec& B, const RowVec& C) {
  const Index n = pd.dim();
  if (pd.A2.rows() != n || pd.A2.cols() != n * n || B.size() != n || C.size() != n)
    throw ConfigError("carleman_lift: dimension mismatch");
  const Index nb = n + n * n;
  BilinearModel bl;
  bl.A = Mat::Zero(nb, nb);
  bl.A.topLeftCorner(n, n) = pd.A1;
  bl.A.topRightCorner(n, n * n) = pd.A2;
  // A1 (x) I + I (x) A1
  Mat& A = bl.A;
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k) {
      const double a = pd.A1(i, k);
      if (a == 0.0) continue;
      for (Index j = 0; j < n; ++j) {
        A(n + i * n + j, n + k * n + j) += a;  // (A1 (x) I)
        A(n + j * n + i, n + j * n + k) += a;  // (I (x) A1)
      }
    }
  }
  bl.N = Mat::Zero(nb, nb);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      // (B (x) I) x = B (x) x  and  (I (x) B) x = x (x) B
      bl.N(n + i * n + j, j) += B(i);
      bl.N(n + i * n + j, i) += B(j);
    }
  }
  bl.B = Vec::Zero(nb);
  bl.B.head(n) = B;
  bl.C = RowVec::Zero(nb);
  bl.C.head(n) = C;
  bl.nilpotency_index = bl.N.isZero(0.0) ? 1 : 2;
  return bl;
}

BilinearModel carleman_lift(const NonlinearModel& model) {
  if (model.p != 1 || model.q != 1) throw ConfigError("carleman_lift needs a single-input single-output model");
  const Mat B0 = model.input_map(0.0);
  // Linear output row from the output map's action on unit vectors.
  RowVec C(model.n);
  const Vec y0 = model.output_map(0.0, model.equilibrium);
  for (Index j = 0; j < model.n; ++j)
    C(j) = (model.output_map(0.0, model.equilibrium + Vec::Unit(model.n, j)) - y0)(0);
  return carleman_lift(taylor_drift(model, 2), B0.col(0), C);
}

NonlinearModel polynomial_model(const PolynomialDrift& pd, const Vec& B, const RowVec& C,
                                const std::string& name) {
  NonlinearModel m;
  m.name = name;
  m.n = pd.dim();
  m.p = 1;
  m.q = 1;
  m.drift = [pd](double, const Vec& x) -> Vec { return pd.evaluate(x); };
  const Mat Bm = B;
  m.input_map = [Bm](double) -> Mat { return Bm; };
  m.output_map = [C](double, const Vec& x) -> Vec { return Vec::Constant(1, C.dot(x)); };
  m.equilibrium = Vec::Zero(m.n);
  return m;
}

Vec lift_state(const Vec& x) {
  Vec out(x.size() + x.size() * x.size());
  out.head(x.size()) = x;
  out.tail(x.size() * x.size()) = kron(x, x);
  return out;
}

}  // namespace embalance
