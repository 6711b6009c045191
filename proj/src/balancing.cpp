#include "embalance/balancing.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "embalance/csv.hpp"
#include "embalance/errors.hpp"

namespace embalance {

ReductionBasis balance(const Mat& P, const Mat& Q, Index k) {
  if (P.rows() != P.cols() || Q.rows() != Q.cols() || P.rows() != Q.rows())
    throw ConfigError("balance: gramians must be square and of equal dimension");
  if (k < 1 || k > P.rows()) throw ConfigError("balance: order must lie in [1, n]");
  const PsdFactor R = psd_factor(P);
  const PsdFactor L = psd_factor(Q);
  if (R.rank == 0 || L.rank == 0)
    throw RankDeficient("balance: a gramian is zero", 0, static_cast<std::size_t>(k));
  Svd s = svd(L.factor.transpose() * R.factor);
  Index available = 0;
  for (Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma(i) > kHankelRankTol * s.sigma(0)) ++available;
  if (available < k) {
    std::ostringstream os;
    os << "balance: only " << available << " Hankel singular values above " << kHankelRankTol
       << " * sigma_1, order " << k << " requested";
    throw RankDeficient(os.str(), static_cast<std::size_t>(available), static_cast<std::size_t>(k));
  }
  for (Index j = 0; j < k; ++j) {
    Index imax = 0;
    s.U.col(j).cwiseAbs().maxCoeff(&imax);
    if (s.U(imax, j) < 0.0) {
      s.U.col(j) *= -1.0;
      s.V.col(j) *= -1.0;
    }
  }
  const Vec scale = s.sigma.head(k).cwiseSqrt().cwiseInverse();
  ReductionBasis b;
  b.V = R.factor * s.V.leftCols(k) * scale.asDiagonal();
  b.W = L.factor * s.U.leftCols(k) * scale.asDiagonal();
  b.hankel = s.sigma.head(k);
  b.discarded_tail = s.sigma.size() > k ? s.sigma(k) : 0.0;
  return b;
}

ReducedModel project_nonlinear(const NonlinearModel& model, const ReductionBasis& basis,
                               const std::string& provenance) {
  if (basis.V.rows() != model.n) throw ConfigError("project_nonlinear: basis dimension mismatch");
  const Mat V = basis.V, Wt = basis.W.transpose();
  const Vec eq = model.equilibrium;
  NonlinearModel r;
  r.name = model.name + "-reduced";
  r.n = basis.order();
  r.p = model.p;
  r.q = model.q;
  r.drift = [f = model.drift, V, Wt, eq](double t, const Vec& z) -> Vec { return Wt * f(t, eq + V * z); };
  r.input_map = [b = model.input_map, Wt](double t) -> Mat { return Wt * b(t); };
  r.output_map = [h = model.output_map, V, eq](double t, const Vec& z) -> Vec { return h(t, eq + V * z); };
  r.equilibrium = Vec::Zero(r.n);
  if (model.impulse_jump)
    r.impulse_jump = [j = model.impulse_jump, Wt](double c, const Vec& d) -> Vec { return Wt * j(c, d); };
  return {std::move(r), basis, provenance.empty() ? "nonlinear projection" : provenance, true};
}

ReducedModel project_bilinear(const BilinearModel& model, const ReductionBasis& basis,
                              const std::string& provenance) {
  if (basis.V.rows() != model.dim()) throw ConfigError("project_bilinear: basis dimension mismatch");
  const Mat Wt = basis.W.transpose();
  BilinearModel r;
  r.A = Wt * model.A * basis.V;
  r.N = Wt * model.N * basis.V;
  r.B = Wt * model.B;
  r.C = model.C * basis.V;
  r.nilpotency_index = nilpotency_index(r.N);
  const bool nilpotent = r.nilpotency_index > 0;
  return {std::move(r), basis, provenance.empty() ? "bilinear projection" : provenance, nilpotent};
}

StabilityReport stability_check(const ReducedModel& model, const StabilityOptions& opts) {
  StabilityReport rep;
  std::ostringstream os;
  if (const auto* bl = std::get_if<BilinearModel>(&model.model)) {
    const Eigen::VectorXcd ev = bl->A.eigenvalues();
    rep.max_real_part = ev.real().maxCoeff();
    rep.stable = rep.max_real_part < 0.0;
    os << "max Re(lambda(A_r)) = " << rep.max_real_part;
    rep.detail = os.str();
    return rep;
  }
  const auto& nl = std::get<NonlinearModel>(model.model);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < opts.trials && rep.stable; ++trial) {
    Vec z0(nl.n);
    for (Index i = 0; i < nl.n; ++i) z0(i) = gauss(rng);
    z0 *= opts.amplitude / z0.norm();
    try {
      const Trajectory tr = integrate(nl, nl.equilibrium + z0, InputSignal{}, 0.0, opts.horizon, 100,
                                      opts.integrator);
      for (Index t = 0; t < tr.samples(); ++t) {
        const double g = (tr.states.row(t).transpose() - nl.equilibrium).norm() / opts.amplitude;
        rep.max_growth = std::max(rep.max_growth, g);
      }
      if (rep.max_growth > opts.growth_limit) {
        rep.stable = false;
        os << "trial " << trial + 1 << " grew by " << rep.max_growth;
      }
    } catch (const NonFiniteState& e) {
      rep.stable = false;
      rep.max_growth = INFINITY;
      os << "trial " << trial + 1 << " blew up at t=" << e.time();
    } catch (const StepLimitExceeded& e) {
      rep.stable = false;
      os << "trial " << trial + 1 << " exceeded the step limit at t=" << e.time();
    }
  }
  if (rep.stable) os << "max growth " << rep.max_growth << " over " << opts.trials << " trials";
  rep.detail = os.str();
  return rep;
}

void write_basis(const std::filesystem::path& path, const ReductionBasis& basis) {
  auto os = csv::open(path);
  const Index k = basis.order();
  std::vector<std::string> header;
  for (int side = 0; side < 2; ++side)
    for (Index j = 0; j < k; ++j) header.push_back(csv::format(basis.hankel(j)));
  Mat both(basis.V.rows(), 2 * k);
  both << basis.V, basis.W;
  csv::write_matrix(os, both, header);
}

}  // namespace embalance
