#include "embalance/gramians.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "embalance/errors.hpp"
#include "embalance/textfmt.hpp"

namespace embalance {

std::string to_string(QuadratureRule r) { return r == QuadratureRule::simpson ? "simpson" : "trapezoid"; }

QuadratureRule quadrature_rule_from_string(const std::string& s) {
  if (s == "simpson") return QuadratureRule::simpson;
  if (s == "trapezoid") return QuadratureRule::trapezoid;
  throw ConfigError("unknown quadrature rule '" + s + "'");
}

std::string to_string(MeanMode m) { return m == MeanMode::equilibrium ? "equilibrium" : "time-average"; }

MeanMode mean_mode_from_string(const std::string& s) {
  if (s == "equilibrium") return MeanMode::equilibrium;
  if (s == "time-average") return MeanMode::time_average;
  throw ConfigError("unknown mean mode '" + s + "'");
}

void QuadratureConfig::validate() const {
  if (!(horizon > 0.0)) throw ConfigError("quadrature horizon must be positive");
  if (nodes < 3) throw ConfigError("quadrature needs at least 3 nodes");
  if (rule == QuadratureRule::simpson && nodes % 2 == 0)
    throw ConfigError("simpson rule needs an odd node count");
}

std::vector<double> QuadratureConfig::node_times() const {
  validate();
  return uniform_grid(0.0, horizon, nodes - 1);
}

std::vector<double> QuadratureConfig::weights() const {
  validate();
  const double h = horizon / static_cast<double>(nodes - 1);
  std::vector<double> w(static_cast<std::size_t>(nodes));
  if (rule == QuadratureRule::trapezoid) {
    for (auto& x : w) x = h;
    w.front() = w.back() = 0.5 * h;
  } else {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = (k % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
    w.front() = w.back() = h / 3.0;
  }
  return w;
}

std::string QuadratureConfig::describe() const {
  std::ostringstream os;
  os << to_string(rule) << ":" << nodes << "@[0," << horizon << "]";
  return os.str();
}

namespace {

IntegratorConfig member_config(const EmpiricalOptions& opts, double c) {
  IntegratorConfig cfg = opts.integrator;
  if (opts.scale_atol) cfg.atol *= std::abs(c);
  return cfg;
}

struct MemberIndex {
  std::size_t l, m, i;
};

/// Lexicographic (l, m, i) enumeration.
MemberIndex member_index(std::size_t k, std::size_t s, std::size_t dim) {
  return {k / (s * dim), (k / dim) % s, k % dim};
}

std::string member_label(const MemberIndex& idx, double c) {
  std::ostringstream os;
  os << "(i=" << idx.i + 1 << ", l=" << idx.l + 1 << ", m=" << idx.m + 1 << ", c=" << c << ")";
  return os.str();
}

[[noreturn]] void rethrow_member(const NonFiniteState& e, const MemberIndex& idx, double c) {
  throw NonFiniteState("member " + member_label(idx, c) + ": " + e.what(), e.time());
}

Gramian finish(Mat M, GramianKind kind, const QuadratureConfig& quad, std::string summary,
               GramianDiagnostics diag, bool clip) {
  if (!M.allFinite()) throw NonFiniteState("gramian has non-finite entries", quad.horizon);
  Gramian g;
  g.method = kind;
  g.horizon = quad.horizon;
  g.quadrature = quad.describe();
  g.set_summary = std::move(summary);
  g.diagnostics = std::move(diag);
  if (clip) {
    auto rep = repair_psd(M);
    g.matrix = std::move(rep.matrix);
    g.clipped_mass = rep.clipped_mass;
  } else {
    g.matrix = symmetrize(M);
  }
  g.degenerate = g.matrix.cwiseAbs().maxCoeff() == 0.0;
  return g;
}

}  // namespace

Gramian lall_controllability(const NonlinearModel& model, const PerturbationSets& sets,
                             const QuadratureConfig& quad, const EmpiricalOptions& opts) {
  const auto rot = sets.rotations_for(model.p);
  const auto times = quad.node_times();
  const auto w = quad.weights();
  const std::size_t r = rot.size(), s = sets.scales.size(), p = static_cast<std::size_t>(model.p);
  const std::size_t count = r * s * p;
  const Index nodes = quad.nodes;

  std::vector<Mat> centered(count);
  for_each_member(
      count,
      [&](std::size_t k) {
        const auto idx = member_index(k, s, p);
        const double c = sets.scales[idx.m];
        try {
          const Trajectory tr = impulse_response(model, c, rot[idx.l].col(static_cast<Index>(idx.i)),
                                                 quad.horizon, nodes - 1, member_config(opts, c));
          const Vec mean = opts.mean == MeanMode::equilibrium ? model.equilibrium : mean_value(tr);
          centered[k] = tr.states.rowwise() - mean.transpose();
        } catch (const NonFiniteState& e) {
          rethrow_member(e, idx, c);
        }
      },
      opts.exec);

  const Index n = model.n;
  Mat P = Mat::Zero(n, n);
  const Eigen::Map<const Vec> wv(w.data(), nodes);
  const double rs = static_cast<double>(r * s);
  std::vector<double> coef(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double c = sets.scales[member_index(k, s, p).m];
    coef[k] = 1.0 / (rs * c * c);
    P.noalias() += coef[k] * (centered[k].transpose() * wv.asDiagonal() * centered[k]);
  }

  GramianDiagnostics diag;
  diag.nodes = times;
  Mat Y(static_cast<Index>(count), n);
  for (Index t = 0; t < nodes; ++t) {
    for (std::size_t k = 0; k < count; ++k)
      Y.row(static_cast<Index>(k)) = std::sqrt(coef[k]) * centered[k].row(t);
    diag.integrand_norm.push_back((Y * Y.transpose()).norm());
  }
  return finish(std::move(P), GramianKind::lall_P, quad, sets.summary(), std::move(diag), true);
}

Gramian lall_observability(const NonlinearModel& model, const PerturbationSets& sets,
                           const QuadratureConfig& quad, const EmpiricalOptions& opts) {
  const auto rot = sets.rotations_for(model.n);
  const auto times = quad.node_times();
  const auto w = quad.weights();
  const std::size_t r = rot.size(), s = sets.scales.size(), n = static_cast<std::size_t>(model.n);
  const std::size_t count = r * s * n;
  const Index nodes = quad.nodes;
  const Index q = model.q;

  std::vector<Mat> outputs(count);  // nodes x q, centered
  for_each_member(
      count,
      [&](std::size_t k) {
        const auto idx = member_index(k, s, n);
        const double c = sets.scales[idx.m];
        const Vec x0 = model.equilibrium + c * rot[idx.l].col(static_cast<Index>(idx.i));
        try {
          const Trajectory tr = integrate(model, x0, InputSignal{}, 0.0, quad.horizon, nodes - 1,
                                          member_config(opts, c));
          const Vec mean = opts.mean == MeanMode::equilibrium
                               ? Vec(model.output_map(0.0, model.equilibrium))
                               : mean_value(tr.grid, tr.outputs);
          outputs[k] = tr.outputs.rowwise() - mean.transpose();
        } catch (const NonFiniteState& e) {
          rethrow_member(e, idx, c);
        }
      },
      opts.exec);

  const Index nn = model.n;
  Mat Q = Mat::Zero(nn, nn);
  const double rs = static_cast<double>(r * s);
  std::vector<Mat> integrand(static_cast<std::size_t>(nodes), Mat::Zero(nn, nn));
  for (std::size_t l = 0; l < r; ++l) {
    for (std::size_t m = 0; m < s; ++m) {
      const double c = sets.scales[m];
      const double coef = 1.0 / (rs * c * c);
      // G column i holds sqrt(w_t) * y^{ilm}(t) stacked over nodes and outputs, so that the
      // integral of Psi^{lm} is G^T G.
      Mat G(nodes * q, nn);
      for (std::size_t i = 0; i < n; ++i) {
        const Mat& Yi = outputs[(l * s + m) * n + i];
        for (Index t = 0; t < nodes; ++t)
          G.block(t * q, static_cast<Index>(i), q, 1) = std::sqrt(w[static_cast<std::size_t>(t)]) * Yi.row(t).transpose();
      }
      const Mat& T = rot[l];
      Q.noalias() += coef * (T * (G.transpose() * G) * T.transpose());
      for (Index t = 0; t < nodes; ++t) {
        Mat Yt(q, nn);
        for (std::size_t i = 0; i < n; ++i) Yt.col(static_cast<Index>(i)) = outputs[(l * s + m) * n + i].row(t).transpose();
        integrand[static_cast<std::size_t>(t)].noalias() += coef * (T * (Yt.transpose() * Yt) * T.transpose());
      }
    }
  }
  GramianDiagnostics diag;
  diag.nodes = times;
  for (const Mat& I : integrand) diag.integrand_norm.push_back(I.norm());
  return finish(std::move(Q), GramianKind::lall_Q, quad, sets.summary(), std::move(diag), true);
}

namespace {

/// Columns of the fundamental solution at the quadrature nodes, forward or backward.
std::vector<Mat> fundamental_solution(const LTVModel& model, TimeDirection dir,
                                      const QuadratureConfig& quad, const EmpiricalOptions& opts) {
  const Index n = model.n;
  const Index nodes = quad.nodes;
  const double t1 = dir == TimeDirection::forward ? quad.horizon : -quad.horizon;
  std::vector<Mat> columns(static_cast<std::size_t>(n));
  RhsFn rhs = [&model](double t, const Vec& x) -> Vec { return model.A(t) * x; };
  if (model.lti) {
    const Mat A = model.lti->A;
    rhs = [A](double, const Vec& x) -> Vec { return A * x; };
  }
  for_each_member(
      static_cast<std::size_t>(n),
      [&](std::size_t i) {
        const Vec e = Vec::Unit(n, static_cast<Index>(i));
        try {
          columns[i] = integrate(rhs, e, 0.0, t1, nodes - 1, opts.integrator).states;
        } catch (const NonFiniteState& err) {
          throw NonFiniteState("fundamental solution column " + std::to_string(i + 1) + ": " + err.what(),
                               err.time());
        }
      },
      opts.exec);
  std::vector<Mat> theta(static_cast<std::size_t>(nodes), Mat(n, n));
  for (Index t = 0; t < nodes; ++t)
    for (Index i = 0; i < n; ++i) theta[static_cast<std::size_t>(t)].col(i) = columns[static_cast<std::size_t>(i)].row(t).transpose();
  return theta;
}

Mat invert_at_node(const Mat& M, double cond_limit, double node_time, double* cond_out) {
  try {
    Mat inv = conditioned_inverse(M, cond_limit);
    *cond_out = condition_number(M);
    return inv;
  } catch (const IllConditioned& e) {
    throw IllConditioned("at quadrature node tau=" + std::to_string(node_time) + ": " + e.what(),
                         e.condition(), node_time);
  }
}

}  // namespace

GramianPair ltv_gramians(const LTVModel& model, const QuadratureConfig& quad,
                         const EmpiricalOptions& opts) {
  const auto times = quad.node_times();
  const auto w = quad.weights();
  const auto fwd = fundamental_solution(model, TimeDirection::forward, quad, opts);
  const auto bwd = fundamental_solution(model, TimeDirection::backward, quad, opts);
  const Index n = model.n;
  Mat P = Mat::Zero(n, n), Q = Mat::Zero(n, n);
  GramianDiagnostics dp, dq;
  dp.nodes = dq.nodes = times;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double tau = times[j];
    double cond = 0.0;
    const Mat X = invert_at_node(bwd[j], opts.cond_limit, tau, &cond) * model.B(-tau);
    const Mat ip = X * X.transpose();
    const Mat Y = model.C(tau) * fwd[j];
    const Mat iq = Y.transpose() * Y;
    P.noalias() += w[j] * ip;
    Q.noalias() += w[j] * iq;
    dp.integrand_norm.push_back(ip.norm());
    dp.condition.push_back(cond);
    dq.integrand_norm.push_back(iq.norm());
  }
  return {finish(std::move(P), GramianKind::ltv_P, quad, "fundamental solution", std::move(dp), true),
          finish(std::move(Q), GramianKind::ltv_Q, quad, "fundamental solution", std::move(dq), true)};
}

namespace {

struct MemberRun {
  Mat states;   // nodes x n, relative to the equilibrium
  Mat outputs;  // nodes x q, relative to h(x_eq)
};

std::vector<MemberRun> zero_input_members(const NonlinearModel& model, const PerturbationSets& sets,
                                          const std::vector<Mat>& rot, TimeDirection dir,
                                          const QuadratureConfig& quad, const EmpiricalOptions& opts,
                                          bool want_outputs) {
  const std::size_t r = rot.size(), s = sets.scales.size(), n = static_cast<std::size_t>(model.n);
  const std::size_t count = r * s * n;
  const double t1 = dir == TimeDirection::forward ? quad.horizon : -quad.horizon;
  const Vec y_eq = want_outputs ? Vec(model.output_map(0.0, model.equilibrium)) : Vec();
  std::vector<MemberRun> runs(count);
  for_each_member(
      count,
      [&](std::size_t k) {
        const auto idx = member_index(k, s, n);
        const double c = sets.scales[idx.m];
        const Vec x0 = model.equilibrium + c * rot[idx.l].col(static_cast<Index>(idx.i));
        try {
          Trajectory tr = integrate(model, x0, InputSignal{}, 0.0, t1, quad.nodes - 1,
                                    member_config(opts, c));
          runs[k].states = tr.states.rowwise() - model.equilibrium.transpose();
          if (want_outputs) runs[k].outputs = tr.outputs.rowwise() - y_eq.transpose();
        } catch (const NonFiniteState& e) {
          rethrow_member(e, idx, c);
        }
      },
      opts.exec);
  return runs;
}

}  // namespace

AveragedFundamental averaged_fundamental(const NonlinearModel& model, const PerturbationSets& sets,
                                         TimeDirection direction, const QuadratureConfig& quad,
                                         const EmpiricalOptions& opts) {
  const auto rot = sets.rotations_for(model.n);
  const auto runs = zero_input_members(model, sets, rot, direction, quad, opts, false);
  const std::size_t r = rot.size(), s = sets.scales.size(), n = static_cast<std::size_t>(model.n);
  const Index nodes = quad.nodes;
  const Index nn = model.n;

  AveragedFundamental af;
  af.sets = sets;
  af.direction = direction;
  af.grid = uniform_grid(0.0, direction == TimeDirection::forward ? quad.horizon : -quad.horizon,
                         nodes - 1);
  af.values.assign(static_cast<std::size_t>(nodes), Mat::Zero(nn, nn));
  const double rs = static_cast<double>(r * s);
  for (std::size_t l = 0; l < r; ++l) {
    const Mat& T = rot[l];
    for (std::size_t m = 0; m < s; ++m) {
      const double c = sets.scales[m];
      for (Index t = 0; t < nodes; ++t) {
        // sum_i (x^{ilm}(t)/c) e_i^T T_l^T = X_t T_l^T with X_t's columns the scaled states.
        Mat X(nn, nn);
        for (std::size_t i = 0; i < n; ++i)
          X.col(static_cast<Index>(i)) = runs[(l * s + m) * n + i].states.row(t).transpose() / c;
        if (sets.rotations.empty()) af.values[static_cast<std::size_t>(t)] += X;
        else af.values[static_cast<std::size_t>(t)].noalias() += X * T.transpose();
      }
    }
  }
  for (Mat& v : af.values) v /= rs;
  // Every member starts at x_eq + c T_l e_i, so the average is exactly I at t = 0.
  af.values.front() = Mat::Identity(nn, nn);
  return af;
}

Gramian nonlinear_controllability(const NonlinearModel& model, const PerturbationSets& sets,
                                  const QuadratureConfig& quad, const EmpiricalOptions& opts) {
  const AveragedFundamental af = averaged_fundamental(model, sets, TimeDirection::backward, quad, opts);
  const auto times = quad.node_times();
  const auto w = quad.weights();
  const Index n = model.n;
  Mat P = Mat::Zero(n, n);
  GramianDiagnostics diag;
  diag.nodes = times;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double tau = times[j];
    double cond = 0.0;
    const Mat X = invert_at_node(af.values[j], opts.cond_limit, tau, &cond) * model.input_map(-tau);
    const Mat integrand = X * X.transpose();
    P.noalias() += w[j] * integrand;
    diag.integrand_norm.push_back(integrand.norm());
    diag.condition.push_back(cond);
  }
  return finish(std::move(P), GramianKind::nonlinear_P, quad, sets.summary(), std::move(diag), true);
}

Gramian nonlinear_observability(const NonlinearModel& model, const PerturbationSets& sets,
                                const QuadratureConfig& quad, const EmpiricalOptions& opts) {
  const auto rot = sets.rotations_for(model.n);
  const auto runs = zero_input_members(model, sets, rot, TimeDirection::forward, quad, opts, true);
  const auto times = quad.node_times();
  const auto w = quad.weights();
  const std::size_t r = rot.size(), s = sets.scales.size(), n = static_cast<std::size_t>(model.n);
  const Index nn = model.n, q = model.q;
  const double rs = static_cast<double>(r * s);
  Mat Q = Mat::Zero(nn, nn);
  GramianDiagnostics diag;
  diag.nodes = times;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const Index t = static_cast<Index>(j);
    Mat z = Mat::Zero(q, nn);
    for (std::size_t l = 0; l < r; ++l) {
      for (std::size_t m = 0; m < s; ++m) {
        const double c = sets.scales[m];
        Mat Y(q, nn);
        for (std::size_t i = 0; i < n; ++i)
          Y.col(static_cast<Index>(i)) = runs[(l * s + m) * n + i].outputs.row(t).transpose() / c;
        if (sets.rotations.empty()) z += Y;
        else z.noalias() += Y * rot[l].transpose();
      }
    }
    z /= rs;
    const Mat integrand = z.transpose() * z;
    Q.noalias() += w[j] * integrand;
    diag.integrand_norm.push_back(integrand.norm());
  }
  return finish(std::move(Q), GramianKind::nonlinear_Q, quad, sets.summary(), std::move(diag), true);
}

Mat bilinear_input_outer(const BilinearModel& model, const std::vector<double>& scales,
                         bool normalize) {
  if (scales.empty()) throw ConfigError("bilinear gramian needs a nonempty scale set");
  const Index index = model.nilpotency_index > 0 ? model.nilpotency_index : nilpotency_index(model.N);
  if (index == 0) throw NotNilpotent("N is not nilpotent; the impulse series does not terminate");
  const Index nb = model.dim();
  Mat out = Mat::Zero(nb, nb);
  for (double c : scales) {
    Vec term = model.B;
    Vec v = model.B;
    for (Index k = 1; k < index; ++k) {
      term = (0.5 * c) * (model.N * term);
      v += term;
    }
    out.noalias() += v * v.transpose();
  }
  if (normalize) out /= static_cast<double>(scales.size());
  return out;
}

namespace {

Gramian exact_gramian(Mat X, GramianKind kind, std::string summary) {
  Gramian g;
  g.matrix = std::move(X);
  g.method = kind;
  g.horizon = 0.0;
  g.quadrature = "lyapunov";
  g.set_summary = std::move(summary);
  g.degenerate = g.matrix.cwiseAbs().maxCoeff() == 0.0;
  return g;
}

}  // namespace

GramianPair bilinear_gramians(const BilinearModel& model, const std::vector<double>& scales,
                              bool normalize, const LyapunovSolver* solver) {
  std::optional<LyapunovSolver> own;
  if (!solver) solver = &own.emplace(model.A);
  const Mat BB = bilinear_input_outer(model, scales, normalize);
  const Mat CC = model.C.transpose() * model.C;
  const std::string summary = "M=" + textfmt::from_list(scales) + (normalize ? " normalized" : " literal");
  return {exact_gramian(solver->solve(BB), GramianKind::bilinear_P, summary),
          exact_gramian(solver->solve_adjoint(CC), GramianKind::bilinear_Q, summary)};
}

GramianPair linear_part_gramians(const BilinearModel& model, const LyapunovSolver* solver) {
  std::optional<LyapunovSolver> own;
  if (!solver) solver = &own.emplace(model.A);
  const Mat BB = model.B * model.B.transpose();
  const Mat CC = model.C.transpose() * model.C;
  return {exact_gramian(solver->solve(BB), GramianKind::bilinear_P, "linear part"),
          exact_gramian(solver->solve_adjoint(CC), GramianKind::bilinear_Q, "linear part")};
}

GramianPair lti_gramians(const LtiMatrices& m) {
  LyapunovSolver solver(m.A);
  return {exact_gramian(solver.solve(m.B * m.B.transpose()), GramianKind::lti_P, "lyapunov"),
          exact_gramian(solver.solve_adjoint(m.C.transpose() * m.C), GramianKind::lti_Q, "lyapunov")};
}

}  // namespace embalance
