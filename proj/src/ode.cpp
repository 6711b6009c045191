#include "embalance/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "embalance/csv.hpp"
#include "embalance/errors.hpp"

namespace embalance {

std::string to_string(IntegratorMethod m) {
  return m == IntegratorMethod::rk4_fixed ? "rk4-fixed" : "rk45-adaptive";
}

IntegratorMethod integrator_method_from_string(const std::string& s) {
  if (s == "rk4-fixed") return IntegratorMethod::rk4_fixed;
  if (s == "rk45-adaptive") return IntegratorMethod::rk45_adaptive;
  throw ConfigError("unknown integrator method '" + s + "'");
}

void IntegratorConfig::validate() const {
  if (max_steps < 1) throw ConfigError("integrator max_steps must be >= 1");
  if (method == IntegratorMethod::rk4_fixed) {
    if (!(step > 0.0)) throw ConfigError("integrator step must be positive");
  } else if (!(rtol > 0.0) || !(atol > 0.0)) {
    throw ConfigError("integrator tolerances must be positive");
  }
}

std::vector<double> uniform_grid(double t0, double t1, Index N) {
  if (N < 1) throw ConfigError("grid needs at least one interval");
  std::vector<double> grid(static_cast<std::size_t>(N) + 1);
  const double h = (t1 - t0) / static_cast<double>(N);
  for (Index k = 0; k < N; ++k) grid[static_cast<std::size_t>(k)] = t0 + static_cast<double>(k) * h;
  grid.back() = t1;
  return grid;
}

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_norm(const Vec& v, const Vec& y0, const Vec& y1, double rtol, double atol) {
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = v(i) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Index>(1, v.size())));
}

// Continuous extension of order four (Shampine).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct DenseStep {
  double t0, h;
  Vec r1, r2, r3, r4, r5;

  Vec operator()(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
  }
};

[[noreturn]] void blow_up(double t, const char* why) {
  throw NonFiniteState(std::string("integration failed near t=") + std::to_string(t) + ": " + why, t);
}

Trajectory integrate_rk4(const RhsFn& rhs, const Vec& x0, double t0, double t1, Index N,
                         const IntegratorConfig& cfg) {
  Trajectory traj{t0, t1, uniform_grid(t0, t1, N), Mat(N + 1, x0.size()), Mat()};
  traj.states.row(0) = x0.transpose();
  Vec x = x0;
  std::size_t steps = 0;
  for (Index k = 0; k < N; ++k) {
    const double ta = traj.grid[static_cast<std::size_t>(k)];
    const double tb = traj.grid[static_cast<std::size_t>(k) + 1];
    const auto m = static_cast<Index>(std::ceil(std::abs(tb - ta) / cfg.step - 1e-9));
    const Index sub = std::max<Index>(1, m);
    const double h = (tb - ta) / static_cast<double>(sub);
    for (Index j = 0; j < sub; ++j) {
      if (++steps > cfg.max_steps) throw StepLimitExceeded("rk4: max_steps exceeded", ta);
      const double t = ta + static_cast<double>(j) * h;
      const Vec k1 = rhs(t, x);
      const Vec k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1);
      const Vec k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2);
      const Vec k4 = rhs(t + h, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!finite(x)) blow_up(t + h, "non-finite state");
    }
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

Trajectory integrate_rk45(const RhsFn& rhs, const Vec& x0, double t0, double t1, Index N,
                          const IntegratorConfig& cfg) {
  Trajectory traj{t0, t1, uniform_grid(t0, t1, N), Mat(N + 1, x0.size()), Mat()};
  traj.states.row(0) = x0.transpose();
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const double rtol = cfg.rtol, atol = cfg.atol;

  double t = t0;
  Vec y = x0;
  Vec f = rhs(t, y);
  if (!finite(f)) blow_up(t, "non-finite derivative at the initial state");

  // Initial step (Hairer, Norsett & Wanner).
  double h;
  {
    const double d0 = scaled_norm(y, y, y, rtol, atol);
    const double d1 = scaled_norm(f, y, y, rtol, atol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Vec y1 = y + (dir * h0) * f;
    const Vec f1 = rhs(t + dir * h0, y1);
    const double d2 = finite(f1) ? scaled_norm(f1 - f, y, y, rtol, atol) / h0 : 1e300;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100 * h0, h1, span});
  }

  std::size_t next = 1;
  std::size_t attempts = 0;
  bool last_rejected = false;
  const std::size_t samples = traj.grid.size();
  const double eps = std::numeric_limits<double>::epsilon();

  while (next < samples) {
    if (++attempts > cfg.max_steps) throw StepLimitExceeded("rk45: max_steps exceeded", t);
    const double remaining = std::abs(t1 - t);
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    const double hmin = 16 * eps * std::max(std::abs(t), span);
    if (h < hmin) blow_up(t, "step size collapsed (finite-time blow-up suspected)");

    const double hs = dir * h;
    const Vec k1 = f;
    const Vec k2 = rhs(t + c2 * hs, y + hs * (a21 * k1));
    const Vec k3 = rhs(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 =
        rhs(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double tnew = final_step ? t1 : t + hs;
    const Vec k7 = rhs(tnew, ynew);

    if (!finite(ynew) || !finite(k7) || !finite(k6) || !finite(k5)) {
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    const Vec errv = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = scaled_norm(errv, y, ynew, rtol, atol);
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
      continue;
    }

    // Map the accepted step onto every grid point it covers.
    DenseStep dense;
    bool dense_ready = false;
    while (next < samples) {
      const double tg = traj.grid[next];
      const bool inside = final_step || (dir > 0 ? tg <= tnew : tg >= tnew);
      if (!inside) break;
      if (next == samples - 1 && final_step)
        traj.states.row(static_cast<Index>(next)) = ynew.transpose();
      else {
        if (!dense_ready) {
          const Vec dy = ynew - y;
          const Vec bspl = hs * k1 - dy;
          dense = DenseStep{t, tnew - t, y, dy, bspl, dy - hs * k7 - bspl,
                            hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7)};
          dense_ready = true;
        }
        traj.states.row(static_cast<Index>(next)) = dense(tg).transpose();
      }
      ++next;
    }

    t = tnew;
    y = ynew;
    f = k7;
    double factor = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    if (last_rejected) factor = std::min(1.0, factor);
    h *= factor;
    last_rejected = false;
  }
  return traj;
}

}  // namespace

Trajectory integrate(const RhsFn& rhs, const Vec& x0, double t0, double t1, Index N,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  if (t1 == t0) throw ConfigError("integration interval is empty (t1 == t0)");
  if (!finite(x0)) throw NonFiniteState("non-finite initial state", t0);
  return cfg.method == IntegratorMethod::rk4_fixed ? integrate_rk4(rhs, x0, t0, t1, N, cfg)
                                                   : integrate_rk45(rhs, x0, t0, t1, N, cfg);
}

namespace {

void fill_outputs(Trajectory& traj, const OutputFn& h, Index q) {
  traj.outputs.resize(traj.samples(), q);
  for (Index k = 0; k < traj.samples(); ++k)
    traj.outputs.row(k) = h(traj.grid[static_cast<std::size_t>(k)], traj.states.row(k).transpose()).transpose();
}

}  // namespace

Trajectory integrate(const NonlinearModel& model, const Vec& x0, const InputSignal& u, double t0,
                     double t1, Index N, const IntegratorConfig& cfg) {
  if (x0.size() != model.n) throw ConfigError("initial state has wrong dimension");
  RhsFn rhs;
  if (u) {
    rhs = [&model, &u](double t, const Vec& x) { return model.rhs(t, x, u(t)); };
  } else {
    rhs = [&model](double t, const Vec& x) { return model.drift(t, x); };
  }
  Trajectory traj = integrate(rhs, x0, t0, t1, N, cfg);
  fill_outputs(traj, model.output_map, model.q);
  return traj;
}

Trajectory simulate(const BilinearModel& model, const Vec& x0, const ScalarSignal& u, double t0,
                    double t1, Index N, const IntegratorConfig& cfg) {
  if (x0.size() != model.dim()) throw ConfigError("initial state has wrong dimension");
  RhsFn rhs = [&model, &u](double t, const Vec& x) { return model.rhs(x, u ? u(t) : 0.0); };
  Trajectory traj = integrate(rhs, x0, t0, t1, N, cfg);
  traj.outputs = traj.states * model.C.transpose();
  return traj;
}

Trajectory impulse_response(const NonlinearModel& model, double scale, const Vec& direction,
                            double t1, Index N, const IntegratorConfig& cfg) {
  const Vec x0 = model.equilibrium + model.impulse_increment(scale, direction);
  return integrate(model, x0, InputSignal{}, 0.0, t1, N, cfg);
}

Vec mean_value(const std::vector<double>& grid, const Mat& samples) {
  if (grid.size() < 2 || static_cast<Index>(grid.size()) != samples.rows())
    throw GridMismatch("mean_value needs at least two samples matching the grid");
  Vec acc = Vec::Zero(samples.cols());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double w = 0.5 * (grid[k + 1] - grid[k]);
    acc += w * (samples.row(static_cast<Index>(k)) + samples.row(static_cast<Index>(k) + 1)).transpose();
  }
  return acc / (grid.back() - grid.front());
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  std::vector<std::string> header{"t"};
  for (Index i = 0; i < traj.states.cols(); ++i) header.push_back("x" + std::to_string(i + 1));
  for (Index i = 0; i < traj.outputs.cols(); ++i) header.push_back("y" + std::to_string(i + 1));
  csv::write_row(os, header);
  std::vector<double> row;
  for (Index k = 0; k < traj.samples(); ++k) {
    row.clear();
    row.push_back(traj.grid[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < traj.states.cols(); ++i) row.push_back(traj.states(k, i));
    for (Index i = 0; i < traj.outputs.cols(); ++i) row.push_back(traj.outputs(k, i));
    csv::write_row(os, row);
  }
}

}  // namespace embalance
