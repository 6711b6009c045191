#include "embalance/experiment.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "embalance/carleman.hpp"
#include "embalance/csv.hpp"
#include "embalance/errors.hpp"

namespace embalance {

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::full_nonlinear: return "full-nonlinear";
    case Pipeline::bilinear_full: return "bilinear-full";
    case Pipeline::linear_part: return "linear-part";
    case Pipeline::lall: return "lall";
    case Pipeline::nonlinear_gramians: return "nonlinear-gramians";
    case Pipeline::ltv: return "ltv";
  }
  return "?";
}

Pipeline pipeline_from_string(const std::string& s) {
  for (Pipeline p : {Pipeline::full_nonlinear, Pipeline::bilinear_full, Pipeline::linear_part,
                     Pipeline::lall, Pipeline::nonlinear_gramians, Pipeline::ltv})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown pipeline '" + s + "'");
}

std::string to_string(LallMethod m) { return m == LallMethod::bilinear ? "bilinear" : "empirical"; }

LallMethod lall_method_from_string(const std::string& s) {
  if (s == "bilinear") return LallMethod::bilinear;
  if (s == "empirical") return LallMethod::empirical;
  throw ConfigError("unknown lall.method '" + s + "'");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string exec_name(Execution e) { return e == Execution::serial ? "serial" : "parallel"; }

Execution exec_from_string(const std::string& s) {
  if (s == "serial") return Execution::serial;
  if (s == "parallel") return Execution::parallel;
  throw ConfigError("unknown exec.mode '" + s + "'");
}

std::string from_int(long long v) { return std::to_string(v); }
std::string from_bool(bool b) { return b ? "true" : "false"; }

void put_quad(textfmt::Document& d, const std::string& prefix, const QuadratureConfig& q) {
  d[prefix + ".horizon"] = textfmt::from_double(q.horizon);
  d[prefix + ".nodes"] = from_int(q.nodes);
  d[prefix + ".rule"] = to_string(q.rule);
}

/// Consumes keys from a document and reports any left over.
class Reader {
 public:
  explicit Reader(const textfmt::Document& d) : doc_(d) {}

  template <typename F>
  void take(const std::string& key, F&& apply) {
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    apply(it->second);
    doc_.erase(it);
  }
  void real(const std::string& key, double& v) {
    take(key, [&](const std::string& s) { v = textfmt::to_double(key, s); });
  }
  void integer(const std::string& key, Index& v) {
    take(key, [&](const std::string& s) { v = static_cast<Index>(textfmt::to_int(key, s)); });
  }
  void seed(const std::string& key, std::uint64_t& v) {
    take(key, [&](const std::string& s) {
      const long long x = textfmt::to_int(key, s);
      if (x < 0) throw ConfigError(key + ": seed must be nonnegative");
      v = static_cast<std::uint64_t>(x);
    });
  }
  void boolean(const std::string& key, bool& v) {
    take(key, [&](const std::string& s) { v = textfmt::to_bool(key, s); });
  }
  void list(const std::string& key, std::vector<double>& v) {
    take(key, [&](const std::string& s) { v = textfmt::to_list(key, s); });
  }
  void text(const std::string& key, std::string& v) {
    take(key, [&](const std::string& s) { v = s; });
  }
  void quad(const std::string& prefix, QuadratureConfig& q) {
    real(prefix + ".horizon", q.horizon);
    integer(prefix + ".nodes", q.nodes);
    take(prefix + ".rule", [&](const std::string& s) { q.rule = quadrature_rule_from_string(s); });
  }
  void finish() const {
    if (!doc_.empty()) throw ConfigError("unknown configuration key '" + doc_.begin()->first + "'");
  }

 private:
  textfmt::Document doc_;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (preset != "rc-ladder" && preset != "random-lti" && preset != "lti-file")
    throw ConfigError("unknown model.preset '" + preset + "'");
  if (preset == "lti-file" && model_file.empty()) throw ConfigError("model.file is required for lti-file");
  if (preset != "lti-file" && nodes < 1) throw ConfigError("model.nodes must be positive");
  if (order < 1) throw ConfigError("order must be positive");
  if (rotations < 0) throw ConfigError("sets.rotations must be nonnegative");
  auto check_scales = [](const std::vector<double>& m, const char* key) {
    if (m.empty()) throw ConfigError(std::string(key) + " must not be empty");
    for (double c : m)
      if (!std::isfinite(c) || c == 0.0) throw ConfigError(std::string(key) + " entries must be finite and nonzero");
  };
  check_scales(lall_scales, "sets.M");
  check_scales(ctrl_scales, "ctrl.M");
  check_scales(obs_scales, "obs.M");
  lall_quad.validate();
  ctrl_quad.validate();
  obs_quad.validate();
  ltv_quad.validate();
  integrator.validate();
  if (!(cond_limit > 1.0)) throw ConfigError("gramian.cond_limit must exceed 1");
  if (!(sim_horizon > 0.0)) throw ConfigError("sim.horizon must be positive");
  if (sim_samples < 2) throw ConfigError("sim.samples must be at least 2");
  if (!std::isfinite(input_amplitude) || !std::isfinite(input_rate)) throw ConfigError("input parameters must be finite");
  if (!(stability.horizon > 0.0) || stability.trials < 1 || !(stability.amplitude > 0.0) ||
      !(stability.growth_limit > 1.0))
    throw ConfigError("invalid stability settings");
  if (max_dense_dim < 0) throw ConfigError("output.max_dense_dim must be nonnegative");
}

EmpiricalOptions ExperimentConfig::empirical_options() const {
  EmpiricalOptions o;
  o.integrator = integrator;
  o.mean = mean;
  o.cond_limit = cond_limit;
  o.scale_atol = scale_atol;
  o.exec = exec;
  return o;
}

ScalarSignal ExperimentConfig::input() const {
  const double a = input_amplitude, r = input_rate;
  return [a, r](double t) { return a * std::exp(-r * t); };
}

textfmt::Document ExperimentConfig::to_document() const {
  using textfmt::from_double;
  using textfmt::from_list;
  textfmt::Document d;
  d["model.preset"] = preset;
  d["model.nodes"] = from_int(nodes);
  d["model.seed"] = from_int(static_cast<long long>(seed));
  if (!model_file.empty()) d["model.file"] = model_file;
  d["pipeline"] = to_string(pipeline);
  d["order"] = from_int(order);
  d["sets.M"] = from_list(lall_scales);
  d["sets.rotations"] = from_int(rotations);
  d["sets.rotation_seed"] = from_int(static_cast<long long>(rotation_seed));
  d["lall.method"] = to_string(lall_method);
  d["bilinear.normalize"] = from_bool(normalize);
  put_quad(d, "lall.quad", lall_quad);
  d["ctrl.M"] = from_list(ctrl_scales);
  put_quad(d, "ctrl.quad", ctrl_quad);
  d["obs.M"] = from_list(obs_scales);
  put_quad(d, "obs.quad", obs_quad);
  put_quad(d, "ltv.quad", ltv_quad);
  d["integrator.method"] = to_string(integrator.method);
  d["integrator.step"] = from_double(integrator.step);
  d["integrator.rtol"] = from_double(integrator.rtol);
  d["integrator.atol"] = from_double(integrator.atol);
  d["integrator.max_steps"] = from_int(static_cast<long long>(integrator.max_steps));
  d["gramian.cond_limit"] = from_double(cond_limit);
  d["gramian.mean"] = to_string(mean);
  d["gramian.scale_atol"] = from_bool(scale_atol);
  d["exec.mode"] = exec_name(exec);
  d["sim.horizon"] = from_double(sim_horizon);
  d["sim.samples"] = from_int(sim_samples);
  d["input.amplitude"] = from_double(input_amplitude);
  d["input.rate"] = from_double(input_rate);
  d["stability.horizon"] = from_double(stability.horizon);
  d["stability.trials"] = from_int(stability.trials);
  d["stability.amplitude"] = from_double(stability.amplitude);
  d["stability.growth_limit"] = from_double(stability.growth_limit);
  d["stability.seed"] = from_int(static_cast<long long>(stability.seed));
  d["out"] = out;
  d["output.max_dense_dim"] = from_int(max_dense_dim);
  return d;
}

ExperimentConfig ExperimentConfig::from_document(const textfmt::Document& doc) {
  ExperimentConfig c;
  Reader r(doc);
  r.text("model.preset", c.preset);
  r.integer("model.nodes", c.nodes);
  r.seed("model.seed", c.seed);
  r.text("model.file", c.model_file);
  r.take("pipeline", [&](const std::string& s) { c.pipeline = pipeline_from_string(s); });
  r.integer("order", c.order);
  r.list("sets.M", c.lall_scales);
  r.integer("sets.rotations", c.rotations);
  r.seed("sets.rotation_seed", c.rotation_seed);
  r.take("lall.method", [&](const std::string& s) { c.lall_method = lall_method_from_string(s); });
  r.boolean("bilinear.normalize", c.normalize);
  r.quad("lall.quad", c.lall_quad);
  r.list("ctrl.M", c.ctrl_scales);
  r.quad("ctrl.quad", c.ctrl_quad);
  r.list("obs.M", c.obs_scales);
  r.quad("obs.quad", c.obs_quad);
  r.quad("ltv.quad", c.ltv_quad);
  r.take("integrator.method", [&](const std::string& s) { c.integrator.method = integrator_method_from_string(s); });
  r.real("integrator.step", c.integrator.step);
  r.real("integrator.rtol", c.integrator.rtol);
  r.real("integrator.atol", c.integrator.atol);
  r.take("integrator.max_steps", [&](const std::string& s) {
    const long long v = textfmt::to_int("integrator.max_steps", s);
    if (v < 1) throw ConfigError("integrator.max_steps must be at least 1");
    c.integrator.max_steps = static_cast<std::size_t>(v);
  });
  r.real("gramian.cond_limit", c.cond_limit);
  r.take("gramian.mean", [&](const std::string& s) { c.mean = mean_mode_from_string(s); });
  r.boolean("gramian.scale_atol", c.scale_atol);
  r.take("exec.mode", [&](const std::string& s) { c.exec = exec_from_string(s); });
  r.real("sim.horizon", c.sim_horizon);
  r.integer("sim.samples", c.sim_samples);
  r.real("input.amplitude", c.input_amplitude);
  r.real("input.rate", c.input_rate);
  r.real("stability.horizon", c.stability.horizon);
  r.take("stability.trials", [&](const std::string& s) {
    c.stability.trials = static_cast<int>(textfmt::to_int("stability.trials", s));
  });
  r.real("stability.amplitude", c.stability.amplitude);
  r.real("stability.growth_limit", c.stability.growth_limit);
  r.seed("stability.seed", c.stability.seed);
  r.text("out", c.out);
  r.integer("output.max_dense_dim", c.max_dense_dim);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_document(textfmt::parse_file(path));
}

void ExperimentConfig::save(const std::string& path) const {
  auto os = csv::open(path);
  textfmt::write(os, to_document());
  if (!os) throw ConfigError("cannot write " + path);
}

std::string default_benchmark_text() {
  return R"(# 30-node RC ladder benchmark: u(t) = exp(-t) on [0, 1], reduced order 3.
model.preset = rc-ladder
model.nodes = 30
model.seed = 1

pipeline = nonlinear-gramians
order = 3

# Lall sets for the Lyapunov-form gramians of the order-930 lift.
sets.M = [-5, -0.5, -1, -0.1, 0.1, 0.5, 1, 5]
sets.rotations = 0
sets.rotation_seed = 11
lall.method = bilinear
bilinear.normalize = true
lall.quad.horizon = 1
lall.quad.nodes = 101
lall.quad.rule = simpson

# Averaged-fundamental gramians. The backward solutions grow like exp(164 t), so the
# controllability horizon stays below the point where <Theta(-t)> exceeds gramian.cond_limit.
ctrl.M = [-1e-13, 1e-13]
ctrl.quad.horizon = 0.16
ctrl.quad.nodes = 101
ctrl.quad.rule = simpson
obs.M = [-0.01, 0.01]
obs.quad.horizon = 1
obs.quad.nodes = 101
obs.quad.rule = simpson

ltv.quad.horizon = 0.16
ltv.quad.nodes = 101
ltv.quad.rule = simpson

integrator.method = rk45-adaptive
integrator.step = 0.001
integrator.rtol = 1e-08
integrator.atol = 1e-10
integrator.max_steps = 5000000

gramian.cond_limit = 1000000000000
gramian.mean = equilibrium
gramian.scale_atol = true
exec.mode = parallel

sim.horizon = 1
sim.samples = 1001
input.amplitude = 1
input.rate = 1

stability.horizon = 1
stability.trials = 5
stability.amplitude = 0.001
stability.growth_limit = 1000
stability.seed = 7

out = out
output.max_dense_dim = 100
)";
}

ExperimentConfig default_benchmark_config() {
  std::istringstream is(default_benchmark_text());
  return ExperimentConfig::from_document(textfmt::parse(is));
}

// ---------------------------------------------------------------------------
// RMS

double rms_error(const std::vector<double>& ref_grid, const Vec& ref, const std::vector<double>& test_grid,
                 const Vec& test) {
  if (ref_grid.size() != test_grid.size() || static_cast<std::size_t>(ref.size()) != ref_grid.size() ||
      static_cast<std::size_t>(test.size()) != test_grid.size() || ref_grid.empty())
    throw GridMismatch("rms_error: sample counts differ");
  for (std::size_t i = 0; i < ref_grid.size(); ++i) {
    const double scale = std::max({1.0, std::abs(ref_grid[i]), std::abs(test_grid[i])});
    if (std::abs(ref_grid[i] - test_grid[i]) > 1e-12 * scale)
      throw GridMismatch("rms_error: grids differ at sample " + std::to_string(i));
  }
  return std::sqrt((ref - test).squaredNorm() / static_cast<double>(ref.size()));
}

namespace {

Vec scalar_output(const Trajectory& tr) {
  if (tr.outputs.cols() != 1) throw GridMismatch("rms_error: scalar outputs required");
  return tr.outputs.col(0);
}

}  // namespace

double rms_error(const Trajectory& ref, const Trajectory& test) {
  return rms_error(ref.grid, scalar_output(ref), test.grid, scalar_output(test));
}

double relative_rms(const Trajectory& ref, const Trajectory& test) {
  const Vec y = scalar_output(ref);
  const double norm = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
  return norm > 0.0 ? rms_error(ref, test) / norm : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const ConfigError& e) {
    throw PipelineError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what(), false);
  }
}

PerturbationSets make_sets(const std::vector<double>& scales, const ExperimentConfig& cfg, Index dim) {
  PerturbationSets s{scales, {}};
  if (cfg.rotations > 0) s.rotations = random_rotations(dim, static_cast<std::size_t>(cfg.rotations), cfg.rotation_seed);
  s.validate(dim);
  return s;
}

RowVec linear_output_row(const NonlinearModel& m) {
  RowVec C(m.n);
  const Vec y0 = m.output_map(0.0, m.equilibrium);
  for (Index j = 0; j < m.n; ++j) C(j) = (m.output_map(0.0, m.equilibrium + Vec::Unit(m.n, j)) - y0)(0);
  return C;
}

}  // namespace

PipelineContext::PipelineContext(ExperimentConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
PipelineContext::~PipelineContext() = default;

const NonlinearModel& PipelineContext::model() {
  if (!model_) {
    model_ = stage("model", [&] {
      if (cfg_.preset == "lti-file") {
        const LtiMatrices m = load_lti(cfg_.model_file);
        return LTVModel::constant(m.A, m.B, m.C).to_nonlinear("lti-file");
      }
      return model_preset(cfg_.preset, cfg_.nodes, cfg_.seed);
    });
  }
  return *model_;
}

const BilinearModel& PipelineContext::lift() {
  if (!lift_) lift_ = stage("carleman", [&] { return carleman_lift(model()); });
  return *lift_;
}

const LyapunovSolver& PipelineContext::lift_solver() {
  if (!solver_) {
    const Mat& A = lift().A;
    solver_ = stage("lyapunov", [&] { return std::make_unique<LyapunovSolver>(A); });
  }
  return *solver_;
}

Trajectory PipelineContext::simulate(const NonlinearModel& m) {
  const ScalarSignal u = cfg_.input();
  const Index p = m.p;
  return integrate(m, m.equilibrium, [u, p](double t) -> Vec { return Vec::Constant(p, u(t)); }, 0.0,
                   cfg_.sim_horizon, cfg_.sim_samples - 1, cfg_.integrator);
}

Trajectory PipelineContext::simulate(const BilinearModel& m) {
  return embalance::simulate(m, Vec::Zero(m.dim()), cfg_.input(), 0.0, cfg_.sim_horizon,
                             cfg_.sim_samples - 1, cfg_.integrator);
}

const Trajectory& PipelineContext::nonlinear_reference() {
  if (!nl_ref_) {
    const NonlinearModel& m = model();
    nl_ref_ = stage("simulate-reference", [&] { return simulate(m); });
  }
  return *nl_ref_;
}

const Trajectory& PipelineContext::bilinear_reference() {
  if (!bl_ref_) {
    const BilinearModel& b = lift();
    bl_ref_ = stage("simulate-bilinear", [&] { return simulate(b); });
  }
  return *bl_ref_;
}

GramianPair pipeline_gramians(PipelineContext& ctx, Pipeline p) {
  const ExperimentConfig& cfg = ctx.config();
  const EmpiricalOptions opts = cfg.empirical_options();
  switch (p) {
    case Pipeline::linear_part: {
      const BilinearModel& bl = ctx.lift();
      const LyapunovSolver& solver = ctx.lift_solver();
      return stage("gramians", [&] { return linear_part_gramians(bl, &solver); });
    }
    case Pipeline::lall: {
      if (cfg.lall_method == LallMethod::bilinear) {
        const BilinearModel& bl = ctx.lift();
        const LyapunovSolver& solver = ctx.lift_solver();
        return stage("gramians", [&] { return bilinear_gramians(bl, cfg.lall_scales, cfg.normalize, &solver); });
      }
      const NonlinearModel& m = ctx.model();
      return stage("gramians", [&] {
        return GramianPair{lall_controllability(m, make_sets(cfg.lall_scales, cfg, m.p), cfg.lall_quad, opts),
                           lall_observability(m, make_sets(cfg.lall_scales, cfg, m.n), cfg.lall_quad, opts)};
      });
    }
    case Pipeline::nonlinear_gramians: {
      const NonlinearModel& m = ctx.model();
      return stage("gramians", [&] {
        return GramianPair{
            nonlinear_controllability(m, make_sets(cfg.ctrl_scales, cfg, m.n), cfg.ctrl_quad, opts),
            nonlinear_observability(m, make_sets(cfg.obs_scales, cfg, m.n), cfg.obs_quad, opts)};
      });
    }
    case Pipeline::ltv: {
      const NonlinearModel& m = ctx.model();
      return stage("gramians", [&] {
        const PolynomialDrift pd = taylor_drift(m, 1);
        Mat C = linear_output_row(m);
        return ltv_gramians(LTVModel::constant(pd.A1, m.input_map(0.0), C), cfg.ltv_quad, opts);
      });
    }
    case Pipeline::full_nonlinear:
    case Pipeline::bilinear_full:
      break;
  }
  throw PipelineError("gramians", to_string(p) + " computes no gramians", true);
}

PipelineResult run_pipeline(PipelineContext& ctx, Pipeline p) {
  const ExperimentConfig& cfg = ctx.config();
  PipelineResult res;
  RmsReport& rep = res.report;
  rep.pipeline = to_string(p);
  rep.sample_count = cfg.sim_samples;
  rep.horizon = cfg.sim_horizon;

  const bool bilinear_ref = p == Pipeline::linear_part || p == Pipeline::lall;
  rep.reference = bilinear_ref ? "bilinear-full" : "full-nonlinear";
  const Trajectory& nl_ref = ctx.nonlinear_reference();

  if (p == Pipeline::full_nonlinear) {
    res.output = nl_ref;
    rep.provenance = "nonlinear model";
  } else if (p == Pipeline::bilinear_full) {
    res.output = ctx.bilinear_reference();
    rep.provenance = "carleman lift, dimension " + std::to_string(ctx.lift().dim());
  } else {
    res.gramians = pipeline_gramians(ctx, p);
    const ReductionBasis basis = stage("balance", [&] { return balance(res.gramians->P, res.gramians->Q, cfg.order); });
    const std::string prov = to_string(res.gramians->P.method) + "/" + to_string(res.gramians->Q.method) +
                             " [" + res.gramians->P.set_summary + "]";
    const bool project_lift = p == Pipeline::linear_part || (p == Pipeline::lall && cfg.lall_method == LallMethod::bilinear);
    if (project_lift) {
      const BilinearModel& bl = ctx.lift();
      res.reduced = stage("project", [&] { return project_bilinear(bl, basis, prov + ", bilinear projection"); });
      const auto& rb = std::get<BilinearModel>(res.reduced->model);
      res.output = stage("simulate", [&] { return ctx.simulate(rb); });
    } else {
      const NonlinearModel& m = ctx.model();
      res.reduced = stage("project", [&] { return project_nonlinear(m, basis, prov + ", nonlinear projection"); });
      const auto& rn = std::get<NonlinearModel>(res.reduced->model);
      res.output = stage("simulate", [&] { return ctx.simulate(rn); });
    }
    rep.provenance = res.reduced->provenance;
    rep.hankel = basis.hankel;
    StabilityOptions so = cfg.stability;
    so.integrator = cfg.integrator;
    rep.stability = stage("stability", [&] { return stability_check(*res.reduced, so); });
    if (!rep.stability->stable) rep.status = "unstable";
  }

  const Trajectory& ref = bilinear_ref ? ctx.bilinear_reference() : nl_ref;
  stage("rms", [&] {
    rep.rms = rms_error(ref, res.output);
    rep.relative_rms = relative_rms(ref, res.output);
    rep.rms_vs_nonlinear = rms_error(nl_ref, res.output);
    return 0;
  });
  return res;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  PipelineContext ctx(cfg);
  return run_pipeline(ctx, cfg.pipeline);
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

textfmt::Document report_document(const RmsReport& r) {
  textfmt::Document d;
  d["pipeline"] = r.pipeline;
  d["reference"] = r.reference;
  d["status"] = r.status;
  d["rms"] = textfmt::from_double(r.rms);
  d["relative_rms"] = textfmt::from_double(r.relative_rms);
  d["rms_vs_nonlinear"] = textfmt::from_double(r.rms_vs_nonlinear);
  d["sample_count"] = std::to_string(r.sample_count);
  d["horizon"] = textfmt::from_double(r.horizon);
  d["provenance"] = r.provenance;
  if (r.hankel.size() > 0) d["hankel"] = textfmt::from_list({r.hankel.data(), r.hankel.data() + r.hankel.size()});
  if (r.stability) {
    d["stability.stable"] = from_bool(r.stability->stable);
    d["stability.detail"] = r.stability->detail;
  }
  if (!r.detail.empty()) d["detail"] = r.detail;
  return d;
}

}  // namespace

void write_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                     const PipelineResult& result, const Trajectory& reference) {
  {
    auto os = csv::open(dir / "output.csv");
    csv::write_row(os, std::vector<std::string>{"t", "y", "y_ref"});
    for (Index i = 0; i < result.output.samples(); ++i)
      csv::write_row(os, std::vector<double>{result.output.grid[static_cast<std::size_t>(i)],
                                             result.output.outputs(i, 0), reference.outputs(i, 0)});
  }
  if (result.output.dim() <= cfg.max_dense_dim) {
    auto os = csv::open(dir / "trajectory.csv");
    write_csv(os, result.output);
  }
  if (result.gramians && result.gramians->P.dim() <= cfg.max_dense_dim) {
    write_gramian(dir / "P", result.gramians->P);
    write_gramian(dir / "Q", result.gramians->Q);
    if (!result.gramians->P.diagnostics.nodes.empty()) write_gramian_trace(dir / "P_trace.csv", result.gramians->P);
    if (!result.gramians->Q.diagnostics.nodes.empty()) write_gramian_trace(dir / "Q_trace.csv", result.gramians->Q);
  }
  if (result.reduced) write_basis(dir / "basis.csv", result.reduced->basis);
  auto os = csv::open(dir / "report.txt");
  textfmt::write(os, report_document(result.report));
}

Comparison compare_all(const ExperimentConfig& cfg, bool write) {
  PipelineContext ctx(cfg);
  Comparison cmp;
  const std::filesystem::path out = cfg.out;
  const Index samples = cfg.sim_samples;
  cmp.curves = Mat::Constant(samples, 5, std::numeric_limits<double>::quiet_NaN());
  cmp.grid = uniform_grid(0.0, cfg.sim_horizon, samples - 1);

  std::optional<Trajectory> nl_ref;
  std::string ref_error;
  try {
    nl_ref = ctx.nonlinear_reference();
    cmp.curves.col(0) = nl_ref->outputs.col(0);
    if (write) {
      PipelineResult ref;
      ref.output = *nl_ref;
      ref.report.pipeline = "full-nonlinear";
      ref.report.reference = "full-nonlinear";
      ref.report.sample_count = samples;
      ref.report.horizon = cfg.sim_horizon;
      write_artifacts(out / "full-nonlinear", cfg, ref, *nl_ref);
    }
  } catch (const std::exception& e) {
    ref_error = e.what();
    cmp.any_failed = true;
  }

  const Pipeline order[] = {Pipeline::bilinear_full, Pipeline::linear_part, Pipeline::lall,
                            Pipeline::nonlinear_gramians};
  for (std::size_t i = 0; i < 4; ++i) {
    const Pipeline p = order[i];
    RmsReport row;
    row.pipeline = to_string(p);
    row.reference = (p == Pipeline::linear_part || p == Pipeline::lall) ? "bilinear-full" : "full-nonlinear";
    row.sample_count = samples;
    row.horizon = cfg.sim_horizon;
    if (!nl_ref) {
      row.status = "failed";
      row.detail = "reference simulation failed: " + ref_error;
      row.rms = row.relative_rms = row.rms_vs_nonlinear = std::numeric_limits<double>::quiet_NaN();
      cmp.rows.push_back(row);
      continue;
    }
    try {
      PipelineResult res = run_pipeline(ctx, p);
      cmp.curves.col(static_cast<Index>(i) + 1) = res.output.outputs.col(0);
      if (write) {
        const Trajectory& ref = res.report.reference == "bilinear-full" ? ctx.bilinear_reference() : *nl_ref;
        write_artifacts(out / res.report.pipeline, cfg, res, ref);
      }
      if (res.report.status == "unstable") cmp.any_unstable = true;
      row = std::move(res.report);
    } catch (const std::exception& e) {
      row.status = "failed";
      row.detail = e.what();
      row.rms = row.relative_rms = row.rms_vs_nonlinear = std::numeric_limits<double>::quiet_NaN();
      cmp.any_failed = true;
    }
    cmp.rows.push_back(std::move(row));
  }
  if (write) write_comparison(out, cmp);
  return cmp;
}

void write_comparison(const std::filesystem::path& dir, const Comparison& cmp) {
  {
    auto os = csv::open(dir / "comparison.csv");
    csv::write_row(os, std::vector<std::string>{"t", "y_a", "y_b", "y_c", "y_d", "y_e"});
    for (Index i = 0; i < cmp.curves.rows(); ++i) {
      std::vector<double> row{cmp.grid[static_cast<std::size_t>(i)]};
      for (Index j = 0; j < cmp.curves.cols(); ++j) row.push_back(cmp.curves(i, j));
      csv::write_row(os, row);
    }
  }
  auto os = csv::open(dir / "rms_table.csv");
  csv::write_row(os, std::vector<std::string>{"pipeline", "reference", "rms", "relative_rms",
                                              "rms_vs_nonlinear", "status", "detail"});
  for (const RmsReport& r : cmp.rows) {
    std::string detail = r.detail.empty() && r.stability ? r.stability->detail : r.detail;
    for (char& ch : detail)
      if (ch == ',' || ch == '\n') ch = ';';
    csv::write_row(os, std::vector<std::string>{r.pipeline, r.reference, csv::format(r.rms),
                                                csv::format(r.relative_rms), csv::format(r.rms_vs_nonlinear),
                                                r.status, detail});
  }
}

}  // namespace embalance
