#pragma once

// Experiment configuration and the reduction pipelines of the RC-ladder benchmark.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "embalance/balancing.hpp"
#include "embalance/gramians.hpp"
#include "embalance/textfmt.hpp"

namespace embalance {

enum class Pipeline { full_nonlinear, bilinear_full, linear_part, lall, nonlinear_gramians, ltv };

std::string to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& s);

/// How the `lall` pipeline obtains its gramians: the Lyapunov form on the Carleman lift, or
/// impulse/initial-state ensembles simulated on the nonlinear model.
enum class LallMethod { bilinear, empirical };

std::string to_string(LallMethod m);
LallMethod lall_method_from_string(const std::string& s);

/// Every numerical knob of every pipeline. Keys in the structured-text form are listed next to
/// each field.
struct ExperimentConfig {
  std::string preset = "rc-ladder";  // model.preset  (rc-ladder | random-lti | lti-file)
  Index nodes = 30;                  // model.nodes
  std::uint64_t seed = 1;            // model.seed
  std::string model_file;            // model.file

  Pipeline pipeline = Pipeline::nonlinear_gramians;  // pipeline
  Index order = 3;                                   // order

  std::vector<double> lall_scales{-5, -0.5, -1, -0.1, 0.1, 0.5, 1, 5};  // sets.M
  Index rotations = 0;                // sets.rotations (0: T = {I})
  std::uint64_t rotation_seed = 11;   // sets.rotation_seed
  LallMethod lall_method = LallMethod::bilinear;  // lall.method
  bool normalize = true;              // bilinear.normalize
  QuadratureConfig lall_quad{1.0, 101, QuadratureRule::simpson};  // lall.quad.*

  std::vector<double> ctrl_scales{-1e-13, 1e-13};                  // ctrl.M
  QuadratureConfig ctrl_quad{0.16, 101, QuadratureRule::simpson};  // ctrl.quad.*
  std::vector<double> obs_scales{-0.01, 0.01};                     // obs.M
  QuadratureConfig obs_quad{1.0, 101, QuadratureRule::simpson};    // obs.quad.*
  QuadratureConfig ltv_quad{0.16, 101, QuadratureRule::simpson};   // ltv.quad.*

  IntegratorConfig integrator;         // integrator.*
  double cond_limit = kDefaultConditionLimit;  // gramian.cond_limit
  MeanMode mean = MeanMode::equilibrium;       // gramian.mean
  bool scale_atol = true;                      // gramian.scale_atol
  Execution exec = Execution::parallel;        // exec.mode

  double sim_horizon = 1.0;  // sim.horizon
  Index sim_samples = 1001;  // sim.samples
  double input_amplitude = 1.0;  // input.amplitude   u(t) = amplitude * exp(-rate t)
  double input_rate = 1.0;       // input.rate

  StabilityOptions stability;  // stability.*

  std::string out = "out";        // out
  Index max_dense_dim = 100;      // output.max_dense_dim: larger gramians/states are not written

  void validate() const;
  EmpiricalOptions empirical_options() const;
  ScalarSignal input() const;

  textfmt::Document to_document() const;
  static ExperimentConfig from_document(const textfmt::Document& doc);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
  bool operator==(const ExperimentConfig& o) const { return to_document() == o.to_document(); }
};

/// The benchmark configuration shipped as configs/rc_ladder.cfg.
ExperimentConfig default_benchmark_config();
std::string default_benchmark_text();

/// sqrt(mean (y_ref - y_test)^2) over the grid; GridMismatch unless grids and sizes agree.
double rms_error(const std::vector<double>& ref_grid, const Vec& ref, const std::vector<double>& test_grid,
                 const Vec& test);
double rms_error(const Trajectory& ref, const Trajectory& test);
/// rms_error divided by the RMS of the reference output.
double relative_rms(const Trajectory& ref, const Trajectory& test);

struct RmsReport {
  std::string pipeline;
  std::string reference;
  double rms = 0.0;
  double relative_rms = 0.0;
  double rms_vs_nonlinear = 0.0;
  Index sample_count = 0;
  double horizon = 0.0;
  std::optional<StabilityReport> stability;
  Vec hankel;
  std::string provenance;
  std::string status = "ok";  // ok | unstable | failed
  std::string detail;
};

struct PipelineResult {
  RmsReport report;
  Trajectory output;   // trajectory of the model the pipeline produced
  std::optional<ReducedModel> reduced;
  std::optional<GramianPair> gramians;
};

/// Shared, lazily built pieces (model, lift, Schur factorization, reference runs).
class PipelineContext {
 public:
  explicit PipelineContext(ExperimentConfig cfg);
  ~PipelineContext();

  const ExperimentConfig& config() const { return cfg_; }
  const NonlinearModel& model();
  const BilinearModel& lift();
  const LyapunovSolver& lift_solver();
  const Trajectory& nonlinear_reference();
  const Trajectory& bilinear_reference();
  Trajectory simulate(const NonlinearModel& m);
  Trajectory simulate(const BilinearModel& m);

 private:
  ExperimentConfig cfg_;
  std::optional<NonlinearModel> model_;
  std::optional<BilinearModel> lift_;
  std::unique_ptr<LyapunovSolver> solver_;
  std::optional<Trajectory> nl_ref_;
  std::optional<Trajectory> bl_ref_;
};

/// Gramians of the configured pipeline (none for full-nonlinear and bilinear-full).
GramianPair pipeline_gramians(PipelineContext& ctx, Pipeline p);

/// Runs one pipeline; errors are rethrown as PipelineError tagged with the failing stage.
PipelineResult run_pipeline(PipelineContext& ctx, Pipeline p);
PipelineResult run_pipeline(const ExperimentConfig& cfg);

/// Writes output.csv, report.txt and, when small enough, trajectory.csv, gramians and basis.
void write_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                     const PipelineResult& result, const Trajectory& reference);

struct Comparison {
  std::vector<RmsReport> rows;  // linear-part... in fixed order: b, c, d, e
  std::vector<double> grid;
  Mat curves;                   // columns y_a .. y_e (NaN for failed rows)
  bool any_failed = false;
  bool any_unstable = false;
};

/// Fig-style comparison: nonlinear reference (a), bilinear lift (b), linear-part (c), Lall (d),
/// averaged-fundamental gramians (e). Failures are recorded per row.
Comparison compare_all(const ExperimentConfig& cfg, bool write = true);

void write_comparison(const std::filesystem::path& dir, const Comparison& cmp);

}  // namespace embalance
