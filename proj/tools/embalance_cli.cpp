// embalance: simulate, compute gramians, reduce and compare on the RC-ladder benchmark.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 unstable reduced model.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "embalance/csv.hpp"
#include "embalance/errors.hpp"
#include "embalance/experiment.hpp"

using namespace embalance;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnstable = 4;

struct CommonOptions {
  std::string config;
  std::optional<long long> order;
  std::optional<double> horizon;
  std::optional<long long> nodes;
  std::string method;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment configuration file");
  cmd->add_option("--order", o.order, "Reduced order k");
  cmd->add_option("--horizon", o.horizon, "Simulation horizon");
  cmd->add_option("--nodes", o.nodes, "Ladder nodes / model dimension");
  cmd->add_option("--method", o.method, "Pipeline (full-nonlinear, bilinear-full, linear-part, lall, nonlinear-gramians, ltv)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--set", o.sets, "Override any configuration key: key=value");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig base = o.config.empty() ? default_benchmark_config() : ExperimentConfig::load(o.config);
  textfmt::Document doc = base.to_document();
  if (o.order) doc["order"] = std::to_string(*o.order);
  if (o.horizon) doc["sim.horizon"] = textfmt::from_double(*o.horizon);
  if (o.nodes) doc["model.nodes"] = std::to_string(*o.nodes);
  if (!o.method.empty()) doc["pipeline"] = o.method;
  if (!o.out.empty()) doc["out"] = o.out;
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    doc[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
  }
  return ExperimentConfig::from_document(doc);
}

void print_report(const RmsReport& r) {
  std::printf("%-20s ref=%-15s rms=%.6e rel=%.6e vs-nonlinear=%.6e status=%s\n", r.pipeline.c_str(),
              r.reference.c_str(), r.rms, r.relative_rms, r.rms_vs_nonlinear, r.status.c_str());
  if (r.hankel.size() > 0) {
    std::printf("  hankel:");
    for (Index i = 0; i < r.hankel.size(); ++i) std::printf(" %.6e", r.hankel(i));
    std::printf("\n");
  }
  if (r.stability) std::printf("  stability: %s\n", r.stability->detail.c_str());
  if (!r.detail.empty()) std::printf("  %s\n", r.detail.c_str());
}

int cmd_simulate(const ExperimentConfig& cfg) {
  PipelineContext ctx(cfg);
  const bool lifted = cfg.pipeline == Pipeline::bilinear_full;
  const Trajectory& tr = lifted ? ctx.bilinear_reference() : ctx.nonlinear_reference();
  const std::filesystem::path path = std::filesystem::path(cfg.out) / "trajectory.csv";
  auto os = csv::open(path);
  if (tr.dim() <= cfg.max_dense_dim) {
    write_csv(os, tr);
  } else {
    Trajectory slim = tr;
    slim.states.resize(tr.samples(), 0);
    write_csv(os, slim);
  }
  std::printf("%s: %lld samples on [%g, %g], y(T) = %.10e -> %s\n", lifted ? "bilinear" : "nonlinear",
              static_cast<long long>(tr.samples()), tr.t0, tr.t1, tr.outputs(tr.samples() - 1, 0),
              path.string().c_str());
  return 0;
}

int cmd_gramian(const ExperimentConfig& cfg) {
  PipelineContext ctx(cfg);
  const GramianPair g = pipeline_gramians(ctx, cfg.pipeline);
  const std::filesystem::path dir = std::filesystem::path(cfg.out) / to_string(cfg.pipeline);
  if (g.P.dim() <= cfg.max_dense_dim) {
    write_gramian(dir / "P", g.P);
    write_gramian(dir / "Q", g.Q);
  }
  if (!g.P.diagnostics.nodes.empty()) write_gramian_trace(dir / "P_trace.csv", g.P);
  if (!g.Q.diagnostics.nodes.empty()) write_gramian_trace(dir / "Q_trace.csv", g.Q);
  const Svd s = svd(psd_factor(g.Q.matrix).factor.transpose() * psd_factor(g.P.matrix).factor);
  {
    auto os = csv::open(dir / "hankel.csv");
    csv::write_row(os, std::vector<std::string>{"sigma"});
    for (Index i = 0; i < s.sigma.size(); ++i) csv::write_row(os, std::vector<double>{s.sigma(i)});
  }
  std::printf("%s / %s  dim=%lld  clipped P=%.3e Q=%.3e\n", to_string(g.P.method).c_str(),
              to_string(g.Q.method).c_str(), static_cast<long long>(g.P.dim()), g.P.clipped_mass,
              g.Q.clipped_mass);
  std::printf("hankel:");
  for (Index i = 0; i < std::min<Index>(s.sigma.size(), 10); ++i) std::printf(" %.6e", s.sigma(i));
  std::printf("\n");
  return 0;
}

int cmd_reduce(const ExperimentConfig& cfg) {
  PipelineContext ctx(cfg);
  const PipelineResult res = run_pipeline(ctx, cfg.pipeline);
  const Trajectory& ref =
      res.report.reference == "bilinear-full" ? ctx.bilinear_reference() : ctx.nonlinear_reference();
  write_artifacts(std::filesystem::path(cfg.out) / res.report.pipeline, cfg, res, ref);
  print_report(res.report);
  return res.report.status == "unstable" ? kExitUnstable : 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  const Comparison cmp = compare_all(cfg);
  for (const RmsReport& r : cmp.rows) print_report(r);
  std::printf("wrote %s/comparison.csv and %s/rms_table.csv\n", cfg.out.c_str(), cfg.out.c_str());
  if (cmp.any_failed) return kExitNumerical;
  if (cmp.any_unstable) return kExitUnstable;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical balanced truncation of nonlinear systems"};
  app.require_subcommand(1);

  CommonOptions sim_opts, gram_opts, red_opts, bench_opts, cmp_opts;
  auto* sim = app.add_subcommand("simulate", "Simulate the configured model under the benchmark input");
  add_common(sim, sim_opts);
  auto* gram = app.add_subcommand("gramian", "Compute and write the gramian pair of a pipeline");
  add_common(gram, gram_opts);
  auto* red = app.add_subcommand("reduce", "Run one reduction pipeline end to end");
  add_common(red, red_opts);
  auto* bench = app.add_subcommand("bench", "Run a shipped benchmark");
  std::string bench_name;
  bench->add_option("name", bench_name, "Benchmark name")->required()->check(CLI::IsMember({"rc-ladder"}));
  add_common(bench, bench_opts);
  auto* cmp = app.add_subcommand("compare", "Run every pipeline and write the comparison table");
  add_common(cmp, cmp_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(resolve(sim_opts));
    if (*gram) return cmd_gramian(resolve(gram_opts));
    if (*red) return cmd_reduce(resolve(red_opts));
    if (*bench) return cmd_compare(resolve(bench_opts));
    if (*cmp) return cmd_compare(resolve(cmp_opts));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const PipelineError& e) {
    std::fprintf(stderr, "error in stage %s\n", e.what());
    return e.config_error() ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}
