#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cautious/dynamics.hpp"
#include "cautious/harness.hpp"
#include "cautious/io.hpp"
#include "cautious/suites.hpp"

namespace {

using namespace cautious;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitIoError = 3;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string format;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_option("--format", flags.format, "comma list of csv,json,svg");
  cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
}

ExperimentConfig load_or_default(const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = load_experiment_config(flags.config_path);
  } else {
    // toy protocol defaults: GDM vs C-GDM from (1,1)
    config.problem = ProblemSpec::toy_quadratic(4.0);
    const OptimizerConfig gdm = OptimizerConfig::gdm(0.01, 0.99);
    config.optimizers = {gdm, gdm.cautious()};
    config.labels = {"gdm", "c-gdm"};
    config.n_steps = 10000;
  }
  if (!flags.out_dir.empty()) config.outputs.dir = flags.out_dir;
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.workers > 0) config.workers = flags.workers;
  if (!flags.format.empty()) {
    config.outputs.csv = flags.format.find("csv") != std::string::npos;
    config.outputs.json = flags.format.find("json") != std::string::npos;
    config.outputs.svg = flags.format.find("svg") != std::string::npos;
  }
  return config;
}

int cmd_run(const CommonFlags& flags) {
  ExperimentConfig config = load_or_default(flags);
  config.validate();
  for (std::size_t oi = 0; oi < config.optimizers.size(); ++oi) {
    for (std::uint64_t seed : config.seeds) {
      const Trajectory traj = run_trajectory(config.optimizers[oi], config, seed);
      const std::string label = config.label_of(oi) + "_seed" + std::to_string(seed);
      for (const auto& file :
           emit_trajectory_outputs(traj, label, config, config.outputs)) {
        std::printf("wrote %s\n", file.c_str());
      }
      std::printf("%s: final loss %.6g over %zu steps%s\n", label.c_str(),
                  traj.final_loss(), traj.n_steps(),
                  traj.abort_step ? " (aborted)" : "");
    }
  }
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  ExperimentConfig config = load_or_default(flags);
  if (!config.grid) config.grid = default_toy_grid();
  config.validate();
  const auto sweeps = sweep_grid(config);
  for (const auto& file : emit_sweep_outputs(sweeps, config, config.outputs)) {
    std::printf("wrote %s\n", file.c_str());
  }
  for (const auto& sweep : sweeps) {
    std::printf("%s: best rate %.4f at lr=%.4g beta=%.4g\n", sweep.label.c_str(),
                sweep.best_rate, sweep.grid.lr_values[sweep.best_lr_index],
                sweep.grid.beta_values[sweep.best_beta_index]);
  }
  return kExitOk;
}

int cmd_ablate(const CommonFlags& flags) {
  ExperimentConfig config = load_or_default(flags);
  const PhiAblationReport report = ablate_phi(config);
  ensure_directory(config.outputs.dir);
  const std::string fp = config_fingerprint(config);

  nlohmann::json j;
  j["gdm_reference_rate"] = report.gdm_reference_rate;
  j["rows"] = nlohmann::json::array();
  std::printf("phi ablation (reference GDM optimal rate %.4f)\n",
              report.gdm_reference_rate);
  std::vector<LabeledSeries> curves;
  for (const auto& row : report.rows) {
    std::printf("  %-10s best rate %.4f\n", row.label.c_str(), row.sweep.best_rate);
    nlohmann::json entry;
    entry["label"] = row.label;
    entry["best_rate"] = row.sweep.best_rate;
    entry["best_lr"] = row.sweep.grid.lr_values[row.sweep.best_lr_index];
    entry["best_beta"] = row.sweep.grid.beta_values[row.sweep.best_beta_index];
    j["rows"].push_back(entry);
    if (config.outputs.csv) {
      write_text_file(config.outputs.dir + "/ablate_" + row.label + "_" + fp + ".csv",
                      heatmap_csv(row.sweep));
      write_text_file(
          config.outputs.dir + "/ablate_curve_" + row.label + "_" + fp + ".csv",
          trajectory_csv(row.best_curve));
    }
    LabeledSeries series{row.label, {}, {}};
    for (std::size_t k = 0; k < row.best_curve.points.size(); ++k) {
      series.x.push_back(static_cast<double>(k));
      series.y.push_back(row.best_curve.points[k].loss);
    }
    curves.push_back(std::move(series));
  }
  if (config.outputs.svg) {
    write_text_file(config.outputs.dir + "/ablate_curves_" + fp + ".svg",
                    svg_line_plot(curves, "best-cell loss curves", true));
  }
  if (config.outputs.json) {
    write_text_file(config.outputs.dir + "/ablate_summary_" + fp + ".json",
                    j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_verify(const CommonFlags& flags) {
  const std::string out_dir = flags.out_dir.empty() ? "out" : flags.out_dir;
  const auto suites = run_all_suites(flags.workers);
  nlohmann::json j;
  j["suites"] = nlohmann::json::array();
  bool all_ok = true;
  for (const auto& suite : suites) {
    std::printf("%-32s %4d/%-4d passed  worst margin %.3e%s%s\n",
                suite.name.c_str(), suite.total - suite.failed, suite.total,
                suite.worst_margin, suite.note.empty() ? "" : "  | ",
                suite.note.c_str());
    all_ok = all_ok && suite.all_passed();
    nlohmann::json js;
    js["name"] = suite.name;
    js["total"] = suite.total;
    js["failed"] = suite.failed;
    js["worst_margin"] = suite.worst_margin;
    js["note"] = suite.note;
    js["cases"] = nlohmann::json::array();
    for (const auto& c : suite.cases) {
      nlohmann::json jc = to_json(c.verdict);
      jc["seed"] = c.seed;
      jc["instance"] = c.instance;
      js["cases"].push_back(jc);
    }
    j["suites"].push_back(js);
  }
  j["all_passed"] = all_ok;
  ensure_directory(out_dir);
  write_text_file(out_dir + "/verify_report.json", j.dump(2) + "\n");
  std::printf("wrote %s/verify_report.json\n", out_dir.c_str());
  return all_ok ? kExitOk : kExitVerifyFailed;
}

int cmd_train(const CommonFlags& flags) {
  ExperimentConfig config = load_or_default(flags);
  if (flags.config_path.empty()) {
    config.problem = ProblemSpec::logistic(512, 32, 0);
    const OptimizerConfig adamw = OptimizerConfig::adamw(0.01);
    config.optimizers = {adamw, adamw.cautious()};
    config.labels = {"adamw", "c-adamw"};
    config.n_steps = 2000;
    if (!flags.seed) config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  }
  config.validate();
  const TrainReport report = train_benchmark(config);
  std::printf("%s\n", report.note.c_str());
  std::printf("%-6s %12s %12s %12s %10s %10s\n", "seed", "initial", "base",
              "cautious", "steps_b", "steps_c");
  for (const auto& row : report.rows) {
    std::printf("%-6llu %12.6g %12.6g %12.6g %10lld %10lld\n",
                static_cast<unsigned long long>(row.seed), row.initial_loss,
                row.final_loss_base, row.final_loss_cautious,
                static_cast<long long>(row.steps_to_target_base),
                static_cast<long long>(row.steps_to_target_cautious));
  }
  std::printf("cautious wins %d, base wins %d, ties %d\n", report.cautious_wins,
              report.base_wins, report.ties);
  std::printf("final losses match (1e-6 rel) on %d seeds; target reached first: "
              "cautious %d, base %d\n",
              report.final_matches, report.cautious_faster, report.base_faster);
  ensure_directory(config.outputs.dir);
  const std::string path = config.outputs.dir + "/train_report_" +
                           config_fingerprint(config) + ".json";
  write_text_file(path, to_json(report).dump(2) + "\n");
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_dynamics(const CommonFlags& flags) {
  const std::string out_dir = flags.out_dir.empty() ? "out" : flags.out_dir;
  OutputOptions out;
  out.dir = out_dir;
  if (!flags.format.empty()) {
    out.csv = flags.format.find("csv") != std::string::npos;
    out.json = flags.format.find("json") != std::string::npos;
    out.svg = flags.format.find("svg") != std::string::npos;
  }

  // heavy-ball flow on the toy problem, masked and unmasked
  ContinuousSystem system;
  system.objective = make_problem(ProblemSpec::toy_quadratic(4.0));
  system.kinetic = KineticEnergy::quadratic();
  system.phi_map = DescentMap::zero();
  system.psi_map = DescentMap::linear(1.0);
  double dt = 1e-3;
  double t_end = 20.0;

  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw IoError("cannot open config file: " + flags.config_path);
    nlohmann::json j;
    in >> j;
    if (j.contains("problem")) system.objective = make_problem(problem_from_json(j["problem"]));
    const std::string kinetic = j.value("kinetic", "quadratic");
    if (kinetic == "quadratic") {
      system.kinetic = KineticEnergy::quadratic();
    } else if (kinetic == "l1") {
      system.kinetic = KineticEnergy::l1();
    } else if (kinetic == "adam") {
      system.kinetic = KineticEnergy::adam_coupled(j.value("a", 1.0), j.value("b", 1.0),
                                                   j.value("e", 1e-8));
    } else if (kinetic == "lion") {
      system.kinetic = KineticEnergy::lion_lookahead_k(
          j.value("alpha", 1.0), j.value("gamma", 1.0), j.value("lookahead", 0.0));
    } else {
      throw std::invalid_argument("unknown kinetic '" + kinetic + "'");
    }
    system.phi_map = DescentMap::linear(j.value("phi", 0.0));
    system.psi_map = DescentMap::linear(j.value("psi", 1.0));
    if (j.contains("mask") && !j["mask"].is_null()) {
      system.mask = mask_rule_from_json(j["mask"]);
    }
    dt = j.value("dt", 1e-3);
    t_end = j.value("t_end", 20.0);
  } else {
    system.mask = MaskRule::soft_negative(0.0);
  }

  SystemState init;
  init.w = ones(system.objective.dim);
  init.s = zeros(system.objective.dim);
  if (system.kinetic.kind == KineticKind::AdamCoupled) {
    init.v = zeros(system.objective.dim);
  }
  const FlowTrace trace = integrate(system, init, dt, t_end);
  nlohmann::json fp_src;
  fp_src["objective"] = system.objective.name;
  fp_src["kinetic"] = static_cast<int>(system.kinetic.kind);
  fp_src["phi"] = system.phi_map.c;
  fp_src["psi"] = system.psi_map.c;
  if (system.mask) fp_src["mask"] = to_json(*system.mask);
  fp_src["dt"] = dt;
  fp_src["t_end"] = t_end;
  const std::string fp = fingerprint_text(fp_src.dump());
  for (const auto& file :
       emit_flow_outputs(trace, system.mask ? "masked" : "base", fp, out)) {
    std::printf("wrote %s\n", file.c_str());
  }
  std::printf("integrator %s, %zu samples, final loss %.6g, final H %.6g\n",
              trace.integrator.c_str(), trace.times.size(),
              trace.loss_samples.back(), trace.hamiltonian_samples.back());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cautious momentum-optimizer lab"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* run = app.add_subcommand("run", "single trajectory runs");
  add_common(run, flags);
  auto* sweep = app.add_subcommand("sweep", "(lr, beta) heatmap sweep");
  add_common(sweep, flags);
  auto* ablate = app.add_subcommand("ablate-phi", "mask-variant ablation");
  add_common(ablate, flags);
  auto* verify = app.add_subcommand("verify", "theorem verification suites");
  add_common(verify, flags);
  auto* train = app.add_subcommand("train", "base vs cautious trend benchmark");
  add_common(train, flags);
  auto* dynamics = app.add_subcommand("dynamics", "continuous-flow integration");
  add_common(dynamics, flags);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (ablate->parsed()) return cmd_ablate(flags);
    if (verify->parsed()) return cmd_verify(flags);
    if (train->parsed()) return cmd_train(flags);
    if (dynamics->parsed()) return cmd_dynamics(flags);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const cautious::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIoError;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  }
  return kExitOk;
}
