#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cautious/dynamics.hpp"
#include "cautious/harness.hpp"
#include "cautious/trajectory.hpp"
#include "cautious/verify.hpp"

#include "json.hpp"

namespace cautious {

// Surfaced as exit code 3 by the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const OptimizerConfig& config);
nlohmann::json to_json(const MaskRule& rule);
nlohmann::json to_json(const ProblemSpec& spec);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const Verdict& verdict);
nlohmann::json to_json(const RateEstimate& estimate);
nlohmann::json to_json(const TrainReport& report);

MaskRule mask_rule_from_json(const nlohmann::json& j);
OptimizerConfig optimizer_from_json(const nlohmann::json& j);
ProblemSpec problem_from_json(const nlohmann::json& j);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Deterministic %.17g rendering used by every CSV/SVG writer.
std::string format_double(double v);

// 64-bit FNV-1a of arbitrary text as 16 hex chars (file-name fingerprints).
std::string fingerprint_text(const std::string& text);

std::string trajectory_csv(const Trajectory& trajectory);
std::string heatmap_csv(const SweepResult& sweep);
std::string flow_csv(const FlowTrace& trace);

struct LabeledSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG renderers (no external plotting dependencies).
std::string svg_line_plot(const std::vector<LabeledSeries>& series,
                          const std::string& title, bool log_y);
std::string svg_heatmap(const SweepResult& sweep, const std::string& title);

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

// Writes one artifact in the requested formats; returns the created paths.
// File names embed the config fingerprint.
std::vector<std::string> emit_trajectory_outputs(const Trajectory& trajectory,
                                                 const std::string& label,
                                                 const ExperimentConfig& config,
                                                 const OutputOptions& out);
std::vector<std::string> emit_sweep_outputs(const std::vector<SweepResult>& sweeps,
                                            const ExperimentConfig& config,
                                            const OutputOptions& out);
std::vector<std::string> emit_flow_outputs(const FlowTrace& trace,
                                           const std::string& label,
                                           const std::string& fingerprint,
                                           const OutputOptions& out);

}  // namespace cautious
