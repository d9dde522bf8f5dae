#include "cautious/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace cautious {

namespace {

const char* mask_kind_name(MaskKind k) {
  switch (k) {
    case MaskKind::DefaultScaled: return "default_scaled";
    case MaskKind::SoftNegative: return "soft_negative";
    case MaskKind::InnerProduct: return "inner_product";
    case MaskKind::GuaranteedDescentElementwise: return "guaranteed_elementwise";
    case MaskKind::GuaranteedDescentInner: return "guaranteed_inner";
    case MaskKind::Identity: return "identity";
  }
  return "unknown";
}

const char* optimizer_kind_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::GD: return "gd";
    case OptimizerKind::GDM: return "gdm";
    case OptimizerKind::SignedMomentum: return "signed_momentum";
    case OptimizerKind::AdamW: return "adamw";
    case OptimizerKind::Lion: return "lion";
  }
  return "unknown";
}

const char* problem_kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::ToyQuadratic: return "toy_quadratic";
    case ProblemKind::SeparableQuadratic: return "separable_quadratic";
    case ProblemKind::RandomSmoothQuadratic: return "random_smooth_quadratic";
    case ProblemKind::Rosenbrock: return "rosenbrock";
    case ProblemKind::Logistic: return "logistic";
  }
  return "unknown";
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
        c == '.') {
      out += c;
    } else if (c == '(' || c == ')' || c == ',' || c == '=' || c == '+' ||
               c == ':' || c == ' ') {
      if (!out.empty() && out.back() != '_') out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "unnamed" : out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json to_json(const MaskRule& rule) {
  nlohmann::json j;
  j["kind"] = mask_kind_name(rule.kind);
  switch (rule.kind) {
    case MaskKind::DefaultScaled:
      j["xi"] = rule.xi;
      j["strict"] = rule.strict;
      j["clamp_alpha_min_1"] = rule.clamp_alpha_min_1;
      j["scale_form"] = rule.scale_form == ScaleForm::Listing ? "listing" : "wrapper";
      if (rule.scale_form == ScaleForm::Wrapper) j["wrapper_eps"] = rule.wrapper_eps;
      break;
    case MaskKind::SoftNegative:
      j["c"] = rule.soft_c;
      break;
    case MaskKind::GuaranteedDescentElementwise:
      j["mu"] = rule.mu;
      j["sigma"] = rule.sigma;
      j["alpha_k"] = rule.alpha_k;
      break;
    case MaskKind::GuaranteedDescentInner:
      j["mu"] = rule.mu;
      j["eps_k"] = rule.step_eps;
      j["alpha_k"] = rule.alpha_k;
      break;
    default:
      break;
  }
  return j;
}

MaskRule mask_rule_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "default_scaled") {
    if (j.value("scale_form", "listing") == std::string("wrapper")) {
      MaskRule r = MaskRule::wrapper_scaled(j.value("wrapper_eps", 1e-8),
                                            j.value("strict", true));
      r.clamp_alpha_min_1 = j.value("clamp_alpha_min_1", false);
      return r;
    }
    return MaskRule::default_scaled(j.value("xi", 1.0), j.value("strict", true),
                                    j.value("clamp_alpha_min_1", false));
  }
  if (kind == "soft_negative") return MaskRule::soft_negative(j.at("c").get<double>());
  if (kind == "inner_product") return MaskRule::inner_product();
  if (kind == "guaranteed_elementwise") {
    return MaskRule::guaranteed_elementwise(j.at("mu").get<double>(),
                                            j.at("sigma").get<double>(),
                                            j.value("alpha_k", 1.0));
  }
  if (kind == "guaranteed_inner") {
    return MaskRule::guaranteed_inner(j.at("mu").get<double>(),
                                      j.at("eps_k").get<double>(),
                                      j.value("alpha_k", 1.0));
  }
  if (kind == "identity") return MaskRule::identity();
  throw std::invalid_argument("unknown mask kind '" + kind + "'");
}

nlohmann::json to_json(const OptimizerConfig& config) {
  nlohmann::json j;
  j["kind"] = optimizer_kind_name(config.kind);
  j["lr"] = config.lr;
  switch (config.kind) {
    case OptimizerKind::GD:
      break;
    case OptimizerKind::GDM:
    case OptimizerKind::SignedMomentum:
      j["beta"] = config.beta;
      break;
    case OptimizerKind::AdamW:
      j["beta1"] = config.beta1;
      j["beta2"] = config.beta2;
      j["e"] = config.eps;
      j["weight_decay"] = config.weight_decay;
      break;
    case OptimizerKind::Lion:
      j["beta1"] = config.beta1;
      j["beta2"] = config.beta2;
      j["weight_decay"] = config.weight_decay;
      break;
  }
  if (config.mask) {
    j["mask"] = to_json(*config.mask);
    j["decay_uses_scaled_lr"] = config.decay_uses_scaled_lr;
  }
  if (config.schedule) {
    j["schedule"] = {{"warmup_steps", config.schedule->warmup_steps},
                     {"total_steps", config.schedule->total_steps},
                     {"min_lr_frac", config.schedule->min_lr_frac}};
  }
  return j;
}

OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const double lr = j.at("lr").get<double>();
  OptimizerConfig c;
  if (kind == "gd") {
    c = OptimizerConfig::gd(lr);
  } else if (kind == "gdm") {
    c = OptimizerConfig::gdm(lr, j.value("beta", 0.9));
  } else if (kind == "signed_momentum") {
    c = OptimizerConfig::signed_momentum(lr, j.value("beta", 0.9));
  } else if (kind == "adamw") {
    c = OptimizerConfig::adamw(lr, j.value("beta1", 0.9), j.value("beta2", 0.99),
                               j.value("e", 1e-8), j.value("weight_decay", 0.0));
  } else if (kind == "lion") {
    c = OptimizerConfig::lion(lr, j.value("beta1", 0.9), j.value("beta2", 0.99),
                              j.value("weight_decay", 0.0));
  } else {
    throw std::invalid_argument("unknown optimizer kind '" + kind + "'");
  }
  if (j.contains("mask") && !j["mask"].is_null()) {
    c = c.cautious(mask_rule_from_json(j["mask"]));
    if (j.contains("decay_uses_scaled_lr")) {
      c.decay_uses_scaled_lr = j["decay_uses_scaled_lr"].get<bool>();
    }
  }
  if (j.contains("schedule") && !j["schedule"].is_null()) {
    CosineSchedule s;
    s.warmup_steps = j["schedule"].value("warmup_steps", 0);
    s.total_steps = j["schedule"].value("total_steps", 1);
    s.min_lr_frac = j["schedule"].value("min_lr_frac", 0.1);
    c.schedule = s;
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ProblemSpec& spec) {
  nlohmann::json j;
  j["kind"] = problem_kind_name(spec.kind);
  switch (spec.kind) {
    case ProblemKind::ToyQuadratic:
      j["kappa"] = spec.kappa;
      break;
    case ProblemKind::SeparableQuadratic:
      j["a"] = spec.a;
      break;
    case ProblemKind::RandomSmoothQuadratic:
      j["dim"] = spec.dim;
      j["mu"] = spec.mu;
      j["seed"] = spec.seed;
      break;
    case ProblemKind::Rosenbrock:
      j["dim"] = spec.dim;
      break;
    case ProblemKind::Logistic:
      j["n_samples"] = spec.n_samples;
      j["dim"] = spec.dim;
      j["seed"] = spec.seed;
      break;
  }
  return j;
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "toy_quadratic") {
    return ProblemSpec::toy_quadratic(j.value("kappa", 4.0));
  }
  if (kind == "separable_quadratic") {
    return ProblemSpec::separable_quadratic(j.at("a").get<Vec>());
  }
  if (kind == "random_smooth_quadratic") {
    return ProblemSpec::random_smooth_quadratic(j.at("dim").get<std::size_t>(),
                                                j.value("mu", 1.0),
                                                j.value("seed", std::uint64_t{0}));
  }
  if (kind == "rosenbrock") {
    return ProblemSpec::rosenbrock(j.at("dim").get<std::size_t>());
  }
  if (kind == "logistic") {
    return ProblemSpec::logistic(j.value("n_samples", std::size_t{128}),
                                 j.at("dim").get<std::size_t>(),
                                 j.value("seed", std::uint64_t{0}));
  }
  throw std::invalid_argument("unknown problem kind '" + kind + "'");
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["problem"] = to_json(config.problem);
  j["optimizers"] = nlohmann::json::array();
  for (const auto& opt : config.optimizers) j["optimizers"].push_back(to_json(opt));
  if (!config.labels.empty()) j["labels"] = config.labels;
  if (!config.w0.empty()) {
    j["w0"] = config.w0;
  } else {
    j["w0_preset"] = config.w0_preset;
  }
  j["n_steps"] = config.n_steps;
  j["seeds"] = config.seeds;
  if (config.grid) {
    j["grid"] = {{"lr", config.grid->lr_values}, {"beta", config.grid->beta_values}};
    j["sweep_steps"] = config.sweep_steps;
  }
  // output destination and worker count are not part of the experiment
  // identity: fingerprints stay stable across directories and parallelism
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("problem")) c.problem = problem_from_json(j["problem"]);
  if (j.contains("optimizers")) {
    for (const auto& item : j["optimizers"]) {
      c.optimizers.push_back(optimizer_from_json(item));
    }
  }
  if (j.contains("labels")) c.labels = j["labels"].get<std::vector<std::string>>();
  if (j.contains("w0")) {
    c.w0 = j["w0"].get<Vec>();
  } else if (j.contains("w0_preset")) {
    c.w0_preset = j["w0_preset"].get<std::string>();
  }
  c.n_steps = j.value("n_steps", 10000);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("grid") && !j["grid"].is_null()) {
    GridSpec g;
    const auto& jg = j["grid"];
    if (jg.contains("lr")) {
      g.lr_values = jg["lr"].get<Vec>();
    } else if (jg.contains("lr_log10_range")) {
      const auto range = jg["lr_log10_range"].get<std::vector<double>>();
      const int n = static_cast<int>(range.at(2));
      for (int i = 0; i < n; ++i) {
        g.lr_values.push_back(std::pow(
            10.0, range[0] + (range[1] - range[0]) * i / std::max(1, n - 1)));
      }
    }
    if (jg.contains("beta")) {
      g.beta_values = jg["beta"].get<Vec>();
    } else if (jg.contains("beta_range")) {
      const auto range = jg["beta_range"].get<std::vector<double>>();
      const int n = static_cast<int>(range.at(2));
      for (int i = 0; i < n; ++i) {
        g.beta_values.push_back(range[0] +
                                (range[1] - range[0]) * i / std::max(1, n - 1));
      }
    }
    c.grid = g;
    c.sweep_steps = j.value("sweep_steps", 300);
  }
  if (j.contains("out")) {
    const auto& jo = j["out"];
    c.outputs.dir = jo.value("dir", "out");
    c.outputs.csv = jo.value("csv", true);
    c.outputs.json = jo.value("json", true);
    c.outputs.svg = jo.value("svg", false);
  }
  c.workers = j.value("workers", 0);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return experiment_from_json(j);
}

std::string fingerprint_text(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  return fingerprint_text(to_json(config).dump());
}

nlohmann::json to_json(const Verdict& verdict) {
  nlohmann::json j;
  j["passed"] = verdict.passed;
  j["margin"] = verdict.margin;
  j["context"] = verdict.context;
  return j;
}

nlohmann::json to_json(const RateEstimate& estimate) {
  nlohmann::json j;
  j["slope"] = estimate.diverged ? "inf" : format_double(estimate.slope);
  j["per_step_rate"] =
      estimate.diverged ? "inf" : format_double(estimate.per_step_rate);
  j["r_squared"] = estimate.r_squared;
  j["diverged"] = estimate.diverged;
  j["window"] = {estimate.window.first, estimate.window.last};
  return j;
}

nlohmann::json to_json(const TrainReport& report) {
  nlohmann::json j;
  j["note"] = report.note;
  j["loss_target_mean"] = report.loss_target;
  j["cautious_wins"] = report.cautious_wins;
  j["base_wins"] = report.base_wins;
  j["ties"] = report.ties;
  j["final_matches_1e-6_rel"] = report.final_matches;
  j["cautious_reached_target_first"] = report.cautious_faster;
  j["base_reached_target_first"] = report.base_faster;
  j["seeds"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    j["seeds"].push_back({{"seed", row.seed},
                          {"initial_loss", row.initial_loss},
                          {"target", row.target},
                          {"final_loss_base", row.final_loss_base},
                          {"final_loss_cautious", row.final_loss_cautious},
                          {"steps_to_target_base", row.steps_to_target_base},
                          {"steps_to_target_cautious", row.steps_to_target_cautious},
                          {"mean_mask_ratio", row.mean_mask_ratio}});
  }
  return j;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = "step,loss,hamiltonian,mask_ratio,effective_lr";
  const std::size_t dim = trajectory.points.empty() ? 0 : trajectory.points[0].w.size();
  for (std::size_t i = 0; i < dim; ++i) out += ",w" + std::to_string(i);
  out += "\n";
  for (std::size_t k = 0; k < trajectory.points.size(); ++k) {
    const auto& pt = trajectory.points[k];
    out += std::to_string(k);
    out += ",";
    out += format_double(pt.loss);
    out += ",";
    out += format_double(pt.hamiltonian);
    out += ",";
    out += format_double(pt.mask_ratio);
    out += ",";
    out += format_double(pt.effective_lr);
    for (double w : pt.w) {
      out += ",";
      out += format_double(w);
    }
    out += "\n";
  }
  return out;
}

std::string heatmap_csv(const SweepResult& sweep) {
  std::string out = "lr\\beta";
  for (double beta : sweep.grid.beta_values) {
    out += ",";
    out += format_double(beta);
  }
  out += "\n";
  for (std::size_t li = 0; li < sweep.grid.lr_values.size(); ++li) {
    out += format_double(sweep.grid.lr_values[li]);
    for (std::size_t bi = 0; bi < sweep.grid.beta_values.size(); ++bi) {
      out += ",";
      const RateEstimate& cell = sweep.cell(li, bi);
      out += cell.diverged ? "inf" : format_double(cell.per_step_rate);
    }
    out += "\n";
  }
  return out;
}

std::string flow_csv(const FlowTrace& trace) {
  std::string out = "t";
  const std::size_t dim = trace.states.empty() ? 0 : trace.states[0].w.size();
  const std::size_t sdim = trace.states.empty() ? 0 : trace.states[0].s.size();
  const std::size_t vdim = trace.states.empty() ? 0 : trace.states[0].v.size();
  for (std::size_t i = 0; i < dim; ++i) out += ",w" + std::to_string(i);
  for (std::size_t i = 0; i < sdim; ++i) out += ",s" + std::to_string(i);
  for (std::size_t i = 0; i < vdim; ++i) out += ",v" + std::to_string(i);
  out += ",loss,hamiltonian\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out += format_double(trace.times[k]);
    for (double w : trace.states[k].w) {
      out += ",";
      out += format_double(w);
    }
    for (double s : trace.states[k].s) {
      out += ",";
      out += format_double(s);
    }
    for (double v : trace.states[k].v) {
      out += ",";
      out += format_double(v);
    }
    out += ",";
    out += format_double(trace.loss_samples[k]);
    out += ",";
    out += format_double(trace.hamiltonian_samples[k]);
    out += "\n";
  }
  return out;
}

namespace {

struct PlotBox {
  double x0, x1, y0, y1;
  double px(double x) const { return 60.0 + (x - x0) / (x1 - x0) * 640.0; }
  double py(double y) const { return 420.0 - (y - y0) / (y1 - y0) * 380.0; }
};

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::string svg_line_plot(const std::vector<LabeledSeries>& series,
                          const std::string& title, bool log_y) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double y = s.y[i];
      if (log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(y) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  PlotBox box{x0, x1, y0, y1};

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"480\" "
      "viewBox=\"0 0 760 480\">\n<rect width=\"760\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"380\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         title + (log_y ? " (log10 y)" : "") + "</text>\n";
  svg += "<line x1=\"60\" y1=\"420\" x2=\"700\" y2=\"420\" stroke=\"black\"/>\n";
  svg += "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"420\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = x0 + (x1 - x0) * tick / 4.0;
    const double fy = y0 + (y1 - y0) * tick / 4.0;
    svg += "<text x=\"" + format_double(box.px(fx)) +
           "\" y=\"436\" text-anchor=\"middle\" font-size=\"10\">" +
           format_double(fx) + "</text>\n";
    svg += "<text x=\"54\" y=\"" + format_double(box.py(fy) + 4.0) +
           "\" text-anchor=\"end\" font-size=\"10\">" + format_double(fy) +
           "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double y = s.y[i];
      if (log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(y)) continue;
      points += format_double(box.px(s.x[i])) + "," + format_double(box.py(y)) + " ";
    }
    const char* color = kSeriesColors[si % 8];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"610\" y=\"" + std::to_string(56 + 16 * si) +
           "\" font-size=\"12\" fill=\"" + color + "\">" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string svg_heatmap(const SweepResult& sweep, const std::string& title) {
  const std::size_t n_lr = sweep.grid.lr_values.size();
  const std::size_t n_beta = sweep.grid.beta_values.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& cell : sweep.cells) {
    if (!cell.diverged && std::isfinite(cell.per_step_rate)) {
      lo = std::min(lo, cell.per_step_rate);
      hi = std::max(hi, std::min(cell.per_step_rate, 1.5));
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (!(hi > lo)) hi = lo + 1.0;

  const double cw = 640.0 / static_cast<double>(n_beta);
  const double ch = 380.0 / static_cast<double>(n_lr);
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"480\" "
      "viewBox=\"0 0 760 480\">\n<rect width=\"760\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"380\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         title + "</text>\n";
  for (std::size_t li = 0; li < n_lr; ++li) {
    for (std::size_t bi = 0; bi < n_beta; ++bi) {
      const RateEstimate& cell = sweep.cell(li, bi);
      std::string fill;
      if (cell.diverged || !std::isfinite(cell.per_step_rate)) {
        fill = "#202020";
      } else {
        const double f =
            std::clamp((std::min(cell.per_step_rate, 1.5) - lo) / (hi - lo), 0.0, 1.0);
        const int r = static_cast<int>(40 + 215 * f);
        const int b = static_cast<int>(255 - 215 * f);
        char color[8];
        std::snprintf(color, sizeof(color), "#%02x30%02x", r, b);
        fill = color;
      }
      svg += "<rect x=\"" + format_double(60.0 + cw * static_cast<double>(bi)) +
             "\" y=\"" + format_double(40.0 + ch * static_cast<double>(li)) +
             "\" width=\"" + format_double(cw) + "\" height=\"" + format_double(ch) +
             "\" fill=\"" + fill + "\"/>\n";
    }
  }
  svg += "<text x=\"380\" y=\"452\" text-anchor=\"middle\" font-size=\"12\">beta "
         "(columns), lr (rows, top = smallest); best rate " +
         format_double(sweep.best_rate) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> emit_trajectory_outputs(const Trajectory& trajectory,
                                                 const std::string& label,
                                                 const ExperimentConfig& config,
                                                 const OutputOptions& out) {
  ensure_directory(out.dir);
  const std::string fp = config_fingerprint(config);
  const std::string base = out.dir + "/run_" + sanitize_label(label) + "_" + fp;
  std::vector<std::string> files;
  if (out.csv) {
    write_text_file(base + ".csv", trajectory_csv(trajectory));
    files.push_back(base + ".csv");
  }
  if (out.json) {
    nlohmann::json j;
    j["config"] = to_json(config);
    j["fingerprint"] = fp;
    j["label"] = label;
    j["seed"] = trajectory.seed;
    j["n_steps"] = trajectory.n_steps();
    j["final_loss"] = trajectory.final_loss();
    j["final_hamiltonian"] = trajectory.points.back().hamiltonian;
    if (trajectory.abort_step) {
      j["abort_step"] = *trajectory.abort_step;
      j["abort_reason"] = trajectory.abort_reason;
    }
    write_text_file(base + ".json", j.dump(2) + "\n");
    files.push_back(base + ".json");
  }
  if (out.svg) {
    LabeledSeries loss{label + " loss", {}, {}};
    LabeledSeries ham{label + " hamiltonian", {}, {}};
    for (std::size_t k = 0; k < trajectory.points.size(); ++k) {
      loss.x.push_back(static_cast<double>(k));
      loss.y.push_back(trajectory.points[k].loss);
      ham.x.push_back(static_cast<double>(k));
      ham.y.push_back(trajectory.points[k].hamiltonian);
    }
    write_text_file(base + ".svg", svg_line_plot({loss, ham}, label, true));
    files.push_back(base + ".svg");
  }
  return files;
}

std::vector<std::string> emit_sweep_outputs(const std::vector<SweepResult>& sweeps,
                                            const ExperimentConfig& config,
                                            const OutputOptions& out) {
  ensure_directory(out.dir);
  const std::string fp = config_fingerprint(config);
  std::vector<std::string> files;
  nlohmann::json summary;
  summary["fingerprint"] = fp;
  summary["config"] = to_json(config);
  summary["results"] = nlohmann::json::array();
  for (const auto& sweep : sweeps) {
    const std::string base = out.dir + "/sweep_" + sanitize_label(sweep.label) + "_" + fp;
    if (out.csv) {
      write_text_file(base + ".csv", heatmap_csv(sweep));
      files.push_back(base + ".csv");
    }
    if (out.svg) {
      write_text_file(base + ".svg", svg_heatmap(sweep, sweep.label));
      files.push_back(base + ".svg");
    }
    nlohmann::json entry;
    entry["label"] = sweep.label;
    entry["best_rate"] = sweep.best_rate;
    entry["best_lr"] = sweep.grid.lr_values[sweep.best_lr_index];
    entry["best_beta"] = sweep.grid.beta_values[sweep.best_beta_index];
    summary["results"].push_back(entry);
  }
  if (out.json) {
    const std::string path = out.dir + "/sweep_summary_" + fp + ".json";
    write_text_file(path, summary.dump(2) + "\n");
    files.push_back(path);
  }
  return files;
}

std::vector<std::string> emit_flow_outputs(const FlowTrace& trace,
                                           const std::string& label,
                                           const std::string& fingerprint,
                                           const OutputOptions& out) {
  ensure_directory(out.dir);
  const std::string base =
      out.dir + "/dynamics_" + sanitize_label(label) + "_" + fingerprint;
  std::vector<std::string> files;
  if (out.csv) {
    write_text_file(base + ".csv", flow_csv(trace));
    files.push_back(base + ".csv");
  }
  if (out.json) {
    nlohmann::json j;
    j["label"] = label;
    j["integrator"] = trace.integrator;
    j["dt_used"] = trace.dt_used;
    j["samples"] = trace.times.size();
    if (trace.aborted_at) j["aborted_at"] = *trace.aborted_at;
    if (!trace.hamiltonian_samples.empty()) {
      j["final_hamiltonian"] = trace.hamiltonian_samples.back();
      j["final_loss"] = trace.loss_samples.back();
    }
    write_text_file(base + ".json", j.dump(2) + "\n");
    files.push_back(base + ".json");
  }
  if (out.svg) {
    LabeledSeries loss{"loss", trace.times, trace.loss_samples};
    LabeledSeries ham{"hamiltonian", trace.times, trace.hamiltonian_samples};
    write_text_file(base + ".svg", svg_line_plot({loss, ham}, label, false));
    files.push_back(base + ".svg");
  }
  return files;
}

}  // namespace cautious
