/**
 * @file experiment.hpp
 * @brief Declarative experiment runner: JSON config in, trajectory/pairwise
 *        CSVs and a sectioned plain-text report out.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracdde/analysis.hpp"
#include "fracdde/contraction.hpp"
#include "fracdde/model.hpp"
#include "fracdde/quad.hpp"
#include "fracdde/solver.hpp"
#include "fracdde/specfun.hpp"

namespace fracdde {

/// Shortest decimal string that parses back to exactly `v`.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view text, const std::string& field) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError(field, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace detail {

// Splits "kind:value" into its parts; value is empty when there is no colon.
inline std::pair<std::string, std::string> split_token(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos) {
    return {std::string(token), {}};
  }
  return {std::string(token.substr(0, colon)), std::string(token.substr(colon + 1))};
}

}  // namespace detail

/// Initial function from the vocabulary sin | cos | neg_cos | linear | const:<c>.
[[nodiscard]] inline HistoryFunction make_phi(std::string_view token) {
  const std::string name(token);
  const auto [kind, arg] = detail::split_token(token);
  if (kind == "sin" && arg.empty()) {
    return HistoryFunction([](double t) { return std::sin(t); }, name);
  }
  if (kind == "cos" && arg.empty()) {
    return HistoryFunction([](double t) { return std::cos(t); }, name);
  }
  if (kind == "neg_cos" && arg.empty()) {
    return HistoryFunction([](double t) { return -std::cos(t); }, name);
  }
  if (kind == "linear" && arg.empty()) {
    return HistoryFunction([](double t) { return t; }, name);
  }
  if (kind == "const" && !arg.empty()) {
    const double c = parse_double(arg, "phis");
    return HistoryFunction([c](double) { return c; }, name);
  }
  throw ValidationError("phis", "unknown initial function '" + name + "'");
}

/// Right-hand side from the vocabulary example_4_1 | example_4_2 | zero |
/// const:<c> | linear:<a> | delay_linear:<a>.
[[nodiscard]] inline RhsField make_rhs(std::string_view token) {
  const auto [kind, arg] = detail::split_token(token);
  RhsField f;
  if (kind == "example_4_1" && arg.empty()) {
    f = example_4_1_rhs();
  } else if (kind == "example_4_2" && arg.empty()) {
    f = example_4_2_rhs();
  } else if (kind == "zero" && arg.empty()) {
    f = constant_rhs(0.0);
  } else if (kind == "const" && !arg.empty()) {
    f = constant_rhs(parse_double(arg, "rhs"));
  } else if (kind == "linear" && !arg.empty()) {
    f = linear_rhs(parse_double(arg, "rhs"));
  } else if (kind == "delay_linear" && !arg.empty()) {
    f = delay_linear_rhs(parse_double(arg, "rhs"));
  } else {
    throw ValidationError("rhs", "unknown right-hand side '" + std::string(token) + "'");
  }
  f.name = std::string(token);
  return f;
}

struct AnalysisConfig {
  std::vector<double> eps_list{0.1, 0.05, 0.01};
  bool envelope = true;
  std::uint64_t seed = 0;
  std::size_t lipschitz_probes = 10000;
};

struct ExperimentConfig {
  std::string problem_name;
  double alpha = 0.5;
  double beta = 1.0;
  double t0 = 0.0;
  double h = 1.0;
  std::string rhs;
  std::vector<std::string> phis;
  SolverConfig solver;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";
};

/// Command-line overrides applied after the config file is read.
struct ConfigOverrides {
  std::optional<double> dt;
  std::optional<double> T;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

namespace detail {

template <typename T>
T json_get(const nlohmann::json& obj, const char* key, const std::string& field, T fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(field, std::string("bad value: ") + e.what());
  }
}

inline void set_builtin(ExperimentConfig& cfg, const std::string& name) {
  if (name != "example_4_1" && name != "example_4_2") {
    throw ValidationError("problem", "unknown builtin problem '" + name + "'");
  }
  cfg.problem_name = name;
  cfg.alpha = 0.5;
  cfg.beta = 1.0;
  cfg.t0 = 0.0;
  cfg.h = 1.0;
  cfg.rhs = name;
}

}  // namespace detail

/// Validates everything that can be checked before solving.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.phis.empty()) {
    throw ValidationError("phis", "at least one initial function is required");
  }
  std::vector<std::string> seen;
  for (const auto& p : cfg.phis) {
    (void)make_phi(p);
    if (std::find(seen.begin(), seen.end(), p) != seen.end()) {
      throw ValidationError("phis", "duplicate initial function '" + p + "'");
    }
    seen.push_back(p);
  }
  const FdeProblem probe = make_problem(cfg.alpha, cfg.beta, cfg.t0, cfg.h, make_rhs(cfg.rhs), make_phi(cfg.phis[0]));
  (void)validate(probe, cfg.solver);
  for (double eps : cfg.analysis.eps_list) {
    if (!(eps > 0.0)) {
      throw ValidationError("eps_list", "tolerances must be positive");
    }
  }
  if (cfg.output_dir.empty()) {
    throw ValidationError("output_dir", "output directory must be set");
  }
}

[[nodiscard]] inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw ValidationError("config", "top level must be an object");
  }
  ExperimentConfig cfg;
  if (!doc.contains("problem")) {
    throw ValidationError("problem", "missing");
  }
  const auto& problem = doc.at("problem");
  if (problem.is_string()) {
    detail::set_builtin(cfg, problem.get<std::string>());
  } else if (problem.is_object()) {
    if (problem.contains("builtin")) {
      detail::set_builtin(cfg, detail::json_get<std::string>(problem, "builtin", "problem", ""));
    }
    cfg.alpha = detail::json_get(problem, "alpha", "alpha", cfg.alpha);
    cfg.beta = detail::json_get(problem, "beta", "beta", cfg.beta);
    cfg.t0 = detail::json_get(problem, "t0", "t0", cfg.t0);
    cfg.h = detail::json_get(problem, "h", "h", cfg.h);
    cfg.rhs = detail::json_get(problem, "rhs", "rhs", cfg.rhs);
    cfg.problem_name = detail::json_get(problem, "name", "problem", cfg.problem_name.empty() ? std::string("inline")
                                                                                               : cfg.problem_name);
    if (cfg.rhs.empty()) {
      throw ValidationError("rhs", "inline problem needs an rhs");
    }
  } else {
    throw ValidationError("problem", "must be a builtin name or an object");
  }

  cfg.phis = detail::json_get(doc, "phis", "phis", std::vector<std::string>{});

  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    cfg.solver.method = parse_method(detail::json_get<std::string>(s, "method", "method",
                                                                   std::string(to_string(cfg.solver.method))));
    cfg.solver.dt = detail::json_get(s, "dt", "dt", cfg.solver.dt);
    cfg.solver.T = detail::json_get(s, "T", "T", cfg.solver.T);
    cfg.solver.picard_tol = detail::json_get(s, "picard_tol", "picard_tol", cfg.solver.picard_tol);
    cfg.solver.picard_max_iter = detail::json_get(s, "picard_max_iter", "picard_max_iter", cfg.solver.picard_max_iter);
    cfg.solver.corrector_sweeps =
        detail::json_get(s, "corrector_sweeps", "corrector_sweeps", cfg.solver.corrector_sweeps);
  }
  if (doc.contains("analysis")) {
    const auto& a = doc.at("analysis");
    cfg.analysis.eps_list = detail::json_get(a, "eps_list", "eps_list", cfg.analysis.eps_list);
    cfg.analysis.envelope = detail::json_get(a, "envelope", "envelope", cfg.analysis.envelope);
    cfg.analysis.seed = detail::json_get(a, "seed", "seed", cfg.analysis.seed);
    cfg.analysis.lipschitz_probes =
        detail::json_get(a, "lipschitz_probes", "lipschitz_probes", cfg.analysis.lipschitz_probes);
  }
  cfg.output_dir = detail::json_get<std::string>(doc, "output_dir", "output_dir", cfg.output_dir.string());
  return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("config", "cannot open '" + path.string() + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
  if (o.dt) cfg.solver.dt = *o.dt;
  if (o.T) cfg.solver.T = *o.T;
  if (o.method) cfg.solver.method = parse_method(*o.method);
  if (o.seed) cfg.analysis.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
}

// CSV I/O.

/// "const:1.5" → "const_1.5"; anything outside [A-Za-z0-9._-] becomes '_'.
[[nodiscard]] inline std::string sanitize_name(std::string_view name) {
  std::string out(name);
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '-' || c == '_';
    if (!ok) {
      c = '_';
    }
  }
  return out;
}

[[nodiscard]] inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,y\n";
  for (std::size_t j = 0; j < traj.size(); ++j) {
    out += format_double(traj.time_at(j));
    out += ',';
    out += format_double(traj[j]);
    out += '\n';
  }
  return out;
}

[[nodiscard]] inline std::string pairwise_csv(const StabilityReport& report) {
  std::string out = "t,max_pairwise";
  for (const auto& [i, j] : report.pairs) {
    out += ',' + report.member_names[i] + '-' + report.member_names[j];
  }
  out += '\n';
  for (std::size_t n = 0; n < report.times.size(); ++n) {
    out += format_double(report.times[n]);
    out += ',';
    out += format_double(report.pairwise_sup[n]);
    for (const auto& d : report.pair_distances) {
      out += ',';
      out += format_double(d[n]);
    }
    out += '\n';
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

[[nodiscard]] inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    return cells;
  };
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty csv '" + path.string() + "'");
  }
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      row.push_back(parse_double(cell, path.filename().string()));
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("ragged row in '" + path.string() + "'");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct ExperimentOutcome {
  std::vector<std::filesystem::path> files;
  std::string report;
  StabilityReport ensemble;
};

namespace detail {

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline std::string format_time_or_inf(double t) {
  return std::isfinite(t) ? format_double(t) : std::string("not reached");
}

// Whole-window view of the problem used by the report's growth-bound table.
inline void append_growth_table(std::ostringstream& out, const FdeProblem& problem, const SolverConfig& solver) {
  const GrowthBound& g = *problem.rhs.growth;
  const std::size_t steps = exact_steps(solver.T - problem.t0, solver.dt, "T");
  std::vector<double> k1(steps + 1);
  std::vector<double> k2(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = problem.t0 + static_cast<double>(n) * solver.dt;
    k1[n] = g.k1(t);
    k2[n] = g.k2(t);
  }
  // About ten rows, each on a grid point.
  const std::size_t stride = std::max<std::size_t>(1, steps / 10);
  std::vector<double> grid;
  for (std::size_t n = stride; n <= steps; n += stride) {
    grid.push_back(problem.t0 + static_cast<double>(n) * solver.dt);
  }
  const KernelDecayReport r1 = kernel_decay_check(problem.alpha, problem.beta, problem.t0, solver.dt, k1, grid);
  const KernelDecayReport r2 = kernel_decay_check(problem.alpha, problem.beta, problem.t0, solver.dt, k2, grid);
  out << "\n[kernel_decay]\n";
  out << "# t, conv_k1, conv_k2  (conv_k = (1/Gamma(alpha)) int (t-s)^(alpha-1) e^(-beta(t-s)) k(s) ds)\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << format_double(grid[i]) << ", " << format_double(r1.values[i].second) << ", "
        << format_double(r2.values[i].second) << '\n';
  }
  out << "k1_decaying = " << yes_no(r1.decaying) << "\n";
  out << "k2_decaying = " << yes_no(r2.decaying) << "\n";
  out << "k2_tail_loglog_slope = " << format_double(r2.tail_loglog_slope) << "\n";
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << content;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace detail

/// Runs the ensemble described by `cfg` and writes traj_<phi>.csv per member,
/// pairwise.csv and report.txt into cfg.output_dir. Nothing is left behind on
/// failure.
[[nodiscard]] inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const FdeProblem base = make_problem(cfg.alpha, cfg.beta, cfg.t0, cfg.h, make_rhs(cfg.rhs), make_phi(cfg.phis[0]));

  std::vector<HistoryFunction> phis;
  for (const auto& p : cfg.phis) {
    phis.push_back(make_phi(p));
  }
  auto members = solve_ensemble(base, phis, cfg.solver, [](const FdeProblem& p, const SolverConfig& c) {
    return solve(p, c);
  });

  std::ostringstream out;
  out << "[problem]\n";
  out << "name = " << cfg.problem_name << "\n";
  out << "rhs = " << cfg.rhs << "\n";
  out << "alpha = " << format_double(cfg.alpha) << "\n";
  out << "beta = " << format_double(cfg.beta) << "\n";
  out << "t0 = " << format_double(cfg.t0) << "\n";
  out << "h = " << format_double(cfg.h) << "\n";
  out << "members = ";
  for (std::size_t i = 0; i < cfg.phis.size(); ++i) {
    out << (i ? ", " : "") << cfg.phis[i];
  }
  out << "\n\n[solver]\n";
  out << "method = " << to_string(cfg.solver.method) << "\n";
  out << "dt = " << format_double(cfg.solver.dt) << "\n";
  out << "T = " << format_double(cfg.solver.T) << "\n";
  out << "corrector_sweeps = " << cfg.solver.corrector_sweeps << "\n";
  out << "picard_tol = " << format_double(cfg.solver.picard_tol) << "\n";

  out << "\n[contraction]\n";
  if (base.rhs.lipschitz) {
    const double bound = contraction_bound(*base.rhs.lipschitz, cfg.alpha, cfg.beta, cfg.t0, cfg.h);
    out << "lipschitz = " << format_double(*base.rhs.lipschitz) << "\n";
    out << "bound = " << format_double(bound) << "\n";
    out << "holds = " << detail::yes_no(bound < 1.0) << "\n";
  } else {
    out << "status = not applicable (growth-bound route: rhs has no global Lipschitz constant)\n";
  }

  ProbeSpec probe;
  probe.t_min = cfg.t0;
  probe.t_max = cfg.solver.T;
  probe.h = cfg.h;
  probe.dt = cfg.solver.dt;
  probe.samples = cfg.analysis.lipschitz_probes;
  probe.seed = cfg.analysis.seed;
  out << "\n[lipschitz_probe]\n";
  out << "seed = " << cfg.analysis.seed << "\n";
  out << "probes = " << probe.samples << "\n";
  out << "estimate = " << format_double(estimate_lipschitz(base.rhs, probe)) << "\n";

  out << "\n[members]\n";
  out << "# phi, y(T), residual, iterations, converged\n";
  for (std::size_t i = 0; i < members.size(); ++i) {
    FdeProblem p = base;
    p.phi = phis[i];
    const auto& m = members[i];
    out << cfg.phis[i] << ", " << format_double(m.trajectory[m.trajectory.size() - 1]) << ", "
        << format_double(residual(p, m.trajectory)) << ", " << m.diagnostics.iterations << ", "
        << detail::yes_no(m.diagnostics.converged) << "\n";
    for (const auto& w : m.diagnostics.warnings) {
      out << "# warning (" << cfg.phis[i] << "): " << w << "\n";
    }
  }

  if (cfg.solver.method == Method::predictor_corrector) {
    // Cross-check the first member against Picard iteration on the same grid.
    SolverConfig pc = cfg.solver;
    pc.method = Method::picard;
    FdeProblem p = base;
    p.phi = phis[0];
    const SolveResult picard = solve_picard(p, pc);
    double gap = 0.0;
    for (std::size_t j = 0; j < picard.trajectory.size(); ++j) {
      gap = std::max(gap, std::abs(picard.trajectory[j] - members[0].trajectory[j]));
    }
    out << "\n[picard_check]\n";
    out << "member = " << cfg.phis[0] << "\n";
    out << "iterations = " << picard.diagnostics.iterations << "\n";
    out << "converged = " << detail::yes_no(picard.diagnostics.converged) << "\n";
    out << "sup_distance_to_predictor_corrector = " << format_double(gap) << "\n";
    out << "contraction_ratios =";
    for (double r : picard.diagnostics.contraction_ratios) {
      out << ' ' << format_double(r);
    }
    out << "\n";
  }

  StabilityReport ensemble;
  const bool analyzed = members.size() >= 2;
  if (analyzed) {
    ensemble = analyze_ensemble(base, cfg.phis, std::move(members), cfg.analysis.eps_list);

    if (cfg.analysis.envelope && base.rhs.lipschitz && cfg.solver.T >= cfg.t0 + cfg.h) {
      out << "\n[gronwall]\n";
      out << "# pair, |x(t0)-y(t0)|, fitted K\n";
      for (std::size_t p = 0; p < ensemble.pairs.size(); ++p) {
        const auto [i, j] = ensemble.pairs[p];
        const Trajectory& a = ensemble.members[i].trajectory;
        const Trajectory& b = ensemble.members[j].trajectory;
        const GronwallFit fit = fit_gronwall_K(base, a, b);
        out << cfg.phis[i] << '-' << cfg.phis[j] << ", " << format_double(std::abs(a.at_step(0) - b.at_step(0)))
            << ", " << (fit.finite() ? format_double(fit.K) : std::string("inf")) << "\n";
      }
    }

    out << "\n[stabilization]\n";
    out << "# eps, T(eps)\n";
    for (const auto& [eps, t] : ensemble.T_of_eps) {
      out << format_double(eps) << ", " << detail::format_time_or_inf(t) << "\n";
    }
    out << "final_max_pairwise = " << format_double(ensemble.pairwise_sup.back()) << "\n";

    out << "\n[decay_fit]\n";
    out << "# max pairwise distance ~ C exp(-rho (t-t0)) (1 + c (t-t0)^alpha) over the last half of the window\n";
    if (ensemble.decay_fit) {
      out << "C = " << format_double(ensemble.decay_fit->C) << "\n";
      out << "rho = " << format_double(ensemble.decay_fit->rho) << "\n";
      out << "c = " << format_double(ensemble.decay_fit->c) << "\n";
      out << "rms_log_residual = " << format_double(ensemble.decay_fit->rms) << "\n";
      out << "points = " << ensemble.decay_fit->points << "\n";
    } else {
      out << "status = no positive distances to fit\n";
    }
  } else {
    ensemble.member_names = cfg.phis;
    ensemble.members = std::move(members);
  }

  if (!base.rhs.lipschitz && base.rhs.growth) {
    detail::append_growth_table(out, base, cfg.solver);
  }

  ExperimentOutcome outcome;
  outcome.report = out.str();

  // Render everything before touching the filesystem.
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  for (std::size_t i = 0; i < cfg.phis.size(); ++i) {
    files.emplace_back(cfg.output_dir / ("traj_" + sanitize_name(cfg.phis[i]) + ".csv"),
                       trajectory_csv(ensemble.members[i].trajectory));
  }
  if (analyzed) {
    files.emplace_back(cfg.output_dir / "pairwise.csv", pairwise_csv(ensemble));
  }
  files.emplace_back(cfg.output_dir / "report.txt", outcome.report);

  std::error_code ec;
  const bool created_dir = !std::filesystem::exists(cfg.output_dir, ec);
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
  }
  try {
    for (const auto& [path, content] : files) {
      outcome.files.push_back(path);
      detail::write_file(path, content);
    }
  } catch (...) {
    for (const auto& path : outcome.files) {
      std::filesystem::remove(path, ec);
    }
    if (created_dir) {
      std::filesystem::remove(cfg.output_dir, ec);
    }
    throw;
  }
  outcome.ensemble = std::move(ensemble);
  return outcome;
}

/// Re-reads a finished run's artifacts: the stored report followed by a
/// summary recomputed from the CSV files.
[[nodiscard]] inline std::string render_report(const std::filesystem::path& dir) {
  const auto report_path = dir / "report.txt";
  std::ifstream in(report_path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("no report.txt in '" + dir.string() + "'");
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::filesystem::path> trajs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("traj_", 0) == 0 && entry.path().extension() == ".csv") {
      trajs.push_back(entry.path());
    }
  }
  std::sort(trajs.begin(), trajs.end());

  std::ostringstream out;
  out << text << "\n[artifacts]\n";
  out << "# file, rows, t_last, y_last\n";
  for (const auto& p : trajs) {
    const CsvTable t = read_csv(p);
    if (t.rows.empty()) {
      out << p.filename().string() << ", 0\n";
      continue;
    }
    out << p.filename().string() << ", " << t.rows.size() << ", " << format_double(t.rows.back()[0]) << ", "
        << format_double(t.rows.back()[1]) << "\n";
  }
  const auto pairwise = dir / "pairwise.csv";
  if (std::filesystem::exists(pairwise)) {
    const CsvTable t = read_csv(pairwise);
    if (!t.rows.empty()) {
      out << "pairwise.csv, " << t.rows.size() << ", " << format_double(t.rows.back()[0]) << ", "
          << format_double(t.rows.back()[1]) << "\n";
    }
  }
  return out.str();
}

/// Closed-form oracle checks; prints one PASS/FAIL line each and returns
/// true when all pass.
inline bool selftest(std::ostream& out) {
  bool all = true;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  (" << detail << ")\n";
    all = all && ok;
  };
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  auto sci = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
  };

  {
    const double err = std::max({rel(gamma(1.0), 1.0), rel(gamma(0.5), std::sqrt(std::numbers::pi)),
                                 rel(gamma(1.5), std::sqrt(std::numbers::pi) / 2.0)});
    report("gamma_anchors", err <= 1e-12, "max rel err " + sci(err));
  }
  {
    double err = 0.0;
    for (double x : {0.0, 0.3, 1.0, 4.0, 20.0}) {
      err = std::max(err, std::abs(lower_incomplete_gamma(1.0, x) + std::expm1(-x)));
    }
    report("incomplete_gamma_a1", err <= 1e-14, "max abs err " + sci(err));
  }
  {
    double err = 0.0;
    for (double a : {0.25, 0.5, 0.75}) {
      const ProductWeights w(a, 0.01, 1000);
      for (std::size_t n : {1u, 10u, 100u, 1000u}) {
        const auto row = w.trapezoid_row(n);
        double sum = 0.0;
        for (double x : row) sum += x;
        const double exact = std::pow(static_cast<double>(n) * 0.01, a) / a;
        err = std::max(err, rel(sum, exact));
      }
    }
    report("quadrature_constant_exactness", err <= 1e-12, "max rel err " + sci(err));
  }
  {
    double err = 0.0;
    for (double a : {0.25, 0.5, 0.75}) {
      const double dt = 0.01;
      const std::size_t n = 500;
      const auto row = product_trapezoid_weights(a, dt, n);
      double q = 0.0;
      for (std::size_t j = 0; j <= n; ++j) q += row[j] * (static_cast<double>(j) * dt);
      const double tn = static_cast<double>(n) * dt;
      err = std::max(err, rel(q, std::pow(tn, a + 1.0) * beta_function(2.0, a)));
    }
    report("quadrature_linear_exactness", err <= 1e-10, "max rel err " + sci(err));
  }
  {
    SolverConfig c;
    c.dt = 1.0 / 64.0;
    c.T = 10.0;
    const FdeProblem p = make_problem(0.5, 1.0, 0.0, 1.0, constant_rhs(0.0),
                                      HistoryFunction([](double) { return 2.0; }));
    double err = 0.0;
    for (Method m : {Method::predictor_corrector, Method::picard}) {
      c.method = m;
      const SolveResult r = solve(p, c);
      for (std::size_t n = 0; n <= r.trajectory.steps(); ++n) {
        err = std::max(err, std::abs(r.trajectory.at_step(n) - 2.0 * std::exp(-static_cast<double>(n) * c.dt)));
      }
    }
    report("zero_forcing_decay", err <= 1e-12, "max abs err " + sci(err));
  }
  {
    SolverConfig c;
    c.dt = 1.0 / 256.0;
    c.T = 4.0;
    const FdeProblem p = make_problem(0.5, 1.0, 0.0, 1.0, constant_rhs(1.0),
                                      HistoryFunction([](double) { return 0.0; }));
    const SolveResult r = solve_predictor_corrector(p, c);
    double err = 0.0;
    for (std::size_t n = 0; n <= r.trajectory.steps(); ++n) {
      const double t = static_cast<double>(n) * c.dt;
      err = std::max(err, std::abs(r.trajectory.at_step(n) - lower_incomplete_gamma(0.5, t) / gamma(0.5)));
    }
    report("constant_forcing_incomplete_gamma", err <= 1e-4, "sup err " + sci(err));
  }
  {
    SolverConfig c;
    c.dt = 1.0 / 64.0;
    c.T = 5.0;
    const FdeProblem p = make_problem(0.5, 1.0, 0.0, 1.0, example_4_1_rhs(), make_phi("const:1.5"));
    const SolveResult a = solve_predictor_corrector(p, c);
    c.method = Method::picard;
    const SolveResult b = solve_picard(p, c);
    double gap = 0.0;
    for (std::size_t j = 0; j < a.trajectory.size(); ++j) {
      gap = std::max(gap, std::abs(a.trajectory[j] - b.trajectory[j]));
    }
    report("picard_vs_predictor_corrector", b.diagnostics.converged && gap <= 1e-4, "sup gap " + sci(gap));
  }
  return all;
}

}  // namespace fracdde
