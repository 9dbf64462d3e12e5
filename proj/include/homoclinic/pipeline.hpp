#pragma once

// Run configuration and the audit / solve / sweep / figures pipelines.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "homoclinic/continuation.hpp"
#include "homoclinic/error.hpp"
#include "homoclinic/io.hpp"
#include "homoclinic/keyvalue.hpp"
#include "homoclinic/mountain_pass.hpp"
#include "homoclinic/problem.hpp"

namespace homoclinic {

inline constexpr const char* kVersion = "1.0.0";

enum class Mode { audit, solve, sweep, figures };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::audit: return "audit";
    case Mode::solve: return "solve";
    case Mode::sweep: return "sweep";
    case Mode::figures: return "figures";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s, std::string_view where) {
  if (s == "audit") return Mode::audit;
  if (s == "solve") return Mode::solve;
  if (s == "sweep") return Mode::sweep;
  if (s == "figures") return Mode::figures;
  throw UsageError(std::string(where) + ": unknown mode '" + std::string(s) + "' (audit, solve, sweep, figures)");
}

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitViolations = 3, kExitUnconverged = 4 };

struct RunConfig {
  std::string problem;  ///< built-in id or path to a problem file
  std::optional<Mode> mode;
  std::optional<double> k;
  std::vector<double> ladder;
  double nodes_per_unit = 64;
  SolverConfig solver;
  double window = 3.0;
  double margin = 0.2;
  std::string out = "out";
  bool emit_svg = false;
};

// ---------------------------------------------------------------------------
// Values from flags or config files. `where` names the flag or file:line.

namespace detail {

inline double parse_real(std::string_view text, std::string_view where) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw UsageError(std::string(where) + ": expected a number, got '" + s + "'");
  return v;
}

inline std::size_t parse_count(std::string_view text, std::string_view where) {
  std::size_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(std::string(where) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

inline bool parse_switch(std::string_view text, std::string_view where) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw UsageError(std::string(where) + ": expected on/off, got '" + std::string(text) + "'");
}

inline std::vector<double> parse_ladder(std::string_view text, std::string_view where) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    out.push_back(parse_real(trim(text.substr(pos, comma - pos)), where));
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Keys accepted in a run configuration file and as their flag names
/// (underscores become dashes).
inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {"problem", "mode",      "k",           "ladder",     "nodes_per_unit",
                                                "mp_tol",  "newton_tol", "window",      "margin",     "out",
                                                "emit_svg", "max_iters", "newton_max_iters", "path_points", "zeta_cap",
                                                "precondition"};
  return keys;
}

/// Sets one key. Unknown keys are rejected with their name.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
  using namespace detail;
  if (key == "problem") cfg.problem = value;
  else if (key == "mode") cfg.mode = parse_mode(value, where);
  else if (key == "k") cfg.k = parse_real(value, where);
  else if (key == "ladder") cfg.ladder = parse_ladder(value, where);
  else if (key == "nodes_per_unit") cfg.nodes_per_unit = parse_real(value, where);
  else if (key == "mp_tol") cfg.solver.mp_tol = parse_real(value, where);
  else if (key == "newton_tol") cfg.solver.newton_tol = parse_real(value, where);
  else if (key == "window") cfg.window = parse_real(value, where);
  else if (key == "margin") cfg.margin = parse_real(value, where);
  else if (key == "out") cfg.out = value;
  else if (key == "emit_svg") cfg.emit_svg = parse_switch(value, where);
  else if (key == "max_iters") cfg.solver.max_iters = parse_count(value, where);
  else if (key == "newton_max_iters") cfg.solver.newton_max_iters = parse_count(value, where);
  else if (key == "path_points") cfg.solver.path_points = parse_count(value, where);
  else if (key == "zeta_cap") cfg.solver.zeta_cap = parse_real(value, where);
  else if (key == "precondition") cfg.solver.precondition = parse_switch(value, where);
  else throw UsageError(where + ": unknown key '" + key + "'");
}

/// Applies a key = value configuration file. Sections are optional and
/// only group keys; every key must be known.
inline void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  for (const auto& kv : parse_key_values(text, origin))
    apply_setting(cfg, kv.key, kv.value, std::string(origin) + ":" + std::to_string(kv.line));
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("--config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

/// Ladder used by figures mode when none is given.
inline std::optional<std::vector<double>> figure_ladder(std::string_view problem) {
  if (problem == "example1") return std::vector<double>{10, 16, 90, 140, 200};
  if (problem == "example2") return std::vector<double>{10, 16, 90, 140};
  return std::nullopt;
}

/// Fills presets and checks that the selected mode has what it needs.
inline void finalize(RunConfig& cfg) {
  if (cfg.problem.empty()) throw UsageError("--problem is required");
  if (!cfg.mode) throw UsageError("--mode is required (audit, solve, sweep, figures)");
  switch (*cfg.mode) {
    case Mode::audit: break;
    case Mode::solve:
      if (!cfg.k) throw UsageError("--mode solve requires --k");
      if (*cfg.k < 1.0) throw UsageError("--k: half-period must be at least 1");
      break;
    case Mode::sweep:
      if (cfg.ladder.empty()) throw UsageError("--mode sweep requires --ladder");
      break;
    case Mode::figures:
      if (cfg.ladder.empty()) {
        auto preset = figure_ladder(cfg.problem);
        if (!preset) throw UsageError("--mode figures has no preset ladder for '" + cfg.problem + "'; pass --ladder");
        cfg.ladder = *preset;
      }
      cfg.emit_svg = true;
      break;
  }
  if (!(cfg.nodes_per_unit >= 1.0)) throw UsageError("--nodes-per-unit must be at least 1");
  if (!(cfg.solver.mp_tol > 0.0)) throw UsageError("--mp-tol must be positive");
  if (!(cfg.solver.newton_tol > 0.0)) throw UsageError("--newton-tol must be positive");
  if (!(cfg.window > 0.0)) throw UsageError("--window must be positive");
  if (!(cfg.margin > 0.0 && cfg.margin < 0.5)) throw UsageError("--margin must lie in (0, 1/2)");
  if (cfg.out.empty()) throw UsageError("--out must not be empty");
  if (cfg.mode == Mode::sweep || cfg.mode == Mode::figures) {
    SweepConfig sc;
    sc.k_ladder = cfg.ladder;
    sc.window = cfg.window;
    sc.decay_margin = cfg.margin;
    try {
      validate(sc);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--ladder: ") + e.what());
    }
  }
}

inline nlohmann::json to_json_value(const RunConfig& cfg) {
  nlohmann::json j = {{"problem", cfg.problem},
                      {"mode", cfg.mode ? to_string(*cfg.mode) : ""},
                      {"k", cfg.k ? nlohmann::json(*cfg.k) : nlohmann::json(nullptr)},
                      {"ladder", cfg.ladder},
                      {"nodes_per_unit", cfg.nodes_per_unit},
                      {"mp_tol", cfg.solver.mp_tol},
                      {"newton_tol", cfg.solver.newton_tol},
                      {"max_iters", cfg.solver.max_iters},
                      {"newton_max_iters", cfg.solver.newton_max_iters},
                      {"path_points", cfg.solver.path_points},
                      {"zeta_cap", cfg.solver.zeta_cap},
                      {"precondition", cfg.solver.precondition},
                      {"window", cfg.window},
                      {"margin", cfg.margin},
                      {"out", cfg.out},
                      {"emit_svg", cfg.emit_svg}};
  return j;
}

/// Built-in id, or a path to a problem file.
inline Problem load_problem(const std::string& spec) {
  try {
    return make_builtin_problem(spec);
  } catch (const ConfigError&) {
  }
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw UsageError("--problem: '" + spec + "' is neither a built-in (example1, example2, example1_compliant) nor a readable file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_problem_text(ss.str(), spec);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Pipelines

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::string k_tag(double k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", k);
  return buf;
}

inline void write_trajectory(const std::filesystem::path& dir, const std::string& label, const Trajectory& q, bool svg,
                             const std::string& note, std::ostream& log) {
  const std::string stem = label + "_k" + k_tag(q.grid().k());
  write_file(dir / (stem + ".csv"), trajectory_csv(q));
  log << "wrote " << (dir / (stem + ".csv")).string() << "\n";
  if (svg) {
    write_file(dir / (stem + ".svg"), trajectory_svg(q, label + ", k = " + k_tag(q.grid().k()) + note));
    log << "wrote " << (dir / (stem + ".svg")).string() << "\n";
  }
}

}  // namespace detail

/// Runs the configured mode, writing the manifest first and every report
/// under cfg.out. Returns the process exit status.
inline int run_pipeline(const RunConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  const Problem p = load_problem(cfg.problem);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  const SamplingConfig sampling{};
  const DerivedConstants consts = derived_constants(p, sampling);
  nlohmann::json manifest = {
      {"tool", "homoclinic"},
      {"version", kVersion},
      {"config", to_json_value(cfg)},
      {"problem", {{"label", p.label}, {"dim", p.dim}, {"mu", p.mu}, {"t_support_hint", p.t_support_hint}}},
      {"constants", consts},
      {"libraries",
       {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                              "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"cxx_standard", static_cast<long>(__cplusplus)}};
  detail::write_file(dir / "manifest.json", dump_json(manifest));
  log << "wrote " << (dir / "manifest.json").string() << "\n";

  const Mode mode = *cfg.mode;
  if (mode == Mode::audit) {
    ConditionReport rep = check_conditions(p, sampling);
    detail::write_file(dir / "audit.json", dump_json(rep));
    log << "wrote " << (dir / "audit.json").string() << "\n";
    for (const auto& c : rep.conditions) log << c.condition << ": " << to_string(c.status) << "  " << c.note << "\n";
    return rep.any_fail() ? kExitViolations : kExitOk;
  }

  if (mode == Mode::solve) {
    ConditionReport audit = check_conditions(p, sampling);
    BumpDatum bump = find_zeta(p, PeriodicGrid::with_density(1.0, cfg.nodes_per_unit), cfg.solver);
    PeriodicGrid grid = PeriodicGrid::with_density(*cfg.k, cfg.nodes_per_unit);
    PathState path = mp_search(p, grid, build_bump(grid, bump.zeta, p.dim), cfg.solver);
    CriticalPoint cp = newton_polish(p, grid, path.points[path.peak_index], cfg.solver, MethodTag::mp_plus_newton);
    const bool hyp = audit.all_pass();
    const bool in_bracket = cp.level >= consts.alpha - 1e-6 && cp.level <= bump.M0 + 1e-6;
    nlohmann::json rep = {{"label", p.label},
                          {"hypotheses_hold", hyp},
                          {"constants", consts},
                          {"bump", bump},
                          {"path", path},
                          {"critical_point", cp},
                          {"pairing_discrepancy", pairing_identity_check(p, cp.q)},
                          {"bracket",
                           {{"alpha", consts.alpha},
                            {"M0", bump.M0},
                            {"within", in_bracket},
                            {"guaranteed", hyp}}}};
    detail::write_file(dir / "solve.json", dump_json(rep));
    log << "wrote " << (dir / "solve.json").string() << "\n";
    detail::write_trajectory(dir, p.label, cp.q, cfg.emit_svg, cp.converged ? "" : " (unconverged)", log);
    log << "c_k = " << format_g17(cp.level) << ", residual " << format_g17(cp.residual_sup)
        << (cp.converged ? "" : ", NOT converged") << "\n";
    return cp.converged ? kExitOk : kExitUnconverged;
  }

  SweepConfig sc;
  sc.k_ladder = cfg.ladder;
  sc.nodes_per_unit = cfg.nodes_per_unit;
  sc.window = cfg.window;
  sc.decay_margin = cfg.margin;
  sc.solver = cfg.solver;
  sc.sampling = sampling;
  SweepReport rep;
  std::string aborted;
  try {
    rep = k_sweep(p, sc);
  } catch (const SweepAborted& e) {
    rep = e.partial();
    aborted = e.what();
  }
  nlohmann::json doc = rep;
  doc["aborted"] = aborted.empty() ? nlohmann::json(nullptr) : nlohmann::json(aborted);
  const std::string name = mode == Mode::figures ? "figures.json" : "sweep.json";
  detail::write_file(dir / name, dump_json(doc));
  log << "wrote " << (dir / name).string() << "\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i)
    detail::write_trajectory(dir, p.label, rep.trajectories[i], cfg.emit_svg, rep.levels[i].converged ? "" : " (unconverged)", log);
  if (!aborted.empty()) log << aborted << "\n";
  return rep.converged && aborted.empty() ? kExitOk : kExitUnconverged;
}

}  // namespace homoclinic
