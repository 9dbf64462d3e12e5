#pragma once

// Command-line parsing. Flag values override those from --config.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "homoclinic/error.hpp"
#include "homoclinic/pipeline.hpp"

namespace homoclinic {

/// --help or --version was given; what() is the text to print.
class HelpRequested : public Error {
public:
  using Error::Error;
};

inline RunConfig parse_config(int argc, const char* const* argv) {
  CLI::App app{"Mountain-pass solver for forced homoclinic-type orbits of q'' - q + a(t) grad G(q) = f(t).", "homoclinic"};
  app.set_version_flag("--version", kVersion);

  std::optional<std::string> config;
  // Flag name -> run-config key, in the order they are applied.
  std::vector<std::pair<std::string, std::optional<std::string>>> values = {
      {"problem", {}}, {"mode", {}},   {"k", {}},      {"ladder", {}}, {"nodes_per_unit", {}},
      {"mp_tol", {}},  {"newton_tol", {}}, {"window", {}}, {"margin", {}}, {"out", {}}};
  const std::vector<std::string> help = {
      "built-in id (example1, example2, example1_compliant) or a problem file",
      "audit | solve | sweep | figures",
      "half-period for --mode solve",
      "comma-separated increasing half-periods for sweep/figures",
      "grid nodes per unit length of the half-period (default 64)",
      "mountain-pass stopping tolerance on the dual gradient norm (default 1e-3)",
      "Newton tolerance on the residual sup-norm (default 1e-8)",
      "half-width of the convergence window (default 3)",
      "tail fraction of the domain for the decay check (default 0.2)",
      "output directory (default out)"};

  app.add_option("--config", config, "key = value run configuration file");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::string flag = "--" + values[i].first;
    for (char& c : flag)
      if (c == '_') c = '-';
    app.add_option(flag, values[i].second, help[i]);
  }
  bool emit_svg = false;
  app.add_flag("--emit-svg", emit_svg, "also write one SVG plot per trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(std::string(kVersion) + "\n");
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig cfg;
  if (config) apply_config_file(cfg, *config);
  for (const auto& [key, value] : values) {
    if (!value) continue;
    std::string flag = "--" + key;
    for (char& c : flag)
      if (c == '_') c = '-';
    apply_setting(cfg, key, *value, flag);
  }
  if (emit_svg) cfg.emit_svg = true;
  finalize(cfg);
  return cfg;
}

}  // namespace homoclinic
