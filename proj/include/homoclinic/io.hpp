#pragma once

// Report formats: trajectory CSV, JSON documents for every report type, and
// a self-contained SVG line plot. All output is locale-independent and
// byte-stable for identical inputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homoclinic/action.hpp"
#include "homoclinic/continuation.hpp"
#include "homoclinic/error.hpp"
#include "homoclinic/grid.hpp"
#include "homoclinic/mountain_pass.hpp"
#include "homoclinic/problem.hpp"

namespace homoclinic {

/// %.17g, enough digits to round-trip a double.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trajectory_csv(std::ostream& os, const Trajectory& q) {
  const auto& g = q.grid();
  const std::size_t n = q.dim();
  os << "# k=" << format_g17(g.k()) << " N=" << g.size() << " h=" << format_g17(g.h()) << "\n";
  os << "t";
  for (const char* prefix : {"q_", "dq_", "ddq_"})
    for (std::size_t c = 1; c <= n; ++c) os << ',' << prefix << c;
  os << "\n";
  const Trajectory dq = diff1(q);
  const Trajectory ddq = diff2(q);
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << format_g17(g.node(i));
    for (const Trajectory* col : {&q, &dq, &ddq})
      for (std::size_t c = 0; c < n; ++c) os << ',' << format_g17((*col)(i, c));
    os << "\n";
  }
}

inline std::string trajectory_csv(const Trajectory& q) {
  std::ostringstream os;
  write_trajectory_csv(os, q);
  return os.str();
}

/// Reads back the q columns written by write_trajectory_csv.
inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw UsageError("trajectory CSV: missing '# k=... N=...' line");
  double k = 0.0;
  std::size_t N = 0;
  {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      if (tok.rfind("k=", 0) == 0) k = std::stod(tok.substr(2));
      else if (tok.rfind("N=", 0) == 0) N = std::stoul(tok.substr(2));
    }
  }
  if (!std::getline(is, line)) throw UsageError("trajectory CSV: missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 4 || (columns - 1) % 3 != 0) throw UsageError("trajectory CSV: header has " + std::to_string(columns) + " columns");
  const std::size_t n = (columns - 1) / 3;
  PeriodicGrid grid(k, N);
  Trajectory q(grid, n);
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::getline(is, line)) throw UsageError("trajectory CSV: expected " + std::to_string(N) + " rows");
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::getline(row, cell, ',')) throw UsageError("trajectory CSV: short row " + std::to_string(i));
      q(i, c) = std::stod(cell);
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const ActionEval& e) {
  j = {{"value", e.value}, {"grad_norm", e.grad_norm}, {"residual_sup", e.residual_sup}};
}

inline void to_json(nlohmann::json& j, const SamplingConfig& s) {
  j = {{"window", s.window},
       {"time_samples", s.time_samples},
       {"probes", s.probes},
       {"sphere_samples", s.sphere_samples},
       {"seed", s.seed},
       {"c1_radii", s.c1_radii},
       {"c1_threshold", s.c1_threshold},
       {"annulus", {s.annulus_inner, s.annulus_outer}},
       {"annulus_samples", s.annulus_samples},
       {"c2_rel_tol", s.c2_rel_tol},
       {"limit_tol", s.limit_tol},
       {"quad_tol", s.quad_tol}};
}

inline void to_json(nlohmann::json& j, const DerivedConstants& d) {
  j = {{"M", d.M},          {"M_t", d.M_t},       {"M_x", d.M_x},       {"m", d.m},
       {"m_t", d.m_t},      {"m_x", d.m_x},       {"a_inf", d.a_inf},   {"a_inf_t", d.a_inf_t},
       {"a_sup", d.a_sup},  {"f_l2", d.f_l2},     {"f_tail", d.f_tail}, {"budget", d.budget},
       {"rho", d.rho},      {"alpha", d.alpha},   {"geometry_certified", d.geometry_certified()}};
}

inline void to_json(nlohmann::json& j, const ConditionResult& c) {
  j = {{"condition", c.condition},
       {"status", to_string(c.status)},
       {"witness_t", c.witness_t ? nlohmann::json(*c.witness_t) : nlohmann::json(nullptr)},
       {"witness_x", c.witness_x ? nlohmann::json(*c.witness_x) : nlohmann::json(nullptr)},
       {"value", c.value},
       {"bound", c.bound},
       {"note", c.note}};
}

inline void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = {{"label", r.label},
       {"conditions", r.conditions},
       {"constants", r.constants},
       {"sampling", r.sampling},
       {"all_pass", r.all_pass()}};
}

inline void to_json(nlohmann::json& j, const BumpDatum& b) {
  j = {{"zeta", b.zeta}, {"e1_norm", b.e1_norm}, {"e1_action", b.e1_action}, {"M0", b.M0}};
}

inline void to_json(nlohmann::json& j, const PathState& s) {
  j = {{"iterations", s.iterations},
       {"converged", s.converged},
       {"stalled", s.stalled},
       {"degenerate", s.degenerate},
       {"peak_level", s.peak_level},
       {"peak_grad_norm", s.peak_grad_norm},
       {"peak_s", s.s.empty() ? 0.0 : s.s[s.peak_index]},
       {"path_points", s.points.size()}};
}

inline void to_json(nlohmann::json& j, const CriticalPoint& c) {
  j = {{"k", c.q.grid().k()},
       {"nodes", c.q.grid().size()},
       {"h", c.q.grid().h()},
       {"level", c.level},
       {"grad_norm", c.grad_norm},
       {"residual_sup", c.residual_sup},
       {"ek_norm", ek_norm(c.q)},
       {"linf_norm", linf_norm(c.q)},
       {"iterations", c.iterations},
       {"method", to_string(c.method)},
       {"converged", c.converged},
       {"stalled", c.stalled}};
}

inline void to_json(nlohmann::json& j, const LevelRecord& r) {
  j = {{"k", r.k},
       {"nodes", r.nodes},
       {"h", r.h},
       {"c_k", r.c_k},
       {"ek_norm", r.ek_norm},
       {"residual_sup", r.residual_sup},
       {"grad_norm", r.grad_norm},
       {"iterations", r.iterations},
       {"mp_iterations", r.mp_iterations},
       {"mp_peak_level", r.mp_peak_level},
       {"mp_converged", r.mp_converged},
       {"method", to_string(r.method)},
       {"warm_started", r.warm_started},
       {"converged", r.converged},
       {"tail_max", r.tail_max}};
}

inline void to_json(nlohmann::json& j, const WindowDistance& d) {
  j = {{"k_from", d.k_from}, {"k_to", d.k_to}, {"sup_q", d.sup_q}, {"sup_dq", d.sup_dq}, {"sup_ddq", d.sup_ddq}};
}

inline void to_json(nlohmann::json& j, const DistanceTable& t) {
  j = {{"window", t.window}, {"rows", t.rows}, {"final_within_tolerance", t.final_within_tolerance}};
}

inline void to_json(nlohmann::json& j, const BoundCheck& b) {
  j = {{"k", b.k}, {"norm", b.norm}, {"value", b.value}, {"root", b.root}, {"status", to_string(b.status)}};
}

inline void to_json(nlohmann::json& j, const SweepReport& r) {
  j = {{"label", r.label},
       {"levels", r.levels},
       {"distances", r.distances},
       {"bound_check", r.bound_check},
       {"constants", r.constants},
       {"bump", r.bump},
       {"hypotheses_hold", r.hypotheses_hold},
       {"forcing_trivial", r.forcing_trivial},
       {"converged", r.converged}};
}

/// Two-space indented document with a trailing newline.
inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// SVG

namespace detail {

/// Step of the form {1, 2, 5} x 10^e giving at most about `target` ticks.
inline double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  double raw = span / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Line plot of every component of q against t (dashed q' when asked), on
/// axes scaled to the data with ticks at round numbers.
inline std::string trajectory_svg(const Trajectory& q, const std::string& title, bool with_derivative = false) {
  using detail::fmt;
  const auto& g = q.grid();
  const Trajectory dq = diff1(q);
  std::vector<const Trajectory*> series = {&q};
  if (with_derivative) series.push_back(&dq);

  double lo = 0.0, hi = 0.0;
  for (auto* s : series)
    for (double v : s->data()) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double ystep = detail::nice_step(hi - lo, 6);
  lo = std::floor(lo / ystep) * ystep;
  hi = std::ceil(hi / ystep) * ystep;
  const double t0 = -g.k(), t1 = g.k();
  const double xstep = detail::nice_step(t1 - t0, 8);

  constexpr double W = 800, H = 450, L = 70, R = 20, T = 40, B = 50;
  auto X = [&](double t) { return L + (t - t0) / (t1 - t0) * (W - L - R); };
  auto Y = [&](double v) { return T + (hi - v) / (hi - lo) * (H - T - B); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"450\" viewBox=\"0 0 800 450\">\n";
  os << "<rect width=\"800\" height=\"450\" fill=\"white\"/>\n";
  os << "<text x=\"400\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">"
     << detail::xml_escape(title) << "</text>\n";
  os << "<g stroke=\"#ccc\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (double t = std::ceil(t0 / xstep) * xstep; t <= t1 + 1e-9 * xstep; t += xstep) {
    const double tt = std::abs(t) < 1e-12 * xstep ? 0.0 : t;
    os << "<line x1=\"" << fmt("%.2f", X(tt)) << "\" y1=\"" << fmt("%.2f", T) << "\" x2=\"" << fmt("%.2f", X(tt))
       << "\" y2=\"" << fmt("%.2f", H - B) << "\"/>";
    os << "<text x=\"" << fmt("%.2f", X(tt)) << "\" y=\"" << fmt("%.2f", H - B + 18)
       << "\" stroke=\"none\" fill=\"black\" text-anchor=\"middle\">" << fmt("%g", tt) << "</text>\n";
  }
  for (double v = lo; v <= hi + 1e-9 * ystep; v += ystep) {
    const double vv = std::abs(v) < 1e-12 * ystep ? 0.0 : v;
    os << "<line x1=\"" << fmt("%.2f", L) << "\" y1=\"" << fmt("%.2f", Y(vv)) << "\" x2=\"" << fmt("%.2f", W - R)
       << "\" y2=\"" << fmt("%.2f", Y(vv)) << "\"/>";
    os << "<text x=\"" << fmt("%.2f", L - 8) << "\" y=\"" << fmt("%.2f", Y(vv) + 4)
       << "\" stroke=\"none\" fill=\"black\" text-anchor=\"end\">" << fmt("%g", vv) << "</text>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << fmt("%.2f", L) << "\" y=\"" << fmt("%.2f", T) << "\" width=\"" << fmt("%.2f", W - L - R)
     << "\" height=\"" << fmt("%.2f", H - T - B) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << fmt("%.2f", (L + W - R) / 2) << "\" y=\"" << fmt("%.2f", H - 12)
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">t</text>\n";

  static const char* colors[] = {"#1f4e9c", "#c0392b", "#27864a", "#8e44ad"};
  std::size_t color = 0;
  for (std::size_t si = 0; si < series.size(); ++si)
    for (std::size_t c = 0; c < q.dim(); ++c, ++color) {
      os << "<path fill=\"none\" stroke=\"" << colors[color % 4] << "\" stroke-width=\"1.5\""
         << (si == 1 ? " stroke-dasharray=\"6 3\"" : "") << " d=\"";
      // The closing node t = k repeats t = -k under periodicity.
      for (std::size_t i = 0; i <= g.size(); ++i) {
        const std::size_t node = i % g.size();
        const double t = i == g.size() ? g.k() : g.node(i);
        os << (i == 0 ? "M" : " L") << fmt("%.2f", X(t)) << ',' << fmt("%.2f", Y((*series[si])(node, c)));
      }
      os << "\"/>\n";
    }
  os << "</svg>\n";
  return os.str();
}

}  // namespace homoclinic
