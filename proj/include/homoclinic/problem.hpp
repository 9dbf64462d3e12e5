#pragma once

// Problem instances for  q'' - q + a(t) grad G(q) = f(t),  the built-in
// examples, and a sampling auditor for the existence hypotheses (C1)-(C5).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "homoclinic/error.hpp"
#include "homoclinic/expression.hpp"
#include "homoclinic/keyvalue.hpp"

namespace homoclinic {

using ScalarFn = std::function<double(double)>;
using VectorFn = std::function<void(double, std::span<double>)>;
using PotentialFn = std::function<double(std::span<const double>)>;
using FieldFn = std::function<void(std::span<const double>, std::span<double>)>;

struct Problem {
  std::size_t dim = 1;
  ScalarFn a;
  VectorFn f;
  PotentialFn G;
  FieldFn gradG;
  /// Optional closed-form Hessian of G, n*n row-major. Empty means
  /// finite differences of gradG are used where curvature is needed.
  FieldFn hessG;
  double mu = 0.0;
  std::string label;
  /// |f| is negligible for |t| beyond this.
  double t_support_hint = 10.0;
};

inline void validate(const Problem& p) {
  if (p.dim == 0) throw ConfigError("problem '" + p.label + "': dimension must be positive");
  if (!(p.mu > 2.0)) throw ConfigError("problem '" + p.label + "': growth exponent mu must exceed 2");
  if (!p.a || !p.f || !p.G || !p.gradG) throw ConfigError("problem '" + p.label + "': a, f, G and gradG are required");
  if (!(p.t_support_hint > 0.0)) throw ConfigError("problem '" + p.label + "': t_support must be positive");
}

enum class BuiltinId { example1, example2, example1_compliant };

inline BuiltinId parse_builtin_id(std::string_view name) {
  if (name == "example1") return BuiltinId::example1;
  if (name == "example2") return BuiltinId::example2;
  if (name == "example1_compliant") return BuiltinId::example1_compliant;
  throw ConfigError("unknown built-in problem '" + std::string(name) + "'");
}

namespace detail {

inline void quartic_potential(Problem& p) {
  p.dim = 1;
  p.mu = 4.0;
  p.G = [](std::span<const double> q) { return q[0] * q[0] * q[0] * q[0]; };
  p.gradG = [](std::span<const double> q, std::span<double> out) { out[0] = 4.0 * q[0] * q[0] * q[0]; };
  p.hessG = [](std::span<const double> q, std::span<double> out) { out[0] = 12.0 * q[0] * q[0]; };
}

inline VectorFn gaussian_forcing(double amplitude) {
  return [amplitude](double t, std::span<double> out) { out[0] = amplitude * std::exp(-0.5 * t * t); };
}

}  // namespace detail

inline Problem make_builtin_problem(BuiltinId id) {
  Problem p;
  detail::quartic_potential(p);
  switch (id) {
    case BuiltinId::example1:
      p.label = "example1";
      p.a = [](double t) { return 0.2 * std::exp(-t * t) + 0.1; };
      p.f = detail::gaussian_forcing(0.4);
      break;
    case BuiltinId::example2:
      p.label = "example2";
      p.a = [](double t) { return std::atan(t) / std::numbers::pi + 0.5; };
      p.f = detail::gaussian_forcing(0.5);
      break;
    case BuiltinId::example1_compliant:
      p.label = "example1_compliant";
      p.a = [](double t) { return 0.2 * std::exp(-t * t) + 0.1; };
      p.f = detail::gaussian_forcing(0.05);
      break;
  }
  p.t_support_hint = 12.0;
  return p;
}

inline Problem make_builtin_problem(std::string_view name) { return make_builtin_problem(parse_builtin_id(name)); }

/// Same problem with f identically zero.
inline Problem with_zero_forcing(Problem p) {
  p.f = [](double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  p.label += "_unforced";
  return p;
}

/// Builds a problem from "key = value" text:
///
///   label = name        dim = n        mu = 4      t_support = 10
///   a = <expr in t>
///   f = <expr in t>              (n = 1)   or   f1 = ..., f2 = ...
///   G = <expr in q or q1..qn>
///
/// Keys may sit under an optional [problem] section. Gradient and Hessian
/// of G are derived symbolically.
inline Problem parse_problem_text(std::string_view text, std::string_view origin = "problem") {
  auto entries = parse_key_values(text, origin);
  std::map<std::string, KeyValue> kv;
  for (auto& e : entries) {
    if (!e.section.empty() && e.section != "problem")
      throw UsageError(std::string(origin) + ":" + std::to_string(e.line) + ": unknown section [" + e.section + "]");
    kv[e.key] = e;
  }
  auto get = [&](const std::string& key) -> const KeyValue* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto number = [&](const KeyValue& e) {
    try {
      std::size_t used = 0;
      double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string(origin) + ":" + std::to_string(e.line) + ": '" + e.key + "' expects a number, got '" +
                       e.value + "'");
    }
  };

  Problem p;
  p.label = get("label") ? get("label")->value : "custom";
  p.dim = get("dim") ? static_cast<std::size_t>(number(*get("dim"))) : 1;
  if (p.dim == 0 || p.dim > 16) throw ConfigError(std::string(origin) + ": dim must be in [1, 16]");
  if (!get("mu")) throw ConfigError(std::string(origin) + ": missing 'mu'");
  p.mu = number(*get("mu"));
  if (get("t_support")) p.t_support_hint = number(*get("t_support"));
  const std::size_t n = p.dim;

  std::vector<std::string> known = {"label", "dim", "mu", "t_support", "a", "G"};
  if (n == 1) known.push_back("f");
  for (std::size_t c = 1; c <= n; ++c) known.push_back("f" + std::to_string(c));
  for (auto& [key, e] : kv)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError(std::string(origin) + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");

  const std::map<std::string, std::size_t> time_vars = {{"t", 0}};
  std::map<std::string, std::size_t> space_vars;
  for (std::size_t c = 0; c < n; ++c) space_vars["q" + std::to_string(c + 1)] = c;
  if (n == 1) space_vars["q"] = 0;

  auto need = [&](const std::string& key) -> const KeyValue& {
    if (!get(key)) throw ConfigError(std::string(origin) + ": missing '" + key + "'");
    return *get(key);
  };

  Expr a = parse_expression(need("a").value, time_vars);
  std::vector<Expr> f;
  for (std::size_t c = 0; c < n; ++c) {
    std::string key = "f" + std::to_string(c + 1);
    if (n == 1 && !get(key)) key = "f";
    f.push_back(parse_expression(need(key).value, time_vars));
  }
  Expr G = parse_expression(need("G").value, space_vars);
  std::vector<Expr> grad;
  std::vector<Expr> hess;
  for (std::size_t i = 0; i < n; ++i) grad.push_back(G.derivative(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) hess.push_back(grad[i].derivative(j));

  p.a = [a](double t) { return a.eval(std::span<const double>(&t, 1)); };
  p.f = [f](double t, std::span<double> out) {
    for (std::size_t c = 0; c < f.size(); ++c) out[c] = f[c].eval(std::span<const double>(&t, 1));
  };
  p.G = [G](std::span<const double> q) { return G.eval(q); };
  p.gradG = [grad](std::span<const double> q, std::span<double> out) {
    for (std::size_t c = 0; c < grad.size(); ++c) out[c] = grad[c].eval(q);
  };
  p.hessG = [hess](std::span<const double> q, std::span<double> out) {
    for (std::size_t c = 0; c < hess.size(); ++c) out[c] = hess[c].eval(q);
  };
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------
// Sampling audit

struct SamplingConfig {
  double window = 1e3;                       ///< time samples cover [-window, window]
  std::size_t time_samples = 200001;         ///< odd, so t = 0 is sampled
  std::vector<double> probes = {-1e6, 1e6};  ///< far-field probes added to the samples
  std::size_t sphere_samples = 256;          ///< points on |x| = 1 when n >= 2
  std::uint64_t seed = 1;                    ///< Halton start index for sphere/annulus points
  std::vector<double> c1_radii = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  double c1_threshold = 1e-3;
  double annulus_inner = 1e-2;
  double annulus_outer = 1e2;
  std::size_t annulus_samples = 2000;
  double c2_rel_tol = 1e-12;
  /// a(t) at or below this on a far probe counts as inf a = 0 in the limit.
  double limit_tol = 1e-6;
  double quad_tol = 1e-13;
};

struct DerivedConstants {
  double M = 0.0;
  double m = 0.0;
  double M_t = 0.0;  ///< sample attaining M
  std::vector<double> M_x;
  double m_t = 0.0;
  std::vector<double> m_x;
  double a_inf = 0.0;
  double a_inf_t = 0.0;
  double a_sup = 0.0;
  double f_l2 = 0.0;
  double f_tail = 0.0;  ///< L^2 norm of f on window < |t| < 10 window
  double budget = 0.0;
  double rho = 0.0;
  double alpha = 0.0;

  /// M < 1/2, m > 0 and ||f|| below the forcing budget, so alpha > 0.
  bool geometry_certified() const { return m > 0.0 && M < 0.5 && f_l2 < budget; }
};

namespace detail {

inline double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

/// Deterministic points on the unit sphere in R^n: {-1, +1} for n = 1,
/// otherwise Halton points of the cube [-1, 1]^n projected radially.
inline std::vector<std::vector<double>> sphere_points(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::vector<double>> pts;
  if (n == 1) return {{-1.0}, {1.0}};
  // Coordinate axes first so that axis-aligned extrema are never missed.
  for (std::size_t c = 0; c < n; ++c)
    for (double s : {-1.0, 1.0}) {
      std::vector<double> x(n, 0.0);
      x[c] = s;
      pts.push_back(x);
    }
  for (std::uint64_t idx = seed; pts.size() < count + 2 * n; ++idx) {
    std::vector<double> x(n);
    double r2 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      x[c] = 2.0 * halton(idx, kPrimes[c]) - 1.0;
      r2 += x[c] * x[c];
    }
    if (r2 < 1e-8) continue;
    double r = std::sqrt(r2);
    for (double& v : x) v /= r;
    pts.push_back(std::move(x));
  }
  return pts;
}

inline std::vector<double> time_samples(const SamplingConfig& cfg) {
  std::vector<double> ts;
  ts.reserve(cfg.time_samples + cfg.probes.size());
  const std::size_t n = std::max<std::size_t>(cfg.time_samples, 2);
  for (std::size_t i = 0; i < n; ++i)
    ts.push_back(-cfg.window + 2.0 * cfg.window * static_cast<double>(i) / static_cast<double>(n - 1));
  for (double t : cfg.probes) ts.push_back(t);
  return ts;
}

inline double checked(double v, double t, std::span<const double> x, const char* what) {
  if (!std::isfinite(v))
    throw EvaluationError(std::string("non-finite ") + what + " during sampling", t, std::vector<double>(x.begin(), x.end()));
  return v;
}

inline double integrate_sq_forcing(const Problem& p, double lo, double hi, double tol) {
  std::vector<double> buf(p.dim);
  auto integrand = [&](double t) {
    p.f(t, buf);
    double s = 0.0;
    for (double v : buf) s += v * v;
    return checked(s, t, buf, "forcing");
  };
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 20, tol);
}

/// Integral of |f|^2 over [lo, hi] (0 <= lo < hi) plus the mirror interval,
/// on panels that grow geometrically away from the forcing support.
inline double sq_forcing_two_sided(const Problem& p, double lo, double hi, double tol) {
  double total = 0.0;
  double a = lo;
  double b = std::max(lo, std::min(hi, p.t_support_hint));
  if (b > a) {
    total += integrate_sq_forcing(p, a, b, tol) + integrate_sq_forcing(p, -b, -a, tol);
    a = b;
  }
  while (a < hi) {
    b = std::min(hi, std::max(2.0 * a, a + p.t_support_hint));
    total += integrate_sq_forcing(p, a, b, tol) + integrate_sq_forcing(p, -b, -a, tol);
    a = b;
  }
  return total;
}

}  // namespace detail

inline DerivedConstants derived_constants(const Problem& p, const SamplingConfig& cfg = {}) {
  validate(p);
  DerivedConstants d;
  d.M = -std::numeric_limits<double>::infinity();
  d.m = std::numeric_limits<double>::infinity();
  d.a_inf = std::numeric_limits<double>::infinity();
  d.a_sup = -std::numeric_limits<double>::infinity();

  auto sphere = detail::sphere_points(p.dim, cfg.sphere_samples, cfg.seed);
  std::vector<double> g_sphere;
  for (auto& x : sphere) g_sphere.push_back(detail::checked(p.G(x), 0.0, x, "G"));

  for (double t : detail::time_samples(cfg)) {
    double at = detail::checked(p.a(t), t, {}, "a");
    if (at < d.a_inf) {
      d.a_inf = at;
      d.a_inf_t = t;
    }
    d.a_sup = std::max(d.a_sup, at);
    for (std::size_t s = 0; s < sphere.size(); ++s) {
      double v = at * g_sphere[s];
      if (v > d.M) {
        d.M = v;
        d.M_t = t;
        d.M_x = sphere[s];
      }
      if (v < d.m) {
        d.m = v;
        d.m_t = t;
        d.m_x = sphere[s];
      }
    }
  }

  d.f_l2 = std::sqrt(detail::sq_forcing_two_sided(p, 0.0, cfg.window, cfg.quad_tol));
  d.f_tail = std::sqrt(detail::sq_forcing_two_sided(p, cfg.window, 10.0 * cfg.window, cfg.quad_tol));
  d.budget = (1.0 - 2.0 * d.M) / (2.0 * std::numbers::sqrt2);
  d.rho = 1.0 / std::numbers::sqrt2;
  d.alpha = (d.budget - d.f_l2) / std::numbers::sqrt2;
  return d;
}

enum class Status { pass, fail, inconclusive };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConditionResult {
  std::string condition;
  Status status = Status::inconclusive;
  std::optional<double> witness_t;
  std::optional<std::vector<double>> witness_x;
  double value = 0.0;
  double bound = 0.0;
  std::string note;
};

struct ConditionReport {
  std::string label;
  std::vector<ConditionResult> conditions;
  DerivedConstants constants;
  SamplingConfig sampling;

  const ConditionResult& at(std::string_view name) const {
    for (auto& c : conditions)
      if (c.condition == name) return c;
    throw ConfigError("no condition named " + std::string(name));
  }
  bool all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](auto& c) { return c.status == Status::pass; });
  }
  bool any_fail() const {
    return std::any_of(conditions.begin(), conditions.end(), [](auto& c) { return c.status == Status::fail; });
  }
};

namespace detail {

inline ConditionResult check_c1(const Problem& p, const SamplingConfig& cfg) {
  ConditionResult r;
  r.condition = "C1";
  r.bound = cfg.c1_threshold;
  const std::size_t n = p.dim;
  std::vector<double> zero(n, 0.0), g(n);
  p.gradG(zero, g);
  double g0 = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
  if (g0 != 0.0) {
    r.status = Status::fail;
    r.witness_x = zero;
    r.value = g0;
    r.bound = 0.0;
    r.note = "grad G(0) is nonzero";
    return r;
  }
  auto sphere = sphere_points(n, cfg.sphere_samples, cfg.seed);
  double prev = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (double radius : cfg.c1_radii) {
    double worst = -1.0;
    std::vector<double> worst_x;
    for (auto& u : sphere) {
      for (std::size_t c = 0; c < n; ++c) x[c] = radius * u[c];
      p.gradG(x, g);
      double ratio = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0)) / radius;
      checked(ratio, 0.0, x, "grad G");
      if (ratio > worst) {
        worst = ratio;
        worst_x = x;
      }
    }
    r.value = worst;
    r.witness_x = worst_x;
    if (worst > prev) {
      r.status = Status::fail;
      r.note = "max|grad G|/r increased as r decreased (r = " + std::to_string(radius) + ")";
      return r;
    }
    prev = worst;
  }
  if (r.value < cfg.c1_threshold) {
    r.status = Status::pass;
    r.witness_x.reset();
    r.note = "value = max|grad G|/r at the smallest radius; decreasing along the schedule";
  } else {
    r.status = Status::inconclusive;
    r.note = "ratio decreasing but not below threshold at the smallest radius";
  }
  return r;
}

inline ConditionResult check_c2(const Problem& p, const SamplingConfig& cfg) {
  ConditionResult r;
  r.condition = "C2";
  r.status = Status::pass;
  const std::size_t n = p.dim;
  if (!(p.mu > 2.0)) {
    r.status = Status::fail;
    r.value = p.mu;
    r.bound = 2.0;
    r.note = "mu must exceed 2";
    return r;
  }
  auto sphere = sphere_points(n, std::max<std::size_t>(cfg.sphere_samples, 16), cfg.seed);
  std::vector<double> x(n), g(n);
  double worst = -std::numeric_limits<double>::infinity();
  const double log_lo = std::log(cfg.annulus_inner);
  const double log_hi = std::log(cfg.annulus_outer);
  for (std::size_t s = 0; s < cfg.annulus_samples; ++s) {
    double u = halton(cfg.seed + s, 2);
    double radius = std::exp(log_lo + u * (log_hi - log_lo));
    const auto& dir = sphere[s % sphere.size()];
    for (std::size_t c = 0; c < n; ++c) x[c] = radius * dir[c];
    double G = checked(p.G(x), 0.0, x, "G");
    p.gradG(x, g);
    double pairing = checked(std::inner_product(g.begin(), g.end(), x.begin(), 0.0), 0.0, x, "grad G");
    double lhs = p.mu * G;
    // Margin of the inequality, scaled: > 0 means violated.
    double excess = (lhs - pairing) / std::max(1.0, std::abs(pairing));
    if (excess > worst) {
      worst = excess;
      r.witness_x = x;
    }
    if (!(G > 0.0)) {
      r.status = Status::fail;
      r.value = lhs;
      r.bound = 0.0;
      r.witness_x = x;
      r.note = "mu G(x) must be positive";
      return r;
    }
    if (excess > cfg.c2_rel_tol) {
      r.status = Status::fail;
      r.value = lhs;
      r.bound = pairing;
      r.witness_x = x;
      r.note = "mu G(x) exceeds (grad G(x), x)";
      return r;
    }
  }
  r.value = worst;
  r.bound = cfg.c2_rel_tol;
  r.witness_x.reset();
  r.note = "value = largest relative excess of mu G(x) over (grad G(x), x)";
  return r;
}

}  // namespace detail

/// Audits (C1)-(C5) on samples. A pass means no violation was found on the
/// sampled set; a fail carries the violating sample or scalar.
inline ConditionReport check_conditions(const Problem& p, const SamplingConfig& cfg = {}) {
  validate(p);
  ConditionReport rep;
  rep.label = p.label;
  rep.sampling = cfg;
  rep.constants = derived_constants(p, cfg);
  const auto& d = rep.constants;

  rep.conditions.push_back(detail::check_c1(p, cfg));
  rep.conditions.push_back(detail::check_c2(p, cfg));

  ConditionResult c3;
  c3.condition = "C3";
  c3.value = d.a_inf;
  c3.bound = 0.0;
  if (!(d.a_inf > 0.0)) {
    c3.status = Status::fail;
    c3.witness_t = d.a_inf_t;
    c3.note = "a(t) <= 0 at a sample";
  } else if (d.a_inf <= cfg.limit_tol) {
    c3.status = Status::fail;
    c3.witness_t = d.a_inf_t;
    c3.note = "fail-in-limit: a(t) <= " + std::to_string(cfg.limit_tol) + " at the sample, inf a = 0 in the limit";
  } else {
    c3.status = Status::pass;
    c3.note = "no violation on the sampled set";
  }
  rep.conditions.push_back(c3);

  ConditionResult c4;
  c4.condition = "C4";
  c4.value = d.M;
  c4.bound = 0.5;
  if (d.M >= 0.5) {
    c4.status = Status::fail;
    c4.witness_t = d.M_t;
    c4.witness_x = d.M_x;
    c4.note = std::abs(d.M_t) > cfg.window ? "fail-in-limit: sup a(t)G(x) over |x| = 1 reaches 1/2 at a far probe"
                                           : "sup a(t)G(x) over |x| = 1 reaches 1/2";
  } else {
    c4.status = Status::pass;
    c4.note = "no violation on the sampled set";
  }
  rep.conditions.push_back(c4);

  ConditionResult c5;
  c5.condition = "C5";
  c5.value = d.f_l2;
  c5.bound = d.budget;
  if (d.f_l2 >= d.budget) {
    c5.status = Status::fail;
    c5.note = "||f||_L2 is not below (1 - 2M)/(2 sqrt 2)";
  } else {
    c5.status = Status::pass;
  }
  rep.conditions.push_back(c5);
  return rep;
}

}  // namespace homoclinic
