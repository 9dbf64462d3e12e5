#pragma once

// Continuation in the half-period k: solve the periodic problem on a ladder
// of domains, warm-start each level from the previous one, and measure the
// quantities that the limit k -> infinity relies on.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "homoclinic/action.hpp"
#include "homoclinic/error.hpp"
#include "homoclinic/grid.hpp"
#include "homoclinic/mountain_pass.hpp"
#include "homoclinic/problem.hpp"

namespace homoclinic {

struct SweepConfig {
  std::vector<double> k_ladder = {5, 10, 20, 40};
  double nodes_per_unit = 64;
  double window = 3.0;
  double decay_margin = 0.2;
  std::size_t window_samples = 601;
  double q_gap_tol = 1e-4;
  double ddq_gap_tol = 1e-3;
  /// Every level from a fresh mountain-pass search, run concurrently.
  bool cold_start = false;
  SolverConfig solver;
  SamplingConfig sampling;
};

inline void validate(const SweepConfig& cfg) {
  if (cfg.k_ladder.empty()) throw ConfigError("sweep ladder is empty");
  for (std::size_t i = 1; i < cfg.k_ladder.size(); ++i)
    if (!(cfg.k_ladder[i] > cfg.k_ladder[i - 1])) throw ConfigError("sweep ladder must be strictly increasing");
  if (cfg.k_ladder.front() < 1.0) throw ConfigError("sweep ladder must start at k >= 1");
  if (cfg.k_ladder.front() < cfg.window) throw ConfigError("sweep ladder must start at k >= window");
  if (!(cfg.decay_margin > 0.0 && cfg.decay_margin < 0.5)) throw ConfigError("decay margin must lie in (0, 1/2)");
}

struct LevelRecord {
  double k = 0.0;
  std::size_t nodes = 0;
  double h = 0.0;
  double c_k = 0.0;
  double ek_norm = 0.0;
  double residual_sup = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;     ///< Newton iterations
  std::size_t mp_iterations = 0;  ///< 0 when warm-started
  double mp_peak_level = 0.0;
  bool mp_converged = false;
  MethodTag method = MethodTag::mp_plus_newton;
  bool warm_started = false;
  bool converged = false;
  double tail_max = 0.0;
};

struct WindowDistance {
  double k_from = 0.0;
  double k_to = 0.0;
  double sup_q = 0.0;
  double sup_dq = 0.0;
  double sup_ddq = 0.0;
};

struct DistanceTable {
  std::vector<WindowDistance> rows;
  double window = 0.0;
  bool final_within_tolerance = false;
};

enum class BoundStatus { pass, fail, not_applicable };

inline const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::pass: return "pass";
    case BoundStatus::fail: return "fail";
    case BoundStatus::not_applicable: return "not_applicable";
  }
  return "?";
}

struct BoundCheck {
  double k = 0.0;
  double norm = 0.0;
  double value = 0.0;  ///< x^2 - b x - c at x = ||q_k||
  double root = 0.0;   ///< largest admissible norm r*
  BoundStatus status = BoundStatus::not_applicable;
};

struct SweepReport {
  std::string label;
  std::vector<LevelRecord> levels;
  std::vector<Trajectory> trajectories;  ///< q_k, aligned with levels
  DistanceTable distances;
  std::vector<BoundCheck> bound_check;
  DerivedConstants constants;
  BumpDatum bump{Trajectory(PeriodicGrid(1.0, kMinNodes), 1)};
  bool hypotheses_hold = false;
  bool forcing_trivial = false;  ///< f == 0: outside the existence theorem
  bool converged = false;
};

/// Raised when a level fails both the warm start and a fresh search. The
/// levels finished so far travel with it.
class SweepAborted : public Error {
public:
  SweepAborted(const std::string& what, SweepReport partial) : Error(what), partial_(std::move(partial)) {}
  const SweepReport& partial() const noexcept { return partial_; }

private:
  SweepReport partial_;
};

/// Max of |q| and |diff1 q| over |t| >= (1 - margin) k.
inline double tail_check(const Trajectory& q, double margin) {
  if (!(margin > 0.0 && margin < 0.5)) throw DomainError("tail margin must lie in (0, 1/2)");
  const auto& g = q.grid();
  Trajectory dq = diff1(q);
  const double edge = (1.0 - margin) * g.k();
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.node(i)) < edge) continue;
    m = std::max(m, std::sqrt(detail::sq_norm(q.at(i))));
    m = std::max(m, std::sqrt(detail::sq_norm(dq.at(i))));
  }
  return m;
}

/// Evaluates ||q||^2 - (1/sqrt2)(mu-1)/(mu-2)(1-2M)||q|| - 2 mu M0/(mu-2) <= 0
/// at every level.
inline std::vector<BoundCheck> uniform_bound_check(const std::vector<LevelRecord>& levels, const DerivedConstants& consts,
                                                   const BumpDatum& bump, double mu, bool applicable) {
  const double b = (1.0 / std::numbers::sqrt2) * (mu - 1.0) / (mu - 2.0) * (1.0 - 2.0 * consts.M);
  const double c = 2.0 * mu * bump.M0 / (mu - 2.0);
  const double root = 0.5 * (b + std::sqrt(std::max(0.0, b * b + 4.0 * c)));
  std::vector<BoundCheck> out;
  for (const auto& lv : levels) {
    BoundCheck bc;
    bc.k = lv.k;
    bc.norm = lv.ek_norm;
    bc.value = lv.ek_norm * lv.ek_norm - b * lv.ek_norm - c;
    bc.root = root;
    if (!applicable) bc.status = BoundStatus::not_applicable;
    else bc.status = (bc.value <= 0.0 || lv.ek_norm <= root + 1e-6) ? BoundStatus::pass : BoundStatus::fail;
    out.push_back(bc);
  }
  return out;
}

inline std::vector<BoundCheck> uniform_bound_check(const SweepReport& report, const DerivedConstants& consts,
                                                   const BumpDatum& bump, double mu) {
  return uniform_bound_check(report.levels, consts, bump, mu, report.hypotheses_hold);
}

/// One solved level as input to the window comparison.
struct LevelTrajectory {
  std::string label;
  double k;
  const Trajectory* q;
};

/// Sup over [-w, w] of the differences of q, diff1 q and diff2 q between
/// consecutive levels.
inline DistanceTable convergence_diagnostics(const std::vector<LevelTrajectory>& levels, double w, std::size_t samples,
                                             double q_tol = 1e-4, double ddq_tol = 1e-3) {
  DistanceTable table;
  table.window = w;
  for (const auto& lv : levels) {
    if (lv.label != levels.front().label) throw UsageError("convergence diagnostics mix problems '" + levels.front().label + "' and '" + lv.label + "'");
    if (lv.q->dim() != levels.front().q->dim()) throw UsageError("convergence diagnostics mix dimensions");
    if (w > lv.q->grid().k()) throw WindowError("window exceeds the smallest half-period in the ladder");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    auto a = restrict_to_window(*levels[i - 1].q, w, samples);
    auto b = restrict_to_window(*levels[i].q, w, samples);
    WindowDistance row{levels[i - 1].k, levels[i].k};
    for (std::size_t j = 0; j < a.size(); ++j)
      for (std::size_t c = 0; c < a[j].q.size(); ++c) {
        row.sup_q = std::max(row.sup_q, std::abs(a[j].q[c] - b[j].q[c]));
        row.sup_dq = std::max(row.sup_dq, std::abs(a[j].dq[c] - b[j].dq[c]));
        row.sup_ddq = std::max(row.sup_ddq, std::abs(a[j].ddq[c] - b[j].ddq[c]));
      }
    table.rows.push_back(row);
  }
  table.final_within_tolerance =
      !table.rows.empty() && table.rows.back().sup_q <= q_tol && table.rows.back().sup_ddq <= ddq_tol;
  return table;
}

namespace detail {

struct LevelSolve {
  LevelRecord record;
  std::optional<Trajectory> q;
};

inline LevelSolve cold_level(const Problem& p, const PeriodicGrid& grid, const BumpDatum& bump, const SweepConfig& cfg) {
  LevelSolve out;
  Trajectory e_k = build_bump(grid, bump.zeta, p.dim);
  PathState path = mp_search(p, grid, e_k, cfg.solver);
  out.record.mp_iterations = path.iterations;
  out.record.mp_peak_level = path.peak_level;
  out.record.mp_converged = path.converged;
  CriticalPoint cp = newton_polish(p, grid, path.points[path.peak_index], cfg.solver, MethodTag::mp_plus_newton);
  out.record.iterations = cp.iterations;
  out.record.converged = cp.converged;
  out.record.method = cp.method;
  out.q = std::move(cp.q);
  return out;
}

inline void finish_record(const Problem& p, LevelRecord& r, const Trajectory& q, const SweepConfig& cfg) {
  const auto& g = q.grid();
  ActionFunctional I(p, g);
  auto ev = I.evaluate(q);
  r.k = g.k();
  r.nodes = g.size();
  r.h = g.h();
  r.c_k = ev.value;
  r.ek_norm = ek_norm(q);
  r.residual_sup = ev.residual_sup;
  r.grad_norm = ev.grad_norm;
  r.tail_max = tail_check(q, cfg.decay_margin);
  r.converged = r.converged && r.residual_sup <= cfg.solver.newton_tol;
}

inline void finalize(const Problem& p, SweepReport& rep, const SweepConfig& cfg) {
  std::vector<LevelTrajectory> lv;
  for (std::size_t i = 0; i < rep.levels.size(); ++i) lv.push_back({p.label, rep.levels[i].k, &rep.trajectories[i]});
  if (lv.size() >= 2) rep.distances = convergence_diagnostics(lv, cfg.window, cfg.window_samples, cfg.q_gap_tol, cfg.ddq_gap_tol);
  rep.bound_check = uniform_bound_check(rep.levels, rep.constants, rep.bump, p.mu, rep.hypotheses_hold);
  rep.converged = !rep.levels.empty() &&
                  std::all_of(rep.levels.begin(), rep.levels.end(), [](const LevelRecord& r) { return r.converged; });
}

}  // namespace detail

/// Solves the ladder. The first level (every level when cold_start is set)
/// uses a mountain-pass search plus Newton polish; later levels start Newton
/// from the previous solution zero-extended to the new domain and fall back
/// to a fresh search if that fails.
inline SweepReport k_sweep(const Problem& p, const SweepConfig& cfg) {
  validate(p);
  validate(cfg);
  SweepReport rep;
  rep.label = p.label;
  ConditionReport audit = check_conditions(p, cfg.sampling);
  rep.constants = audit.constants;
  rep.forcing_trivial = rep.constants.f_l2 == 0.0;
  // The existence theorem asks for non-trivial forcing on top of C1-C5.
  rep.hypotheses_hold = audit.all_pass() && !rep.forcing_trivial;
  rep.bump = find_zeta(p, PeriodicGrid::with_density(1.0, cfg.nodes_per_unit), cfg.solver);

  auto grid_for = [&](double k) { return PeriodicGrid::with_density(k, cfg.nodes_per_unit); };

  if (cfg.cold_start) {
    std::vector<std::future<detail::LevelSolve>> jobs;
    for (double k : cfg.k_ladder)
      jobs.push_back(std::async(std::launch::async, [&, k] { return detail::cold_level(p, grid_for(k), rep.bump, cfg); }));
    for (auto& job : jobs) {
      auto solved = job.get();
      detail::finish_record(p, solved.record, *solved.q, cfg);
      rep.levels.push_back(solved.record);
      rep.trajectories.push_back(std::move(*solved.q));
    }
    detail::finalize(p, rep, cfg);
    return rep;
  }

  for (std::size_t i = 0; i < cfg.k_ladder.size(); ++i) {
    const PeriodicGrid grid = grid_for(cfg.k_ladder[i]);
    detail::LevelSolve solved;
    bool ok = false;
    std::string failure;
    if (i > 0) {
      try {
        CriticalPoint cp = newton_polish(p, grid, resample(rep.trajectories.back(), grid), cfg.solver);
        if (cp.converged) {
          solved.record.iterations = cp.iterations;
          solved.record.converged = true;
          solved.record.warm_started = true;
          solved.q = std::move(cp.q);
          ok = true;
        }
      } catch (const DivergenceError& e) {
        failure = e.what();
      }
    }
    if (!ok) {
      try {
        solved = detail::cold_level(p, grid, rep.bump, cfg);
        ok = solved.record.converged;
        if (!ok) failure = "Newton polish did not converge";
      } catch (const DivergenceError& e) {
        failure = e.what();
      }
    }
    if (!ok && !solved.q) {
      detail::finalize(p, rep, cfg);
      throw SweepAborted("sweep aborted at k = " + detail::short_number(grid.k()) + ": " + failure, std::move(rep));
    }
    detail::finish_record(p, solved.record, *solved.q, cfg);
    rep.levels.push_back(solved.record);
    rep.trajectories.push_back(std::move(*solved.q));
    if (!ok) {
      detail::finalize(p, rep, cfg);
      throw SweepAborted("sweep aborted at k = " + detail::short_number(grid.k()) + ": " + failure, std::move(rep));
    }
  }
  detail::finalize(p, rep, cfg);
  return rep;
}

}  // namespace homoclinic
