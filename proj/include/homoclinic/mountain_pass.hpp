#pragma once

// Constructive mountain-pass geometry for I_k: the bump e_k, the scaling
// search for zeta, a path-deformation saddle search, and a Newton polish of
// the saddle to a high-accuracy critical point.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "homoclinic/action.hpp"
#include "homoclinic/error.hpp"
#include "homoclinic/grid.hpp"
#include "homoclinic/problem.hpp"

namespace homoclinic {

struct SolverConfig {
  /// Stop the path search when the E_k-dual norm of the gradient at the
  /// peak falls below this.
  double mp_tol = 1e-3;
  double newton_tol = 1e-8;
  std::size_t max_iters = 3000;
  std::size_t newton_max_iters = 50;
  std::size_t path_points = 40;
  double zeta_cap = 1048576.0;  // 2^20
  bool precondition = true;
  std::size_t m0_samples = 1001;
};

namespace detail {

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bump

/// zeta * cos(pi t / 2) on [-1, 1], zero on the rest of [-k, k].
inline Trajectory build_bump(const PeriodicGrid& target, double zeta, std::size_t dim = 1) {
  if (target.k() < 1.0) throw DomainError("bump needs k >= 1, got k = " + detail::short_number(target.k()));
  Trajectory e(target, dim);
  for (std::size_t i = 0; i < target.size(); ++i) {
    double t = target.node(i);
    if (std::abs(t) <= 1.0) e(i, 0) = zeta * std::cos(0.5 * std::numbers::pi * t);
  }
  return e;
}

struct BumpDatum {
  Trajectory Q;  ///< unscaled profile on the base grid (k = 1)
  double zeta = 0.0;
  double e1_norm = 0.0;
  double e1_action = 0.0;
  double M0 = 0.0;

  Trajectory e1() const {
    Trajectory e = Q;
    for (double& v : e.data()) v *= zeta;
    return e;
  }
};

/// Doubles zeta from 1 until ||zeta Q||_{E_1} > 1/sqrt 2 and I_1(zeta Q) < 0,
/// then samples M0 = max over s in [0, 1] of I_1(s e_1).
inline BumpDatum find_zeta(const Problem& p, const PeriodicGrid& base, const SolverConfig& cfg = {}) {
  if (std::abs(base.k() - 1.0) > 1e-12) throw DomainError("find_zeta needs the base grid k = 1");
  ActionFunctional I(p, base);
  BumpDatum b{build_bump(base, 1.0, p.dim)};
  const double rho = 1.0 / std::numbers::sqrt2;
  for (double zeta = 1.0; zeta <= cfg.zeta_cap; zeta *= 2.0) {
    Trajectory e = b.Q;
    for (double& v : e.data()) v *= zeta;
    double norm = ek_norm(e);
    double value = I.value(e);
    if (norm > rho && value < 0.0) {
      b.zeta = zeta;
      b.e1_norm = norm;
      b.e1_action = value;
      b.M0 = -std::numeric_limits<double>::infinity();
      const std::size_t ns = std::max<std::size_t>(cfg.m0_samples, 2);
      Trajectory se = e;
      for (std::size_t j = 0; j < ns; ++j) {
        double s = static_cast<double>(j) / static_cast<double>(ns - 1);
        for (std::size_t m = 0; m < e.data().size(); ++m) se.data()[m] = s * e.data()[m];
        b.M0 = std::max(b.M0, I.value(se));
      }
      return b;
    }
  }
  throw GeometryError("no zeta up to " + std::to_string(cfg.zeta_cap) + " gives I_1(zeta Q) < 0 for '" + p.label +
                      "'; the potential is not superquadratic in practice");
}

// ---------------------------------------------------------------------------
// Path search

namespace detail {

/// Solves (1 - diff2) x = b for one periodic component (cyclic tridiagonal,
/// symmetric positive definite) by Sherman-Morrison on the Thomas algorithm.
class CyclicTridiagonal {
public:
  CyclicTridiagonal(std::size_t n, double diag, double off) : n_(n), diag_(diag), off_(off) {
    // A = T + u v^T, with T's corner entries removed and the first/last
    // diagonal adjusted by gamma.
    gamma_ = -diag_;
    std::vector<double> u(n_, 0.0);
    u[0] = gamma_;
    u[n_ - 1] = off_;
    z_ = thomas(u);
    double vz = z_[0] + off_ / gamma_ * z_[n_ - 1];
    denom_ = 1.0 + vz;
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    auto y = thomas(b);
    double vy = y[0] + off_ / gamma_ * y[n_ - 1];
    double factor = vy / denom_;
    for (std::size_t i = 0; i < n_; ++i) y[i] -= factor * z_[i];
    return y;
  }

private:
  std::vector<double> thomas(const std::vector<double>& rhs) const {
    std::vector<double> c(n_), d(n_);
    auto diag_at = [&](std::size_t i) {
      if (i == 0) return diag_ - gamma_;
      if (i == n_ - 1) return diag_ - off_ * off_ / gamma_;
      return diag_;
    };
    c[0] = off_ / diag_at(0);
    d[0] = rhs[0] / diag_at(0);
    for (std::size_t i = 1; i < n_; ++i) {
      double m = diag_at(i) - off_ * c[i - 1];
      c[i] = off_ / m;
      d[i] = (rhs[i] - off_ * d[i - 1]) / m;
    }
    for (std::size_t i = n_ - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }

  std::size_t n_;
  double diag_, off_, gamma_, denom_;
  std::vector<double> z_;
};

/// Riesz map of the Euclidean gradient into E_k: solves (1 - diff2) d = grad/h
/// componentwise. With it, <d, grad> is the squared E_k-dual norm.
class Preconditioner {
public:
  Preconditioner(const PeriodicGrid& g, std::size_t dim, bool enabled)
      : grid_(g), dim_(dim), enabled_(enabled),
        solver_(g.size(), 1.0 + 2.0 / (g.h() * g.h()), -1.0 / (g.h() * g.h())) {}

  std::vector<double> apply(const std::vector<double>& grad) const {
    const double inv_h = 1.0 / grid_.h();
    std::vector<double> out(grad.size());
    if (!enabled_) {
      for (std::size_t j = 0; j < grad.size(); ++j) out[j] = grad[j] * inv_h;
      return out;
    }
    std::vector<double> col(grid_.size());
    for (std::size_t c = 0; c < dim_; ++c) {
      for (std::size_t i = 0; i < grid_.size(); ++i) col[i] = grad[i * dim_ + c] * inv_h;
      auto x = solver_.solve(col);
      for (std::size_t i = 0; i < grid_.size(); ++i) out[i * dim_ + c] = x[i];
    }
    return out;
  }

private:
  PeriodicGrid grid_;
  std::size_t dim_;
  bool enabled_;
  CyclicTridiagonal solver_;
};

/// Discrete E_k inner product h * sum(u v + D+u D+v).
inline double ek_inner(const Trajectory& u, const Trajectory& v) {
  const auto& g = u.grid();
  const double inv = 1.0 / g.h();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t c = 0; c < u.dim(); ++c) {
      double du = (u(g.next(i), c) - u(i, c)) * inv;
      double dv = (v(g.next(i), c) - v(i, c)) * inv;
      s += u(i, c) * v(i, c) + du * dv;
    }
  return g.h() * s;
}

inline Trajectory lerp(const Trajectory& a, const Trajectory& b, double u) {
  Trajectory out = a;
  for (std::size_t j = 0; j < out.data().size(); ++j) out.data()[j] = (1.0 - u) * a.data()[j] + u * b.data()[j];
  return out;
}

}  // namespace detail

struct PathState {
  std::vector<Trajectory> points;  ///< g(s_j); front is 0, back is e_k
  std::vector<double> s;           ///< monotone path parameters in [0, 1]
  std::vector<double> levels;      ///< I_k(g(s_j))
  std::size_t peak_index = 0;
  double peak_level = 0.0;
  double peak_grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;  ///< interior peak not above the endpoints
  bool stalled = false;
  std::vector<double> peak_history;  ///< peak level after every accepted iteration
};

namespace detail {

class PathSearch {
public:
  PathSearch(const ActionFunctional& I, const SolverConfig& cfg)
      : I_(I), cfg_(cfg), pre_(I.grid(), I.dim(), cfg.precondition) {}

  PathState run(const Trajectory& e_k) {
    const std::size_t P = std::max<std::size_t>(cfg_.path_points, 2);
    PathState st;
    for (std::size_t j = 0; j <= P; ++j) {
      double s = static_cast<double>(j) / static_cast<double>(P);
      Trajectory g = e_k;
      for (double& v : g.data()) v *= s;
      st.levels.push_back(I_.value(g));
      st.points.push_back(std::move(g));
      st.s.push_back(s);
    }
    seg_.clear();
    for (std::size_t c = 0; c + 1 < st.points.size(); ++c) seg_.push_back(segment_max(st, c));

    Peak peak = measure(st);
    double sigma = 1.0;
    for (st.iterations = 0; st.iterations < cfg_.max_iters; ++st.iterations) {
      peak = refine(st, peak);
      const std::size_t j = peak.vertex;
      const Trajectory x = st.points[j];
      auto grad = I_.gradient(x);
      auto d = pre_.apply(grad);
      double dual_sq = std::inner_product(d.begin(), d.end(), grad.begin(), 0.0);
      st.peak_grad_norm = std::sqrt(std::max(0.0, dual_sq));
      if (st.peak_grad_norm <= cfg_.mp_tol) {
        st.converged = true;
        break;
      }

      // Only the two segments at j change, so every other part of the
      // polyline stays below the old peak; sufficient decrease is asked of
      // the neighbourhood of j.
      const double old_level = st.levels[j];
      const Segment old_left = seg_[j - 1], old_right = seg_[j];
      bool accepted = false;
      sigma = std::min(1.0, 2.0 * sigma);
      while (sigma > 1e-14) {
        for (std::size_t m = 0; m < x.data().size(); ++m) st.points[j].data()[m] = x.data()[m] - sigma * d[m];
        st.levels[j] = I_.value(st.points[j]);
        seg_[j - 1] = segment_max(st, j - 1);
        seg_[j] = segment_max(st, j);
        double local = std::max({st.levels[j], seg_[j - 1].value, seg_[j].value});
        if (local <= peak.value - 1e-4 * sigma * dual_sq) {
          accepted = true;
          break;
        }
        sigma *= 0.5;
      }
      if (!accepted) {
        st.points[j] = x;
        st.levels[j] = old_level;
        seg_[j - 1] = old_left;
        seg_[j] = old_right;
        st.stalled = true;
        break;
      }
      peak = measure(st);
      st.peak_history.push_back(peak.value);
    }

    st.peak_index = peak.vertex;
    st.peak_level = st.levels[peak.vertex];
    st.degenerate = !(st.peak_level > std::max(st.levels.front(), st.levels.back()));
    return st;
  }

private:
  /// Maximum of I on the segment from points[c] to points[c + 1].
  struct Segment {
    double u = 0.0;
    double value = 0.0;
  };

  struct Peak {
    std::size_t vertex = 1;  ///< highest vertex, or the segment start when u > 0
    double value = 0.0;
    double u = 0.0;
  };

  /// Coarse scan of the open segment, then golden section around the best
  /// sample.
  Segment segment_max(const PathState& st, std::size_t c) const {
    const auto& a = st.points[c];
    const auto& b = st.points[c + 1];
    auto phi = [&](double u) { return I_.value(lerp(a, b, u)); };
    constexpr int scan = 8;
    Segment best{0.0, st.levels[c]};
    int best_i = 0;
    for (int i = 1; i < scan; ++i) {
      double u = static_cast<double>(i) / scan;
      double v = phi(u);
      if (v > best.value) best = {u, v}, best_i = i;
    }
    if (st.levels[c + 1] > best.value) return {1.0, st.levels[c + 1]};
    if (best_i == 0) return best;

    constexpr double ratio = 0.6180339887498949;
    double lo = (best_i - 1.0) / scan, hi = (best_i + 1.0) / scan;
    double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    double f1 = phi(x1), f2 = phi(x2);
    while (hi - lo > 1e-9) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = phi(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = phi(x1);
      }
    }
    if (f1 > best.value) best = {x1, f1};
    if (f2 > best.value) best = {x2, f2};
    return best;
  }

  /// Maximum of I over the whole polyline, excluding the endpoints.
  Peak measure(const PathState& st) const {
    Peak pk;
    pk.value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < st.points.size(); ++j)
      if (st.levels[j] > pk.value) pk = {j, st.levels[j], 0.0};
    for (std::size_t c = 0; c < seg_.size(); ++c)
      if (seg_[c].u > 0.0 && seg_[c].u < 1.0 && seg_[c].value > pk.value) pk = {c, seg_[c].value, seg_[c].u};
    return pk;
  }

  /// Puts a vertex at the polyline maximum when it lies inside a segment
  /// (the polyline itself is unchanged), then drops a vertex whose removal
  /// keeps the merged segment well below the peak, to hold the size.
  Peak refine(PathState& st, Peak pk) {
    if (pk.u == 0.0) return pk;
    const std::size_t c = pk.vertex;
    const std::size_t at = c + 1;
    Trajectory x = lerp(st.points[c], st.points[c + 1], pk.u);
    double s = (1.0 - pk.u) * st.s[c] + pk.u * st.s[c + 1];
    st.points.insert(st.points.begin() + static_cast<std::ptrdiff_t>(at), std::move(x));
    st.s.insert(st.s.begin() + static_cast<std::ptrdiff_t>(at), s);
    st.levels.insert(st.levels.begin() + static_cast<std::ptrdiff_t>(at), pk.value);
    seg_[c] = segment_max(st, c);
    seg_.insert(seg_.begin() + static_cast<std::ptrdiff_t>(at), segment_max(st, at));

    const std::size_t target = std::max<std::size_t>(cfg_.path_points, 2) + 1;
    if (st.points.size() > target) {
      // Candidates in order of their chord midpoint level; the first whose
      // merged segment stays clear of the peak is removed.
      std::vector<std::pair<double, std::size_t>> cand;
      for (std::size_t v = 1; v + 1 < st.points.size(); ++v) {
        if (v + 1 >= at && v <= at + 1) continue;
        cand.emplace_back(I_.value(lerp(st.points[v - 1], st.points[v + 1], 0.5)), v);
      }
      std::sort(cand.begin(), cand.end());
      const double clearance = pk.value - 1e-3 * (1.0 + std::abs(pk.value));
      for (std::size_t tries = 0; tries < std::min<std::size_t>(cand.size(), 4); ++tries) {
        const std::size_t v = cand[tries].second;
        if (cand[tries].first >= clearance) break;
        PathState merged;
        merged.points = {st.points[v - 1], st.points[v + 1]};
        merged.levels = {st.levels[v - 1], st.levels[v + 1]};
        Segment m = segment_max(merged, 0);
        if (m.value >= clearance) continue;
        st.points.erase(st.points.begin() + static_cast<std::ptrdiff_t>(v));
        st.s.erase(st.s.begin() + static_cast<std::ptrdiff_t>(v));
        st.levels.erase(st.levels.begin() + static_cast<std::ptrdiff_t>(v));
        seg_.erase(seg_.begin() + static_cast<std::ptrdiff_t>(v));
        seg_[v - 1] = m;
        break;
      }
    }
    Peak out = measure(st);
    // The inserted vertex carries the peak; prefer it over equal segment
    // values so the next step acts on it.
    for (std::size_t j = 1; j + 1 < st.points.size(); ++j)
      if (st.levels[j] == out.value) return {j, out.value, 0.0};
    return out;
  }

  const ActionFunctional& I_;
  SolverConfig cfg_;
  Preconditioner pre_;
  std::vector<Segment> seg_;
};

}  // namespace detail

/// Path-deformation search for the mountain-pass level between 0 and e_k.
/// The peak level (polyline maximum near the top vertex) never increases
/// between accepted iterations.
inline PathState mp_search(const Problem& p, const PeriodicGrid& grid, const Trajectory& e_k, const SolverConfig& cfg = {}) {
  if (!(e_k.grid() == grid)) throw DomainError("mp_search: e_k is not on the search grid");
  ActionFunctional I(p, grid);
  return detail::PathSearch(I, cfg).run(e_k);
}

// ---------------------------------------------------------------------------
// Newton polish

enum class MethodTag { mp_only, mp_plus_newton };

inline const char* to_string(MethodTag m) { return m == MethodTag::mp_only ? "mp_only" : "mp_plus_newton"; }

struct CriticalPoint {
  Trajectory q;
  double level = 0.0;
  double grad_norm = 0.0;
  double residual_sup = 0.0;
  std::size_t iterations = 0;
  MethodTag method = MethodTag::mp_plus_newton;
  bool converged = false;
  bool stalled = false;
};

namespace detail {

inline Eigen::SparseMatrix<double> residual_jacobian(const ActionFunctional& I, const Trajectory& q) {
  const auto& g = I.grid();
  const std::size_t n = I.dim();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const auto size = static_cast<Eigen::Index>(g.size() * n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.size() * n * (2 + n));
  std::vector<double> H(n * n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    I.hessian_G(q.at(i), H);
    for (std::size_t c = 0; c < n; ++c) {
      auto row = static_cast<Eigen::Index>(i * n + c);
      trips.emplace_back(row, static_cast<Eigen::Index>(g.next(i) * n + c), inv_h2);
      trips.emplace_back(row, static_cast<Eigen::Index>(g.prev(i) * n + c), inv_h2);
      for (std::size_t d = 0; d < n; ++d) {
        double v = I.a_at(i) * H[c * n + d];
        if (c == d) v += -2.0 * inv_h2 - 1.0;
        trips.emplace_back(row, static_cast<Eigen::Index>(i * n + d), v);
      }
    }
  }
  Eigen::SparseMatrix<double> J(size, size);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

inline double norm2(const std::vector<double>& r) { return std::sqrt(sq_norm(r)); }
inline double sup_norm(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace detail

/// Damped Newton on el_residual(q) = 0 with a sparse LU of the periodic
/// banded Jacobian and backtracking on the residual 2-norm.
inline CriticalPoint newton_polish(const Problem& p, const PeriodicGrid& grid, const Trajectory& q0,
                                   const SolverConfig& cfg = {}, MethodTag tag = MethodTag::mp_plus_newton) {
  if (!(q0.grid() == grid) || q0.dim() != p.dim) throw DomainError("newton_polish: initial guess is not on the grid");
  ActionFunctional I(p, grid);
  CriticalPoint cp{q0};
  cp.method = tag;
  const double h = grid.h();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  auto r = I.residual(cp.q);
  for (cp.iterations = 0;; ++cp.iterations) {
    cp.residual_sup = detail::sup_norm(r);
    cp.grad_norm = h * detail::norm2(r);
    if (cp.residual_sup > 1e6)
      throw DivergenceError("newton_polish diverged: residual " + std::to_string(cp.residual_sup));
    if (cp.residual_sup <= cfg.newton_tol && cp.grad_norm <= cfg.newton_tol * (1.0 + ek_norm(cp.q))) {
      cp.converged = true;
      break;
    }
    if (cp.iterations >= cfg.newton_max_iters) break;

    auto J = detail::residual_jacobian(I, cp.q);
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
      cp.stalled = true;
      break;
    }
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::VectorXd step = lu.solve(-rv);
    if (lu.info() != Eigen::Success || !step.allFinite()) {
      cp.stalled = true;
      break;
    }

    const double r0 = detail::norm2(r);
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1e-10) {
      Trajectory trial = cp.q;
      for (std::size_t m = 0; m < trial.data().size(); ++m) trial.data()[m] += lambda * step[static_cast<Eigen::Index>(m)];
      auto rt = I.residual(trial);
      if (detail::norm2(rt) < (1.0 - 1e-4 * lambda) * r0) {
        cp.q = std::move(trial);
        r = std::move(rt);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      cp.stalled = true;
      break;
    }
  }
  cp.level = I.value(cp.q);
  return cp;
}

}  // namespace homoclinic
