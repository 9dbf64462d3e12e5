#pragma once

// Discrete action
//
//   I_k(q) = 1/2 ||q||_{E_k}^2 - h sum a(t_i) G(q_i) + h sum (f(t_i), q_i)
//
// with the forward-difference E_k norm, so that its exact gradient is
// h (-diff2 q + q - a grad G(q) + f) node by node.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "homoclinic/error.hpp"
#include "homoclinic/grid.hpp"
#include "homoclinic/problem.hpp"

namespace homoclinic {

struct ActionEval {
  double value = 0.0;
  std::vector<double> grad;
  double grad_norm = 0.0;
  double residual_sup = 0.0;
};

/// I_k bound to one grid. Nodes all lie in [-k, k), so a_k and f_k are read
/// directly from a and f and cached once.
class ActionFunctional {
public:
  ActionFunctional(const Problem& p, const PeriodicGrid& grid) : p_(&p), grid_(grid), a_(grid.size()), f_(grid.size() * p.dim) {
    validate(p);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double t = grid.node(i);
      a_[i] = p.a(t);
      if (!std::isfinite(a_[i])) throw EvaluationError("non-finite a at node " + std::to_string(i), t, {});
      std::span<double> fi(f_.data() + i * p.dim, p.dim);
      p.f(t, fi);
      for (double v : fi)
        if (!std::isfinite(v)) throw EvaluationError("non-finite f at node " + std::to_string(i), t, {});
    }
  }

  const Problem& problem() const noexcept { return *p_; }
  const PeriodicGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return p_->dim; }
  double a_at(std::size_t i) const noexcept { return a_[i]; }
  std::span<const double> f_at(std::size_t i) const noexcept { return {f_.data() + i * dim(), dim()}; }

  double value(const Trajectory& q) const {
    check(q);
    const double h = grid_.h();
    double potential = 0.0;
    double forcing = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double g = p_->G(q.at(i));
      if (!std::isfinite(g)) throw EvaluationError("non-finite G at node " + std::to_string(i), grid_.node(i), copy(q.at(i)));
      potential += a_[i] * g;
      forcing += dot(f_at(i), q.at(i));
    }
    return 0.5 * ek_norm_sq(q) - h * potential + h * forcing;
  }

  /// Euclidean gradient of value() with respect to node values.
  std::vector<double> gradient(const Trajectory& q) const {
    auto r = residual(q);
    const double h = grid_.h();
    for (double& v : r) v *= -h;
    return r;
  }

  /// Node-wise  diff2(q) - q + a grad G(q) - f.
  std::vector<double> residual(const Trajectory& q) const {
    check(q);
    const std::size_t n = dim();
    const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
    std::vector<double> r(q.data().size());
    std::vector<double> g(n);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      p_->gradG(q.at(i), g);
      const std::size_t ip = grid_.next(i);
      const std::size_t im = grid_.prev(i);
      for (std::size_t c = 0; c < n; ++c) {
        double v = (q(ip, c) - 2.0 * q(i, c) + q(im, c)) * inv_h2 - q(i, c) + a_[i] * g[c] - f_[i * n + c];
        if (!std::isfinite(v)) throw EvaluationError("non-finite residual at node " + std::to_string(i), grid_.node(i), copy(q.at(i)));
        r[i * n + c] = v;
      }
    }
    return r;
  }

  ActionEval evaluate(const Trajectory& q) const {
    ActionEval e;
    e.value = value(q);
    auto r = residual(q);
    const double h = grid_.h();
    e.grad.resize(r.size());
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      e.grad[j] = -h * r[j];
      s += e.grad[j] * e.grad[j];
      e.residual_sup = std::max(e.residual_sup, std::abs(r[j]));
    }
    e.grad_norm = std::sqrt(s);
    return e;
  }

  /// Hessian block of G at node value x, n*n row-major.
  void hessian_G(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = dim();
    if (p_->hessG) {
      p_->hessG(x, out);
      return;
    }
    std::vector<double> xp(x.begin(), x.end()), gp(n), gm(n);
    for (std::size_t j = 0; j < n; ++j) {
      double step = 1e-6 * (1.0 + std::abs(x[j]));
      xp[j] = x[j] + step;
      p_->gradG(xp, gp);
      xp[j] = x[j] - step;
      p_->gradG(xp, gm);
      xp[j] = x[j];
      for (std::size_t i = 0; i < n; ++i) out[i * n + j] = (gp[i] - gm[i]) / (2.0 * step);
    }
  }

  /// Second derivative of value() applied to v.
  std::vector<double> hess_vec(const Trajectory& q, const Trajectory& v) const {
    check(q);
    check(v);
    if (!p_->hessG) return hess_vec_fd(q, v);
    const std::size_t n = dim();
    const double h = grid_.h();
    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> out(q.data().size());
    std::vector<double> H(n * n);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      p_->hessG(q.at(i), H);
      const std::size_t ip = grid_.next(i);
      const std::size_t im = grid_.prev(i);
      for (std::size_t c = 0; c < n; ++c) {
        double hv = 0.0;
        for (std::size_t d = 0; d < n; ++d) hv += H[c * n + d] * v(i, d);
        double lap = (v(ip, c) - 2.0 * v(i, c) + v(im, c)) * inv_h2;
        out[i * n + c] = h * (-lap + v(i, c) - a_[i] * hv);
      }
    }
    return out;
  }

  /// Central difference of gradient() along v.
  std::vector<double> hess_vec_fd(const Trajectory& q, const Trajectory& v) const {
    double qn = std::sqrt(detail::sq_norm(q.data()));
    double vn = std::sqrt(detail::sq_norm(v.data()));
    if (vn == 0.0) return std::vector<double>(q.data().size(), 0.0);
    double eps = 1e-6 * (1.0 + qn) / (1.0 + vn);
    Trajectory qp = q, qm = q;
    for (std::size_t j = 0; j < q.data().size(); ++j) {
      qp.data()[j] += eps * v.data()[j];
      qm.data()[j] -= eps * v.data()[j];
    }
    auto gp = gradient(qp);
    auto gm = gradient(qm);
    for (std::size_t j = 0; j < gp.size(); ++j) gp[j] = (gp[j] - gm[j]) / (2.0 * eps);
    return gp;
  }

private:
  void check(const Trajectory& q) const {
    if (!(q.grid() == grid_) || q.dim() != dim()) throw DomainError("trajectory does not match the action's grid/dimension");
  }
  static double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  }
  static std::vector<double> copy(std::span<const double> x) { return {x.begin(), x.end()}; }

  const Problem* p_;
  PeriodicGrid grid_;
  std::vector<double> a_;
  std::vector<double> f_;
};

inline double action_value(const Problem& p, const Trajectory& q) { return ActionFunctional(p, q.grid()).value(q); }

inline std::vector<double> action_gradient(const Problem& p, const Trajectory& q) {
  return ActionFunctional(p, q.grid()).gradient(q);
}

inline Trajectory el_residual(const Problem& p, const Trajectory& q) {
  return Trajectory(q.grid(), q.dim(), ActionFunctional(p, q.grid()).residual(q));
}

inline std::vector<double> hess_vec(const Problem& p, const Trajectory& q, const Trajectory& v) {
  return ActionFunctional(p, q.grid()).hess_vec(q, v);
}

inline ActionEval evaluate_action(const Problem& p, const Trajectory& q) { return ActionFunctional(p, q.grid()).evaluate(q); }

/// |<grad I(q), q> - (||q||^2 - int (a grad G(q), q) + int (f, q))|.
inline double pairing_identity_check(const Problem& p, const Trajectory& q) {
  ActionFunctional I(p, q.grid());
  auto grad = I.gradient(q);
  double lhs = std::inner_product(grad.begin(), grad.end(), q.data().begin(), 0.0);

  const std::size_t n = p.dim;
  std::vector<double> g(n), pot(q.nodes()), frc(q.nodes());
  for (std::size_t i = 0; i < q.nodes(); ++i) {
    p.gradG(q.at(i), g);
    auto x = q.at(i);
    auto fi = I.f_at(i);
    pot[i] = I.a_at(i) * std::inner_product(g.begin(), g.end(), x.begin(), 0.0);
    frc[i] = std::inner_product(fi.begin(), fi.end(), x.begin(), 0.0);
  }
  double rhs = ek_norm_sq(q) - quadrature(pot, q.grid()) + quadrature(frc, q.grid());
  return std::abs(lhs - rhs);
}

/// Copy of p whose forcing makes q_star an exact zero of the discrete
/// residual: f_i = diff2(q*)_i - q*_i + a_i grad G(q*_i). Off-node times
/// read the nearest node.
inline Problem manufacture_forcing(const Problem& p, const Trajectory& q_star) {
  ActionFunctional base(p, q_star.grid());
  const auto& grid = q_star.grid();
  const std::size_t n = p.dim;
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  std::vector<double> table(q_star.data().size());
  std::vector<double> g(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    p.gradG(q_star.at(i), g);
    for (std::size_t c = 0; c < n; ++c)
      table[i * n + c] = (q_star(grid.next(i), c) - 2.0 * q_star(i, c) + q_star(grid.prev(i), c)) * inv_h2 - q_star(i, c) +
                         base.a_at(i) * g[c];
  }
  Problem out = p;
  out.label = p.label + "_manufactured";
  out.f = [table = std::move(table), grid, n](double t, std::span<double> o) {
    auto m = static_cast<long long>(grid.size());
    long long i = std::llround((t + grid.k()) / grid.h()) % m;
    if (i < 0) i += m;
    for (std::size_t c = 0; c < n; ++c) o[c] = table[static_cast<std::size_t>(i) * n + c];
  };
  return out;
}

}  // namespace homoclinic
