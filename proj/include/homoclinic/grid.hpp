#pragma once

// Uniform periodic discretization of [-k, k): nodes, quadrature, difference
// operators and the discrete E_k, L^2 and L^inf norms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "homoclinic/error.hpp"

namespace homoclinic {

inline constexpr std::size_t kMinNodes = 16;
inline constexpr std::size_t kMaxNodes = std::size_t{1} << 16;

class PeriodicGrid {
public:
  PeriodicGrid(double k, std::size_t nodes) : k_(k), n_(nodes), h_(2.0 * k / static_cast<double>(nodes)) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("grid half-period must be positive, got " + std::to_string(k));
    if (nodes < kMinNodes) throw DomainError("grid needs at least 16 nodes, got " + std::to_string(nodes));
    if (nodes % 2 != 0) throw DomainError("grid node count must be even, got " + std::to_string(nodes));
  }

  /// Grid with N = nodes_per_unit * k rounded to the nearest even count,
  /// clamped to [16, 2^16]. Integer k and fixed density keep h constant and
  /// the nodes of different k aligned.
  static PeriodicGrid with_density(double k, double nodes_per_unit) {
    if (!(nodes_per_unit > 0.0)) throw DomainError("nodes_per_unit must be positive");
    double raw = nodes_per_unit * k;
    auto nodes = static_cast<std::size_t>(2.0 * std::round(raw / 2.0));
    nodes = std::clamp(nodes, kMinNodes, kMaxNodes);
    return PeriodicGrid(k, nodes);
  }

  double k() const noexcept { return k_; }
  std::size_t size() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  double node(std::size_t i) const noexcept { return -k_ + static_cast<double>(i) * h_; }

  std::size_t next(std::size_t i) const noexcept { return i + 1 == n_ ? 0 : i + 1; }
  std::size_t prev(std::size_t i) const noexcept { return i == 0 ? n_ - 1 : i - 1; }
  /// Index of the node at -t_i (time reflection).
  std::size_t mirror(std::size_t i) const noexcept { return i == 0 ? 0 : n_ - i; }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

private:
  double k_;
  std::size_t n_;
  double h_;
};

/// Grid-sampled curve in R^n. Storage is node-major: value(i, c) = data[i*n + c].
class Trajectory {
public:
  Trajectory(PeriodicGrid grid, std::size_t dim) : grid_(grid), dim_(dim), data_(grid.size() * dim, 0.0) {
    if (dim == 0) throw DomainError("trajectory dimension must be positive");
  }

  Trajectory(PeriodicGrid grid, std::size_t dim, std::vector<double> data)
      : grid_(grid), dim_(dim), data_(std::move(data)) {
    if (dim == 0) throw DomainError("trajectory dimension must be positive");
    if (data_.size() != grid.size() * dim) throw DomainError("trajectory data length does not match grid");
    for (double v : data_)
      if (!std::isfinite(v)) throw DomainError("trajectory values must be finite");
  }

  /// Samples fn(t) (scalar, n = 1) at every node.
  template <class Fn>
  static Trajectory from_function(PeriodicGrid grid, Fn&& fn) {
    Trajectory q(grid, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) q.data_[i] = fn(grid.node(i));
    return q;
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t nodes() const noexcept { return grid_.size(); }

  double& operator()(std::size_t i, std::size_t c = 0) noexcept { return data_[i * dim_ + c]; }
  double operator()(std::size_t i, std::size_t c = 0) const noexcept { return data_[i * dim_ + c]; }

  std::span<double> at(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> at(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Trajectory& o) const noexcept { return grid_ == o.grid_ && dim_ == o.dim_; }

private:
  PeriodicGrid grid_;
  std::size_t dim_;
  std::vector<double> data_;
};

namespace detail {

inline double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace detail

/// Central periodic difference (q_{i+1} - q_{i-1}) / 2h.
inline Trajectory diff1(const Trajectory& q) {
  const auto& g = q.grid();
  Trajectory out(g, q.dim());
  const double inv = 1.0 / (2.0 * g.h());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t c = 0; c < q.dim(); ++c) out(i, c) = (q(g.next(i), c) - q(g.prev(i), c)) * inv;
  return out;
}

/// Forward periodic difference (q_{i+1} - q_i) / h. This is the derivative
/// that enters the discrete E_k norm and the kinetic part of the action; its
/// adjoint composition is exactly -diff2.
inline Trajectory diff_forward(const Trajectory& q) {
  const auto& g = q.grid();
  Trajectory out(g, q.dim());
  const double inv = 1.0 / g.h();
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t c = 0; c < q.dim(); ++c) out(i, c) = (q(g.next(i), c) - q(i, c)) * inv;
  return out;
}

/// Second periodic difference (q_{i+1} - 2 q_i + q_{i-1}) / h^2.
inline Trajectory diff2(const Trajectory& q) {
  const auto& g = q.grid();
  Trajectory out(g, q.dim());
  const double inv = 1.0 / (g.h() * g.h());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t c = 0; c < q.dim(); ++c)
      out(i, c) = (q(g.next(i), c) - 2.0 * q(i, c) + q(g.prev(i), c)) * inv;
  return out;
}

/// Periodic trapezoid rule: h * sum of samples.
inline double quadrature(std::span<const double> samples, const PeriodicGrid& grid) {
  if (samples.size() != grid.size()) throw DomainError("quadrature: sample count does not match grid");
  double s = 0.0;
  for (double v : samples) s += v;
  return grid.h() * s;
}

inline double l2_norm(const Trajectory& q) {
  return std::sqrt(q.grid().h() * detail::sq_norm(q.data()));
}

inline double linf_norm(const Trajectory& q) {
  double m = 0.0;
  for (std::size_t i = 0; i < q.nodes(); ++i) m = std::max(m, std::sqrt(detail::sq_norm(q.at(i))));
  return m;
}

/// Squared discrete E_k norm: h * sum(|q_i|^2 + |D+ q_i|^2).
inline double ek_norm_sq(const Trajectory& q) {
  const auto& g = q.grid();
  double s = 0.0;
  const double inv = 1.0 / g.h();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t c = 0; c < q.dim(); ++c) {
      double d = (q(g.next(i), c) - q(i, c)) * inv;
      s += q(i, c) * q(i, c) + d * d;
    }
  }
  return g.h() * s;
}

inline double ek_norm(const Trajectory& q) { return std::sqrt(ek_norm_sq(q)); }

/// Linear interpolation of the periodic trajectory at t in [-k, k].
inline void interpolate(const Trajectory& q, double t, std::span<double> out) {
  const auto& g = q.grid();
  double u = (t + g.k()) / g.h();
  double base = std::floor(u);
  double frac = u - base;
  auto n = static_cast<long long>(g.size());
  long long i0 = static_cast<long long>(base) % n;
  if (i0 < 0) i0 += n;
  auto a = static_cast<std::size_t>(i0);
  auto b = g.next(a);
  for (std::size_t c = 0; c < q.dim(); ++c) out[c] = (1.0 - frac) * q(a, c) + frac * q(b, c);
}

/// Transfer to a larger (or equal) domain: linear interpolation on the
/// source domain, zero on the new tail.
inline Trajectory resample(const Trajectory& q, const PeriodicGrid& target) {
  const auto& src = q.grid();
  if (target.k() < src.k()) throw WindowError("resample: target half-period smaller than source; use restrict_to_window");
  Trajectory out(target, q.dim());
  for (std::size_t i = 0; i < target.size(); ++i) {
    double t = target.node(i);
    // Source nodes cover [-k, k); the point t = k is the seam node -k.
    if (t < -src.k() || t > src.k()) continue;
    interpolate(q, t, out.at(i));
  }
  return out;
}

struct WindowSample {
  double t;
  std::vector<double> q;
  std::vector<double> dq;
  std::vector<double> ddq;
};

/// Uniform samples of q, diff1(q) and diff2(q) on [-w, w], each linearly
/// interpolated from node values.
inline std::vector<WindowSample> restrict_to_window(const Trajectory& q, double w, std::size_t samples) {
  const auto& g = q.grid();
  if (!(w > 0.0) || w > g.k()) throw WindowError("window half-width must lie in (0, k]");
  if (samples < 2) throw WindowError("window needs at least two samples");
  Trajectory dq = diff1(q);
  Trajectory ddq = diff2(q);
  std::vector<WindowSample> out;
  out.reserve(samples);
  const double step = 2.0 * w / static_cast<double>(samples - 1);
  for (std::size_t j = 0; j < samples; ++j) {
    double t = (j + 1 == samples) ? w : -w + static_cast<double>(j) * step;
    WindowSample s{t, std::vector<double>(q.dim()), std::vector<double>(q.dim()), std::vector<double>(q.dim())};
    interpolate(q, t, s.q);
    interpolate(dq, t, s.dq);
    interpolate(ddq, t, s.ddq);
    out.push_back(std::move(s));
  }
  return out;
}

/// Node reversal i -> N - i (mod N), i.e. t -> -t.
inline Trajectory reflect(const Trajectory& q) {
  Trajectory out(q.grid(), q.dim());
  for (std::size_t i = 0; i < q.nodes(); ++i)
    for (std::size_t c = 0; c < q.dim(); ++c) out(q.grid().mirror(i), c) = q(i, c);
  return out;
}

}  // namespace homoclinic
