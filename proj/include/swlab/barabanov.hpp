#pragma once

// Grid approximation of a Barabanov norm for a linear switched system at the
// boundary of stability (uniform rate zero), with residual checks of its two
// defining properties and extremal-trajectory stepping.
//
// A norm is stored as its radial profile rho(p) = v(p) on unit vectors p of a
// sphere grid. Off the grid, v(x) = |x| * sum_k beta_k rho(p_k), where beta are
// the normalised barycentric coordinates of x in the cone over its grid
// simplex. The Euclidean norm (rho == 1) is reproduced exactly.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "trajectory.hpp"

namespace swlab {

struct Stencil {
  int count = 0;
  std::array<int, kMaxDim> index{};
  std::array<double, kMaxDim> weight{};
};

class SphereGrid {
 public:
  SphereGrid() = default;

  // M equally spaced points on the unit circle.
  static SphereGrid circle(int M) {
    require(M >= 8, "circle grid needs at least 8 points");
    SphereGrid g;
    g.dim_ = 2;
    g.resolution_ = M;
    for (int k = 0; k < M; ++k) {
      const double t = 2.0 * M_PI * k / M;
      g.points_.push_back(Vec{std::cos(t), std::sin(t)});
    }
    g.mesh_ = 2.0 * M_PI / M;
    return g;
  }

  // Radial projection of the lattice points z in Z^d / n with |z|_1 = 1.
  // Each orthant facet of the cross-polytope is split into Kuhn simplices.
  static SphereGrid cross_polytope(int d, int n) {
    require(d >= 3 && d <= 4, "cross-polytope grids are built for d = 3 and 4");
    require(n >= 1, "subdivision count must be positive");
    SphereGrid g;
    g.dim_ = d;
    g.resolution_ = n;
    std::array<int, kMaxDim> z{};
    // Enumerate every signed lattice vector with sum |z_i| = n.
    std::function<void(int, int)> rec = [&](int k, int left) {
      if (k == d - 1) {
        for (int s : {1, -1}) {
          if (left == 0 && s < 0) continue;
          z[k] = s * left;
          g.add_lattice_point(z);
        }
        return;
      }
      for (int a = -left; a <= left; ++a) {
        z[k] = a;
        rec(k + 1, left - std::abs(a));
      }
    };
    rec(0, n);
    g.mesh_ = g.measure_mesh();
    return g;
  }

  // Grid for dimension d with mesh (largest edge angle) about h.
  static SphereGrid with_mesh(int d, double h) {
    require(h > 0 && h < 1, "mesh must lie in (0, 1)");
    if (d == 2) return circle(std::max(8, static_cast<int>(std::ceil(2.0 * M_PI / h))));
    // Kuhn edges near the facet centres are the longest, about 1.6/n rad.
    return cross_polytope(d, std::max(1, static_cast<int>(std::ceil(1.6 / h))));
  }

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  size_t size() const { return points_.size(); }
  const std::vector<Vec>& points() const { return points_; }
  const Vec& point(size_t k) const { return points_[k]; }
  double mesh() const { return mesh_; }

  Stencil locate(const Vec& x) const {
    require(x.size() == dim_, "point dimension does not match the grid");
    Stencil st;
    if (dim_ == 2) {
      double t = std::atan2(x[1], x[0]);
      if (t < 0) t += 2.0 * M_PI;
      const double step = 2.0 * M_PI / resolution_;
      int k = static_cast<int>(std::floor(t / step));
      k = std::clamp(k, 0, resolution_ - 1);
      const int k1 = (k + 1) % resolution_;
      const Vec& p = points_[k];
      const Vec& q = points_[k1];
      // x = a p + b q
      const double det = p[0] * q[1] - p[1] * q[0];
      double a = (x[0] * q[1] - x[1] * q[0]) / det, b = (p[0] * x[1] - p[1] * x[0]) / det;
      a = std::max(a, 0.0);
      b = std::max(b, 0.0);
      const double s = a + b;
      st.count = 2;
      st.index[0] = k;
      st.index[1] = k1;
      st.weight[0] = a / s;
      st.weight[1] = b / s;
      return st;
    }
    const int d = dim_, n = resolution_;
    double l1 = 0.0;
    for (int i = 0; i < d; ++i) l1 += std::abs(x[i]);
    require(l1 > 0 && std::isfinite(l1), "cannot locate the zero vector");
    std::array<int, kMaxDim> sign{};
    std::array<double, kMaxDim> u{};
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      sign[i] = x[i] < 0 ? -1 : 1;
      acc += std::abs(x[i]) / l1 * n;
      u[i] = std::min(acc, static_cast<double>(n));
    }
    // Kuhn simplex of the cumulative coordinates u_1..u_{d-1}.
    const int m = d - 1;
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    std::array<int, kMaxDim> order{};
    for (int k = 0; k < m; ++k) {
      base[k] = std::min(static_cast<int>(std::floor(u[k])), n - 1);
      frac[k] = std::clamp(u[k] - base[k], 0.0, 1.0);
      order[k] = k;
    }
    // Descending fractions; ties take the later coordinate first so that every
    // vertex keeps u nondecreasing.
    std::sort(order.begin(), order.begin() + m, [&](int a, int b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return a > b;
    });
    std::array<int, kMaxDim> cur = base;
    st.count = d;
    for (int j = 0; j <= m; ++j) {
      if (j > 0) ++cur[order[j - 1]];
      const double w = j == 0 ? 1.0 - frac[order[0]] : (j < m ? frac[order[j - 1]] - frac[order[j]] : frac[order[m - 1]]);
      std::array<int, kMaxDim> zz{};
      int prev = 0;
      for (int k = 0; k < m; ++k) {
        zz[k] = sign[k] * (cur[k] - prev);
        prev = cur[k];
      }
      zz[m] = sign[m] * (n - prev);
      st.index[j] = lookup(zz);
      st.weight[j] = std::max(w, 0.0);
    }
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += st.weight[j];
    for (int j = 0; j < d; ++j) st.weight[j] /= s;
    return st;
  }

 private:
  int dim_ = 0, resolution_ = 0;
  std::vector<Vec> points_;
  std::unordered_map<uint64_t, int> index_;
  double mesh_ = 0.0;

  uint64_t key(const std::array<int, kMaxDim>& z) const {
    uint64_t k = 0;
    for (int i = 0; i < dim_; ++i) k = k * 4099 + static_cast<uint64_t>(z[i] + 2048);
    return k;
  }

  void add_lattice_point(const std::array<int, kMaxDim>& z) {
    // Zero coordinates are entered once.
    Vec p(dim_);
    for (int i = 0; i < dim_; ++i) p[i] = z[i];
    index_.emplace(key(z), static_cast<int>(points_.size()));
    points_.push_back(p.normalized());
  }

  int lookup(const std::array<int, kMaxDim>& z) const {
    std::array<int, kMaxDim> c = z;
    auto it = index_.find(key(c));
    if (it == index_.end()) throw InvalidArgument("sphere grid lookup left the lattice");
    return it->second;
  }

  // Largest angle across an edge between lattice neighbours z and z + e_a - e_b.
  double measure_mesh() const {
    double worst = 0.0;
    for (const auto& [k, idx] : index_) {
      (void)k;
      const Vec& p = points_[idx];
      // Rebuild the lattice vector from the point.
      double l1 = 0.0;
      for (int i = 0; i < dim_; ++i) l1 += std::abs(p[i]);
      std::array<int, kMaxDim> z{};
      for (int i = 0; i < dim_; ++i) z[i] = static_cast<int>(std::lround(p[i] / l1 * resolution_));
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) {
          if (a == b) continue;
          // Move one unit of mass from coordinate b to a inside the same orthant.
          std::array<int, kMaxDim> w = z;
          if (w[b] == 0) continue;
          const int sb = w[b] > 0 ? 1 : -1;
          w[b] -= sb;
          const int sa = w[a] != 0 ? (w[a] > 0 ? 1 : -1) : sb;
          w[a] += sa;
          auto it = index_.find(key(w));
          if (it == index_.end()) continue;
          const double c = std::clamp(p.dot(points_[it->second]), -1.0, 1.0);
          worst = std::max(worst, std::acos(c));
        }
    }
    return worst;
  }
};

struct BarabanovOptions {
  std::vector<double> dwell_grid{0.01};
  double horizon = 200.0;        // longest law duration explored
  double increment_tol = 1e-5;   // stop when a sweep raises no value by more
  double c_max = 1e6;            // divergence and reducibility sentinel
};

struct NormApprox {
  SphereGrid grid;
  std::vector<double> values;  // v at each grid point, anchored so max = 1
  double horizon = 0.0;        // law duration covered by the sweeps
  int sweeps = 0;
  double last_increment = 0.0;
  double anchor = 1.0;         // unanchored max value (growth over the horizon)
  bool converged = false;
  bool reducibility_warning = false;
  std::vector<double> increments;  // per sweep, for the convergence report

  double operator()(const Vec& x) const {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    const Stencil st = grid.locate(x);
    double s = 0.0;
    for (int j = 0; j < st.count; ++j) s += st.weight[j] * values[st.index[j]];
    return r * s;
  }

  double min_value() const { return *std::min_element(values.begin(), values.end()); }
  double max_value() const { return *std::max_element(values.begin(), values.end()); }

  // Tabular export: one line per grid point, coordinates then value.
  void write_table(std::ostream& os) const {
    os.precision(17);
    for (size_t k = 0; k < grid.size(); ++k) {
      const Vec& p = grid.point(k);
      for (int i = 0; i < p.size(); ++i) os << p[i] << ' ';
      os << values[k] << '\n';
    }
  }
};

// The Euclidean norm on a grid (every profile value 1).
inline NormApprox euclidean_norm(const SphereGrid& grid) {
  NormApprox n;
  n.grid = grid;
  n.values.assign(grid.size(), 1.0);
  n.converged = true;
  return n;
}

// Dynamic programming over dwell steps:
//   v_{k+1}(p) = max(v_k(p), max_{i,g} v_k(exp(tau_g A_i) p)),  v_0 = |.|,
// so v_k(p) is the largest Euclidean norm reachable from p by a vertex law of
// at most k steps. Sweeps are Jacobi-style on the previous values.
inline NormApprox compute_barabanov(const SwitchedSystem& sys, const SphereGrid& grid,
                                    const BarabanovOptions& opt = {}) {
  require(sys.is_linear(), "Barabanov norms are computed for linear systems");
  require(sys.dim() == grid.dim(), "grid dimension does not match the system");
  require(!opt.dwell_grid.empty() && opt.horizon > 0, "dwell grid and horizon must be positive");
  for (double t : opt.dwell_grid) require(t > 0 && std::isfinite(t), "dwell times must be positive");
  const size_t P = grid.size();
  struct Image {
    Stencil st;
    double r;
  };
  std::vector<Image> images;
  images.reserve(P * sys.count() * opt.dwell_grid.size());
  for (const auto& A : sys.matrices)
    for (double t : opt.dwell_grid) {
      const Mat E = expm(A, t);
      for (size_t k = 0; k < P; ++k) {
        const Vec y = E * grid.point(k);
        images.push_back({grid.locate(y), y.norm()});
      }
    }
  const size_t maps = images.size() / P;
  const double step = *std::max_element(opt.dwell_grid.begin(), opt.dwell_grid.end());
  NormApprox out;
  out.grid = grid;
  std::vector<double> v(P, 1.0), next(P);
  while (true) {
    double inc = 0.0;
    for (size_t k = 0; k < P; ++k) {
      double best = v[k];
      for (size_t m = 0; m < maps; ++m) {
        const Image& im = images[m * P + k];
        double s = 0.0;
        for (int j = 0; j < im.st.count; ++j) s += im.st.weight[j] * v[im.st.index[j]];
        best = std::max(best, im.r * s);
      }
      next[k] = best;
      inc = std::max(inc, best - v[k]);
    }
    v.swap(next);
    ++out.sweeps;
    out.horizon += step;
    out.increments.push_back(inc);
    out.last_increment = inc;
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx <= opt.c_max)) throw NotAtBoundary("norm values diverge: the system grows at rate above zero");
    if (inc < opt.increment_tol * mx) {
      out.converged = true;
      break;
    }
    if (out.horizon >= opt.horizon) break;
  }
  const double mx = *std::max_element(v.begin(), v.end());
  const double mn = *std::min_element(v.begin(), v.end());
  out.anchor = mx;
  out.reducibility_warning = mx / mn > opt.c_max;
  for (auto& x : v) x /= mx;
  out.values = std::move(v);
  return out;
}

struct BarabanovReport {
  double tau = 0.0;
  double nonexpansiveness = 0.0;  // max_x max_i (v(e^{tau A_i} x) - v(x)) / tau
  double extremality = 0.0;       // max_x -max_i (v(e^{tau A_i} x) - v(x)) / tau
  bool nonexpansive_pass = false, extremal_pass = false;
  size_t probes = 0;
  bool pass() const { return nonexpansive_pass && extremal_pass; }
};

// Residuals of the two Barabanov properties at the given unit probe vectors,
// for any norm-like callable.
template <class Norm>
BarabanovReport check_barabanov_at(const Norm& norm, const SwitchedSystem& sys, double tau, double tol,
                                   const std::vector<Vec>& pts) {
  require(tau > 0 && std::isfinite(tau), "probe step must be positive");
  require(sys.is_linear() && !pts.empty(), "residual check needs a linear system and probes");
  std::vector<Mat> E;
  for (const auto& A : sys.matrices) E.push_back(expm(A, tau));
  BarabanovReport rep;
  rep.tau = tau;
  rep.probes = pts.size();
  rep.nonexpansiveness = rep.extremality = -std::numeric_limits<double>::infinity();
  for (const auto& x : pts) {
    const double v0 = norm(x);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& M : E) best = std::max(best, (norm(M * x) - v0) / tau);
    rep.nonexpansiveness = std::max(rep.nonexpansiveness, best);
    rep.extremality = std::max(rep.extremality, -best);
  }
  rep.nonexpansive_pass = rep.nonexpansiveness <= tol;
  rep.extremal_pass = rep.extremality <= tol;
  return rep;
}

// Probes default to the norm's own grid points.
inline BarabanovReport check_barabanov(const NormApprox& norm, const SwitchedSystem& sys, double tau, double tol,
                                       const std::vector<Vec>& probes = {}) {
  require(sys.is_linear() && sys.dim() == norm.grid.dim(), "system does not match the norm");
  return check_barabanov_at(norm, sys, tau, tol, probes.empty() ? norm.grid.points() : probes);
}

struct ExtremalStep {
  std::vector<double> weights;
  Vec next;
  double drift = 0.0;    // v(next) - v(x)
  bool stalled = false;  // every candidate decreases the norm by more than tol
};

// One step of an approximately extremal trajectory: the best of the vertices
// and the pairwise midpoints of the vertex set.
template <class Norm>
ExtremalStep extremal_step(const Norm& norm, const SwitchedSystem& sys, const Vec& x, double tau,
                                  double tol = 1e-9) {
  require(x.norm() > 0, "extremal step needs a nonzero state");
  require(tau > 0, "step must be positive");
  const int N = sys.count();
  std::vector<std::vector<double>> cands;
  for (int i = 0; i < N; ++i) {
    std::vector<double> w(N, 0.0);
    w[i] = 1.0;
    cands.push_back(w);
  }
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      std::vector<double> w(N, 0.0);
      w[i] = w[j] = 0.5;
      cands.push_back(w);
    }
  const double v0 = norm(x);
  ExtremalStep out;
  out.drift = -std::numeric_limits<double>::infinity();
  for (const auto& w : cands) {
    Vec y = expm(sys.generator(w), tau) * x;
    const double d = norm(y) - v0;
    if (d > out.drift) {
      out.drift = d;
      out.weights = w;
      out.next = y;
    }
  }
  out.stalled = out.drift < -tol * v0;
  return out;
}

struct RadialViolation {
  size_t i, j;
  double angle, ratio;
};

struct RadialReport {
  std::vector<RadialViolation> violations;
  bool injective() const { return violations.empty(); }
};

// Pairs of states on a common ray (angle below angle_tol) whose norms differ
// by a ratio above 1 + ratio_tol. Directions are bucketed on a grid of cell
// size angle_tol so only neighbouring cells are compared.
inline RadialReport radial_injectivity(const std::vector<Vec>& pts, double angle_tol = 1e-6, double ratio_tol = 1e-6) {
  RadialReport rep;
  if (pts.empty()) return rep;
  const int d = pts.front().size();
  std::vector<Vec> dir;
  std::vector<double> r;
  for (const auto& p : pts) {
    require(p.size() == d, "states must share a dimension");
    const double n = p.norm();
    require(n > 0, "radial injectivity needs nonzero states");
    dir.push_back(p * (1.0 / n));
    r.push_back(n);
  }
  const double cell = angle_tol;
  std::map<std::vector<long>, std::vector<size_t>> buckets;
  auto cell_of = [&](const Vec& u) {
    std::vector<long> c(d);
    for (int i = 0; i < d; ++i) c[i] = static_cast<long>(std::floor(u[i] / cell));
    return c;
  };
  for (size_t k = 0; k < dir.size(); ++k) buckets[cell_of(dir[k])].push_back(k);
  std::vector<long> off(d);
  for (size_t k = 0; k < dir.size(); ++k) {
    const auto c = cell_of(dir[k]);
    // Visit the 3^d neighbouring cells.
    long total = 1;
    for (int i = 0; i < d; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
      long t = code;
      std::vector<long> nb = c;
      for (int i = 0; i < d; ++i) {
        nb[i] += t % 3 - 1;
        t /= 3;
      }
      auto it = buckets.find(nb);
      if (it == buckets.end()) continue;
      for (size_t j : it->second) {
        if (j <= k) continue;
        const double ang = 2.0 * std::asin(std::min(1.0, 0.5 * (dir[k] - dir[j]).norm()));
        if (ang >= angle_tol) continue;
        const double ratio = std::max(r[k], r[j]) / std::min(r[k], r[j]);
        if (ratio > 1.0 + ratio_tol) rep.violations.push_back({k, j, ang, ratio});
      }
    }
  }
  return rep;
}

}  // namespace swlab
