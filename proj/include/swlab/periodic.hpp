#pragma once

// Periodic orbits from recurrent trajectories: projection to the sphere,
// recurrence detection, the convex-hull stationarity test, the reversed-arc
// search on S^2 and shooting refinement of candidate periodic laws.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "barabanov.hpp"
#include "planegraph.hpp"
#include "trajectory.hpp"

namespace swlab {

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

enum class ProjectionKind { Real, Hopf };

// Real kind: x / |x|. Hopf kind: state in R^4 read as (z1, z2) in C^2 and
// sent to (2 Re z1 conj z2, 2 Im z1 conj z2, |z1|^2 - |z2|^2) / |z|^2.
inline Vec project(ProjectionKind kind, const Vec& x) {
  require(x.finite(), "state must be finite");
  const double r = x.norm();
  if (!(r > 0.0)) throw InvalidArgument("cannot project the zero state");
  if (kind == ProjectionKind::Real) return x * (1.0 / r);
  require(x.size() == 4, "Hopf projection expects a state in C^2 = R^4");
  const Vec y = x * (1.0 / r);
  const cplx z1(y[0], y[1]), z2(y[2], y[3]);
  const cplx p = z1 * std::conj(z2);
  Vec h{2.0 * p.real(), 2.0 * p.imag(), std::norm(z1) - std::norm(z2)};
  return h * (1.0 / h.norm());
}

// Angle between unit vectors.
inline double sphere_distance(const Vec& a, const Vec& b) {
  const double c = (a - b).norm();
  return 2.0 * std::asin(std::min(1.0, 0.5 * c));
}

// Projected samples on a uniform time grid.
struct SphereTrajectory {
  std::vector<double> t;
  std::vector<Vec> p;
  double step = 0.0;
  size_t size() const { return p.size(); }

  // Great-circle interpolation between neighbouring samples.
  Vec at(double time) const {
    require(!p.empty(), "empty sphere trajectory");
    const double s = std::clamp((time - t.front()) / step, 0.0, static_cast<double>(p.size() - 1));
    const size_t k = std::min(static_cast<size_t>(std::floor(s)), p.size() - 1);
    if (k + 1 >= p.size()) return p.back();
    const double u = s - static_cast<double>(k);
    return (p[k] * (1.0 - u) + p[k + 1] * u).normalized();
  }
};

inline SphereTrajectory project_trajectory(const Trajectory& tr, ProjectionKind kind) {
  SphereTrajectory out;
  out.step = tr.out_step;
  for (const auto& s : tr.samples) {
    // Drop the unaligned closing sample so the grid stays uniform.
    if (!out.t.empty() && std::abs((s.t - out.t.back()) - tr.out_step) > 1e-9 * std::max(1.0, s.t)) break;
    out.t.push_back(s.t);
    out.p.push_back(project(kind, s.x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recurrence
// ---------------------------------------------------------------------------

struct RecurrenceEvent {
  double t = 0.0;      // base time
  double tau = 0.0;    // return lag
  double window = 0.0;
  double sup_distance = 0.0;
  size_t base = 0, lag = 0;  // sample indices
};

struct RecurrenceOptions {
  double window = 1.0;
  double threshold = 1e-2;
  double min_return = 0.0;   // smallest lag considered; 0 means the window length
  double t_min = 0.0;        // earliest base time
  size_t base_stride = 0;    // samples between base times; 0 means one window
  size_t max_events = 100000;
  bool local_minima_only = false;  // keep only lags that locally minimise the sup-distance
};

// Sup over [t, t + w] of the distance between phi(s) and phi(s + tau), on the
// sample grid, for every admissible base t and lag tau. Sorted by sup-distance.
inline std::vector<RecurrenceEvent> detect_recurrence(const SphereTrajectory& phi, const RecurrenceOptions& opt) {
  require(phi.step > 0 && phi.size() >= 2, "trajectory needs at least two samples");
  require(opt.window > 0 && opt.threshold > 0, "window and threshold must be positive");
  const size_t n = phi.size();
  const size_t w = std::max<size_t>(1, static_cast<size_t>(std::llround(opt.window / phi.step)));
  const size_t lag0 = std::max<size_t>(
      1, static_cast<size_t>(std::ceil((opt.min_return > 0 ? opt.min_return : opt.window) / phi.step - 1e-9)));
  const size_t stride = opt.base_stride > 0 ? opt.base_stride : w;
  const size_t b0 = static_cast<size_t>(std::ceil(opt.t_min / phi.step - 1e-9));
  // Max-heap on sup-distance keeps the best max_events.
  auto worse = [](const RecurrenceEvent& a, const RecurrenceEvent& b) { return a.sup_distance < b.sup_distance; };
  std::priority_queue<RecurrenceEvent, std::vector<RecurrenceEvent>, decltype(worse)> heap(worse);
  std::vector<double> sup;
  for (size_t b = b0; b + w + lag0 < n; b += stride) {
    const size_t lmax = n - 1 - w - b;
    sup.assign(lmax + 2, std::numeric_limits<double>::infinity());
    for (size_t l = lag0; l <= lmax; ++l) {
      double s = 0.0;
      for (size_t k = 0; k <= w && s < opt.threshold; ++k) s = std::max(s, sphere_distance(phi.p[b + k], phi.p[b + l + k]));
      sup[l] = s;
    }
    for (size_t l = lag0; l <= lmax; ++l) {
      if (!(sup[l] < opt.threshold)) continue;
      if (opt.local_minima_only) {
        const double left = l > lag0 ? sup[l - 1] : std::numeric_limits<double>::infinity();
        if (sup[l] > left || sup[l] > sup[l + 1]) continue;
        if (sup[l] == left && l > lag0) continue;  // plateau: keep its first lag
      }
      RecurrenceEvent e{phi.t[b], static_cast<double>(l) * phi.step, static_cast<double>(w) * phi.step, sup[l], b, l};
      if (heap.size() < opt.max_events) heap.push(e);
      else if (e.sup_distance < heap.top().sup_distance) {
        heap.pop();
        heap.push(e);
      }
    }
  }
  std::vector<RecurrenceEvent> out;
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  std::stable_sort(out.begin(), out.end(), [](const RecurrenceEvent& a, const RecurrenceEvent& b) {
    if (a.sup_distance != b.sup_distance) return a.sup_distance < b.sup_distance;
    if (a.tau != b.tau) return a.tau < b.tau;
    return a.t < b.t;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Stationarity: is 0 in the convex hull of the velocity vertices?
// ---------------------------------------------------------------------------

struct HullPoint {
  std::vector<double> weights;  // convex weights of the minimum-norm point
  Vec point;
  double distance = 0.0;
};

namespace detail {

// Minimum-norm point of the affine hull of the chosen vertices; nullopt when
// they are affinely dependent.
inline std::optional<std::vector<double>> affine_min_norm(const std::vector<Vec>& v, const std::vector<int>& S) {
  const int k = static_cast<int>(S.size());
  std::vector<double> a((k + 1) * (k + 1), 0.0), b(k + 1, 0.0);
  double scale = 0.0;
  for (int i : S) scale = std::max(scale, v[i].dot(v[i]));
  if (scale == 0.0) scale = 1.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) a[i * (k + 1) + j] = v[S[i]].dot(v[S[j]]) / scale;
    a[i * (k + 1) + k] = 1.0;
    a[k * (k + 1) + i] = 1.0;
  }
  b[k] = 1.0;
  try {
    auto x = solve_dense(a, b, k + 1);
    x.pop_back();
    // Reject near-singular systems: the point must reproduce its own Gram equations.
    for (double w : x)
      if (!std::isfinite(w) || std::abs(w) > 1e8) return std::nullopt;
    return x;
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

inline Vec combine(const std::vector<Vec>& v, const std::vector<double>& w) {
  Vec p(v.front().size());
  for (size_t i = 0; i < v.size(); ++i)
    if (w[i] != 0.0) p += v[i] * w[i];
  return p;
}

// Exact search over supporting faces with at most d + 1 vertices.
inline HullPoint min_norm_enumerate(const std::vector<Vec>& v) {
  const int N = static_cast<int>(v.size()), d = v.front().size();
  HullPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << N); ++mask) {
    std::vector<int> S;
    for (int i = 0; i < N; ++i)
      if (mask & (1u << i)) S.push_back(i);
    if (static_cast<int>(S.size()) > d + 1) continue;
    auto w = affine_min_norm(v, S);
    if (!w) continue;
    bool inside = true;
    for (double x : *w) inside = inside && x >= -1e-14;
    if (!inside) continue;
    std::vector<double> full(N, 0.0);
    double s = 0.0;
    for (size_t k = 0; k < S.size(); ++k) s += (full[S[k]] = std::max(0.0, (*w)[k]));
    for (double& x : full) x /= s;
    const Vec p = combine(v, full);
    if (p.norm() < best.distance) best = {full, p, p.norm()};
  }
  return best;
}

// Wolfe's minimum-norm-point iteration for larger vertex sets.
inline HullPoint min_norm_wolfe(const std::vector<Vec>& v) {
  const int N = static_cast<int>(v.size());
  double vmax = 0.0;
  int start = 0;
  for (int i = 0; i < N; ++i) {
    vmax = std::max(vmax, v[i].norm());
    if (v[i].norm() < v[start].norm()) start = i;
  }
  std::vector<int> S{start};
  std::vector<double> lam{1.0};
  Vec x = v[start];
  for (int major = 0; major < 100 * N; ++major) {
    int j = 0;
    for (int i = 1; i < N; ++i)
      if (x.dot(v[i]) < x.dot(v[j])) j = i;
    if (x.dot(x) - x.dot(v[j]) <= 1e-15 * vmax * vmax || std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    lam.push_back(0.0);
    for (int minor = 0; minor < N + 2; ++minor) {
      auto alpha = affine_min_norm(v, S);
      if (!alpha) break;
      bool positive = true;
      for (double a : *alpha) positive = positive && a > 1e-14;
      if (positive) {
        lam = *alpha;
        break;
      }
      double theta = 1.0;
      for (size_t k = 0; k < S.size(); ++k)
        if ((*alpha)[k] <= 1e-14) theta = std::min(theta, lam[k] / (lam[k] - (*alpha)[k]));
      for (size_t k = 0; k < S.size(); ++k) lam[k] += theta * ((*alpha)[k] - lam[k]);
      std::vector<int> S2;
      std::vector<double> l2;
      for (size_t k = 0; k < S.size(); ++k)
        if (lam[k] > 1e-14) {
          S2.push_back(S[k]);
          l2.push_back(lam[k]);
        }
      S.swap(S2);
      lam.swap(l2);
    }
    std::vector<double> full(N, 0.0);
    double s = 0.0;
    for (size_t k = 0; k < S.size(); ++k) s += (full[S[k]] = lam[k]);
    for (double& w : full) w /= s;
    x = combine(v, full);
  }
  std::vector<double> full(N, 0.0);
  double s = 0.0;
  for (size_t k = 0; k < S.size(); ++k) s += (full[S[k]] = lam[k]);
  for (double& w : full) w /= s;
  const Vec p = combine(v, full);
  return {full, p, p.norm()};
}

}  // namespace detail

// Minimum-norm point of conv{v_i}.
inline HullPoint min_norm_in_hull(const std::vector<Vec>& v) {
  require(!v.empty(), "hull needs at least one vertex");
  for (const auto& x : v) require(x.size() == v.front().size() && x.finite(), "hull vertices must share a dimension");
  if (v.size() <= 12) return detail::min_norm_enumerate(v);
  return detail::min_norm_wolfe(v);
}

struct StationaryWitness {
  bool found = false;
  std::vector<double> weights;  // when found
  double residual = 0.0;        // |sum w_i f_i(x)|
  Vec separator;                // when not found: <separator, f_i(x)> >= margin for all i
  double margin = 0.0;
};

// Weights w with sum w_i f_i(x) = 0 up to tol, or a separating functional.
inline StationaryWitness stationary_witness(const SwitchedSystem& sys, const Vec& x, double tol = 1e-9) {
  require(x.size() == sys.dim(), "state has the wrong dimension");
  if (!(x.norm() > 0.0)) throw InvalidArgument("stationary witness needs a nonzero state");
  const int N = sys.count();
  std::vector<Vec> v;
  for (int i = 0; i < N; ++i) {
    std::vector<double> e(N, 0.0);
    e[i] = 1.0;
    v.push_back(sys.eval(e, x));
  }
  const HullPoint h = min_norm_in_hull(v);
  StationaryWitness out;
  out.residual = h.distance;
  if (h.distance <= tol) {
    out.found = true;
    out.weights = h.weights;
    return out;
  }
  // The minimum-norm point p satisfies <p, v_i> >= |p|^2 on every vertex.
  out.separator = h.point * (1.0 / h.distance);
  out.margin = std::numeric_limits<double>::infinity();
  for (const auto& vi : v) out.margin = std::min(out.margin, out.separator.dot(vi));
  return out;
}

// ---------------------------------------------------------------------------
// Stereographic charts of S^2
// ---------------------------------------------------------------------------

// Stereographic projection from a pole p on S^2 onto the plane through the
// origin orthogonal to p.
struct StereoChart {
  Vec pole, e1, e2;

  explicit StereoChart(const Vec& p) : pole(p.normalized()) {
    require(p.size() == 3, "stereographic charts live on S^2");
    // Any vector not parallel to the pole seeds the basis.
    Vec seed = std::abs(pole[0]) < 0.9 ? Vec{1, 0, 0} : Vec{0, 1, 0};
    e1 = (seed - pole * seed.dot(pole)).normalized();
    e2 = Vec{pole[1] * e1[2] - pole[2] * e1[1], pole[2] * e1[0] - pole[0] * e1[2], pole[0] * e1[1] - pole[1] * e1[0]};
  }

  Point2 operator()(const Vec& q) const {
    const double den = 1.0 - q.dot(pole);
    require(den > 1e-300, "point coincides with the projection pole");
    return {q.dot(e1) / den, q.dot(e2) / den};
  }

  // Image of the closed cap of angular radius rho about c; the cap must
  // not contain the pole.
  Disc cap(const Vec& c_in, double rho) const {
    const Vec c = c_in.normalized();
    require(sphere_distance(c, pole) > rho, "cap contains the projection pole");
    Vec u = pole - c * pole.dot(c);
    if (u.norm() < 1e-12) u = e1 - c * e1.dot(c);
    u = u.normalized();
    const Point2 a = (*this)(c * std::cos(rho) + u * std::sin(rho));
    const Point2 b = (*this)(c * std::cos(rho) - u * std::sin(rho));
    return {(a + b) * 0.5, 0.5 * distance(a, b)};
  }
};

// ---------------------------------------------------------------------------
// Reversed-arc search
// ---------------------------------------------------------------------------

enum class ReversedStatus { Found, SelfIntersection, NoRecurrence, NoReturn };

inline const char* to_string(ReversedStatus s) {
  switch (s) {
    case ReversedStatus::Found: return "found";
    case ReversedStatus::SelfIntersection: return "self-intersection";
    case ReversedStatus::NoRecurrence: return "no-recurrence";
    case ReversedStatus::NoReturn: return "no-return";
  }
  return "?";
}

struct ReversedArcOptions {
  double delta = 0.3;   // radius of the ball about x1 = phi(T)
  double eps = 0.05;    // endpoint tolerance; clamped to keep the discs disjoint
  double base = 0.0;    // T
  double x2_fraction = 0.5;  // x2 is the first sample at distance x2_fraction * delta
};

struct ReversedArcPair {
  ReversedStatus status = ReversedStatus::NoRecurrence;
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  Vec x1, x2;
  double delta = 0, eps = 0, kappa = 0;
  double tau = 0;                // recurrence lag used for the second forward transit
  double self_a = 0, self_b = 0;  // times of a detected self-approach
  bool disjoint = false;          // [t3, t4] disjoint from [t1, t2]
  std::string note;
};

namespace detail {

// Embeds S^1 samples into S^2 at the equator.
inline Vec to_s2(const Vec& p) {
  if (p.size() == 3) return p;
  require(p.size() == 2, "reversed-arc search needs points on S^1 or S^2");
  return Vec{p[0], p[1], 0.0};
}

// First pair of non-adjacent polyline segments that meet, with a uniform grid.
inline std::optional<std::pair<size_t, size_t>> first_crossing(const std::vector<Point2>& v, bool closed) {
  const size_t n = v.size();
  const size_t m = closed ? n : n - 1;
  if (m < 2) return std::nullopt;
  double x0 = v[0].x, x1 = x0, y0 = v[0].y, y1 = y0, len = 0.0;
  for (size_t i = 0; i < n; ++i) {
    x0 = std::min(x0, v[i].x);
    x1 = std::max(x1, v[i].x);
    y0 = std::min(y0, v[i].y);
    y1 = std::max(y1, v[i].y);
  }
  for (size_t i = 0; i < m; ++i) len = std::max(len, distance(v[i], v[(i + 1) % n]));
  const double cell = std::max({len, (x1 - x0) / 512.0, (y1 - y0) / 512.0, 1e-300});
  std::map<std::pair<long, long>, std::vector<size_t>> grid;
  auto key = [&](double x, double y) {
    return std::pair<long, long>{static_cast<long>(std::floor((x - x0) / cell)),
                                 static_cast<long>(std::floor((y - y0) / cell))};
  };
  for (size_t i = 0; i < m; ++i) {
    const Point2 &a = v[i], &b = v[(i + 1) % n];
    auto k0 = key(std::min(a.x, b.x), std::min(a.y, b.y)), k1 = key(std::max(a.x, b.x), std::max(a.y, b.y));
    for (long gx = k0.first; gx <= k1.first; ++gx)
      for (long gy = k0.second; gy <= k1.second; ++gy) grid[{gx, gy}].push_back(i);
  }
  std::optional<std::pair<size_t, size_t>> best;
  for (const auto& [k, segs] : grid) {
    (void)k;
    for (size_t p = 0; p < segs.size(); ++p)
      for (size_t q = p + 1; q < segs.size(); ++q) {
        size_t i = std::min(segs[p], segs[q]), j = std::max(segs[p], segs[q]);
        if (j == i + 1 || (closed && i == 0 && j == m - 1)) continue;
        if (segment_relation(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) == SegmentRelation::Disjoint) continue;
        if (!best || i < best->first || (i == best->first && j < best->second)) best = {i, j};
      }
  }
  return best;
}

}  // namespace detail

// Two parameter intervals [t1,t2], [t3,t4] whose endpoint images approach
// (x1, x2) and then (x2, x1), all inside the delta-ball about x1 = phi(T).
// The curve between the ball visits is closed along a small circle about x1,
// punctured at a point of the ball away from the curve, projected to the
// plane and handed to the three-discs engine.
inline ReversedArcPair reversed_arc_search(const SphereTrajectory& phi_in, const ReversedArcOptions& opt) {
  require(opt.delta > 0 && opt.delta < M_PI / 2, "delta must lie in (0, pi/2)");
  require(opt.eps > 0, "eps must be positive");
  require(opt.x2_fraction > 0 && opt.x2_fraction < 1, "x2 fraction must lie in (0, 1)");
  require(phi_in.size() >= 4, "trajectory is too short");
  std::vector<Vec> P;
  for (const auto& p : phi_in.p) P.push_back(detail::to_s2(p));
  const size_t n = P.size();
  const double h = phi_in.step;
  auto time_of = [&](double idx) { return phi_in.t.front() + idx * h; };
  ReversedArcPair out;
  const size_t i0 = static_cast<size_t>(std::llround((opt.base - phi_in.t.front()) / h));
  require(i0 + 2 < n, "base time outside the trajectory");
  const Vec x1 = P[i0];
  out.x1 = x1;
  out.delta = opt.delta;
  auto dist1 = [&](size_t k) { return sphere_distance(P[k], x1); };
  // x2: first sample at distance x2_fraction * delta, with the arc inside the ball.
  size_t i3 = i0;
  while (i3 + 1 < n && dist1(i3) < opt.x2_fraction * opt.delta) ++i3;
  if (dist1(i3) < opt.x2_fraction * opt.delta) {
    out.note = "trajectory never leaves the inner ball";
    return out;
  }
  for (size_t k = i0; k <= i3; ++k)
    if (dist1(k) >= opt.delta) {
      out.note = "trajectory jumps out of the ball between samples";
      return out;
    }
  const Vec x2 = P[i3];
  out.x2 = x2;
  const double d12 = sphere_distance(x1, x2);
  const double eps = std::min({opt.eps, 0.45 * d12, 0.45 * (opt.delta - d12)});
  out.eps = eps;
  // T2: last sample of [T, T3] on or inside the closed eps-ball about x1.
  size_t i2 = i0;
  for (size_t k = i0; k <= i3; ++k)
    if (dist1(k) <= eps) i2 = k;
  // Recurrence: the shifted copy of [T, T3] stays eps-close and inside the ball.
  const size_t len = i3 - i0;
  size_t lag = 0;
  for (size_t l = len + 1; i0 + l + len < n; ++l) {
    bool ok = true;
    for (size_t k = 0; k <= len && ok; ++k)
      ok = sphere_distance(P[i0 + k], P[i0 + l + k]) < eps && dist1(i0 + l + k) < opt.delta;
    if (ok) {
      lag = l;
      break;
    }
  }
  if (lag == 0) {
    out.note = "no return of the initial arc within the horizon";
    return out;
  }
  out.tau = lag * h;
  const size_t i4 = i0 + lag, i5 = i3 + lag;
  // kappa: the closed kappa-ball misses phi([T2, T5]).
  double dmin = std::numeric_limits<double>::infinity();
  size_t kmin = i2;
  for (size_t k = i2; k <= i5; ++k)
    if (dist1(k) < dmin) {
      dmin = dist1(k);
      kmin = k;
    }
  const double kappa = 0.5 * std::min(eps, dmin);
  out.kappa = kappa;
  // A return closer than one sample spacing is a return to the base point.
  double spacing = 0.0;
  for (size_t k = i2; k < i5; ++k) spacing = std::max(spacing, sphere_distance(P[k], P[k + 1]));
  if (!(kappa > 1e-12) || dmin <= spacing) {
    out.status = ReversedStatus::SelfIntersection;
    out.self_a = time_of(static_cast<double>(i0));
    out.self_b = time_of(static_cast<double>(kmin));
    out.note = "trajectory returns to its base point";
    return out;
  }
  // T1 and T6: the last kappa-ball sample before T2 and the first after T5.
  size_t ia = i0;
  for (size_t k = i0; k <= i2; ++k)
    if (dist1(k) <= kappa) ia = k;
  size_t ib = 0;
  for (size_t k = i5 + 1; k < n; ++k)
    if (dist1(k) < kappa) {
      ib = k;
      break;
    }
  if (ib == 0) {
    out.status = ReversedStatus::NoReturn;
    out.note = "no return to the kappa-ball after the second transit";
    return out;
  }
  // Puncture: a point of the ball far from the curve and from D1, D2.
  Vec pole;
  double best = -1.0;
  {
    StereoChart local(x1 * -1.0);
    const Point2 c0 = local(x1);
    (void)c0;
    Vec u1 = local.e1, u2 = local.e2;
    for (int ri = 1; ri <= 6; ++ri)
      for (int ai = 0; ai < 48; ++ai) {
        const double rho = opt.delta * (0.3 + 0.6 * ri / 6.0), th = 2 * M_PI * ai / 48;
        Vec q = x1 * std::cos(rho) + (u1 * std::cos(th) + u2 * std::sin(th)) * std::sin(rho);
        if (sphere_distance(q, x2) <= 2 * eps) continue;
        double m = std::numeric_limits<double>::infinity();
        for (size_t k = ia; k <= ib; ++k) m = std::min(m, sphere_distance(q, P[k]));
        if (m > best) {
          best = m;
          pole = q;
        }
      }
  }
  if (!(best > 0)) {
    out.status = ReversedStatus::SelfIntersection;
    out.note = "no puncture point off the curve";
    return out;
  }
  StereoChart chart(pole);
  ThreeDiscsInput in;
  in.d1 = chart.cap(x1, eps);
  in.d2 = chart.cap(x2, eps);
  in.d3 = chart.cap(x1 * -1.0, M_PI - opt.delta);
  const Disc dk = chart.cap(x1, kappa);
  std::vector<Point2> pts;
  for (size_t k = ia; k <= ib; ++k) pts.push_back(chart(P[k]));
  // Non-injectivity of the open curve short-circuits the disc machinery.
  if (auto c = detail::first_crossing(pts, false)) {
    out.status = ReversedStatus::SelfIntersection;
    out.self_a = time_of(static_cast<double>(ia + c->first));
    out.self_b = time_of(static_cast<double>(ia + c->second));
    out.note = "sampled trajectory crosses itself";
    return out;
  }
  // Closing path inside the kappa-disc: radially in, around, radially out.
  const Point2 pa = pts.back(), pb = pts.front();
  auto seg_dist = [&](const Point2& a, const Point2& b) {
    const Point2 d = b - a;
    const double t = std::clamp(dot(dk.center - a, d) / dot(d, d), 0.0, 1.0);
    return distance(a + d * t, dk.center);
  };
  const double r = 0.5 * std::min(seg_dist(pts[pts.size() - 2], pa), seg_dist(pb, pts[1]));
  const double tha = std::atan2(pa.y - dk.center.y, pa.x - dk.center.x);
  double thb = std::atan2(pb.y - dk.center.y, pb.x - dk.center.x);
  if (thb <= tha) thb += 2 * M_PI;
  const int arcs = std::max(8, static_cast<int>(std::ceil((thb - tha) / (2 * M_PI / 256))));
  const size_t open_count = pts.size();
  for (int k = 0; k <= arcs; ++k) {
    const double th = tha + (thb - tha) * k / arcs;
    pts.push_back(dk.center + Point2{std::cos(th), std::sin(th)} * r);
  }
  auto dedup = [](std::vector<Point2>& v) {
    std::vector<Point2> w;
    for (const auto& p : v)
      if (w.empty() || !(p == w.back())) w.push_back(p);
    while (w.size() > 1 && w.front() == w.back()) w.pop_back();
    v.swap(w);
  };
  dedup(pts);
  if (auto c = detail::first_crossing(pts, true)) {
    out.status = ReversedStatus::SelfIntersection;
    out.self_a = time_of(static_cast<double>(ia + std::min(c->first, open_count - 1)));
    out.self_b = time_of(static_cast<double>(ia + std::min(c->second, open_count - 1)));
    out.note = "closing path meets the curve";
    return out;
  }
  in.psi = PolyCurve(pts);
  in.fwd1 = {0.0, static_cast<double>(i3 - ia)};
  in.fwd2 = {static_cast<double>(i4 - ia), static_cast<double>(i5 - ia)};
  const ReversedArc rev = three_discs_reversed_arc(in);
  double c = rev.interval.a, d = rev.interval.b;
  const double open_end = static_cast<double>(ib - ia);
  // The closing path lies in D1; an interval ending there is cut at its entry.
  if (c > open_end) throw Falsification("reverse transit starts on the closing path");
  if (d > open_end || d < c) d = open_end;
  out.status = ReversedStatus::Found;
  out.t1 = time_of(static_cast<double>(i0));
  out.t2 = time_of(static_cast<double>(i3));
  out.t3 = time_of(static_cast<double>(ia) + c);
  out.t4 = time_of(static_cast<double>(ia) + d);
  out.disjoint = out.t3 > out.t2 || out.t4 < out.t1;
  return out;
}

struct ReversedArcCheck {
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;  // d(phi(t1),x1), d(phi(t2),x2), d(phi(t3),x2), d(phi(t4),x1)
  double excursion = 0;                    // max over both intervals of d(phi, x1)
  bool pass(double eps, double delta) const {
    return d1 < eps && d2 < eps && d3 < eps && d4 < eps && excursion < delta;
  }
};

// Re-measures the five constraints by interpolating the samples.
inline ReversedArcCheck check_reversed_arc(const SphereTrajectory& phi, const ReversedArcPair& r) {
  auto at = [&](double t) { return detail::to_s2(phi.at(t)); };
  ReversedArcCheck c;
  c.d1 = sphere_distance(at(r.t1), r.x1);
  c.d2 = sphere_distance(at(r.t2), r.x2);
  c.d3 = sphere_distance(at(r.t3), r.x2);
  c.d4 = sphere_distance(at(r.t4), r.x1);
  for (auto [a, b] : {std::pair{r.t1, r.t2}, std::pair{r.t3, r.t4}}) {
    const int steps = std::max(2, static_cast<int>(std::ceil((b - a) / (0.25 * phi.step))));
    for (int k = 0; k <= steps; ++k) c.excursion = std::max(c.excursion, sphere_distance(at(a + (b - a) * k / steps), r.x1));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Closing periodic orbits
// ---------------------------------------------------------------------------

enum class WitnessKind { Stationary, Periodic };

struct PeriodicWitness {
  WitnessKind kind = WitnessKind::Periodic;
  Vec point;
  SwitchingLaw law;
  double period = 0.0;
  double closure_gap = std::numeric_limits<double>::infinity();
  double monodromy_radius = std::numeric_limits<double>::quiet_NaN();  // linear periodic witnesses
  double phase = 0.0;          // Hopf closure: x(period) = e^{i phase} x(0)
  bool converged = false;
  int iterations = 0;
  std::string source;
};

struct CloseOptions {
  double accept_tol = 1e-6;
  double collapse_period = 1e-3;
  int max_iterations = 200;
  bool phase_free = false;    // close up to a complex phase (Hopf chart)
  double stationary_tol = 1e-6;
};

namespace detail {

// x in C^2 = R^4 multiplied by e^{i theta}.
inline Vec rotate_phase(const Vec& x, double th) {
  const double c = std::cos(th), s = std::sin(th);
  return Vec{c * x[0] - s * x[1], s * x[0] + c * x[1], c * x[2] - s * x[3], s * x[2] + c * x[3]};
}

inline Vec end_state(const SwitchedSystem& sys, const std::vector<Segment>& segs, const Vec& x0) {
  SwitchingLaw law(segs, false);
  return propagate(sys, law, x0, 0.0, law.total_duration());
}

inline double relative_gap(const Vec& end, const Vec& x0, bool phase_free, double* phase) {
  if (!phase_free) return (end - x0).norm() / x0.norm();
  // Optimal phase aligns end with e^{i th} x0.
  const auto z = complexify(x0), y = complexify(end);
  const cplx ip = std::conj(z[0]) * y[0] + std::conj(z[1]) * y[1];
  const double th = std::arg(ip);
  if (phase) *phase = th;
  return (end - rotate_phase(x0, th)).norm() / x0.norm();
}

}  // namespace detail

// Shooting refinement: segment durations (on a log scale) and the start state
// are moved by Levenberg-Marquardt until x(period) returns to x(0).
inline PeriodicWitness close_law(const SwitchedSystem& sys, const SwitchingLaw& prefix, const Vec& x_start,
                                 const CloseOptions& opt = {}) {
  require(x_start.size() == sys.dim() && x_start.norm() > 0, "start state must be nonzero");
  require(!opt.phase_free || sys.dim() == 4, "phase closure needs a state in C^2");
  SwitchingLaw base = prefix.compacted();
  std::vector<Segment> segs = base.segments();
  const int K = static_cast<int>(segs.size()), d = sys.dim();
  const Vec xref = x_start;
  const double sref = xref.norm();
  const int P = opt.phase_free ? 1 : 0;
  const int nu = K + d + P, nr = d + 1;
  // Unknowns: log durations, start state, optional phase.
  std::vector<double> u(nu);
  for (int k = 0; k < K; ++k) u[k] = std::log(segs[k].duration);
  for (int i = 0; i < d; ++i) u[K + i] = xref[i] / sref;
  if (P) {
    double th = 0.0;
    detail::relative_gap(detail::end_state(sys, segs, xref), xref, true, &th);
    u[K + d] = th;
  }
  auto unpack = [&](const std::vector<double>& v, std::vector<Segment>& s, Vec& x0, double& th) {
    s = segs;
    for (int k = 0; k < K; ++k) s[k].duration = std::exp(v[k]);
    x0 = Vec(d);
    for (int i = 0; i < d; ++i) x0[i] = v[K + i];
    th = P ? v[K + d] : 0.0;
  };
  auto residual = [&](const std::vector<double>& v) {
    std::vector<Segment> s;
    Vec x0;
    double th;
    unpack(v, s, x0, th);
    std::vector<double> r(nr);
    Vec target = P ? detail::rotate_phase(x0, th) : x0;
    Vec e;
    try {
      e = detail::end_state(sys, s, x0);
    } catch (const NumericalBlowup&) {
      return std::vector<double>(nr, 1e150);
    }
    for (int i = 0; i < d; ++i) r[i] = e[i] - target[i];
    // Keep the start on the reference hyperplane through x_start / |x_start|.
    double a = 0.0;
    for (int i = 0; i < d; ++i) a += x0[i] * xref[i] / sref;
    r[d] = a - 1.0;
    return r;
  };
  auto sq = [](const std::vector<double>& r) {
    double s = 0;
    for (double x : r) s += x * x;
    return s;
  };
  // Analytic Jacobian for linear systems; forward differences otherwise.
  auto jacobian = [&](const std::vector<double>& v, const std::vector<double>& r0) {
    std::vector<double> J(nr * nu, 0.0);
    if (sys.is_linear()) {
      std::vector<Segment> s;
      Vec x0;
      double th;
      unpack(v, s, x0, th);
      std::vector<Mat> E(K), G(K);
      for (int k = 0; k < K; ++k) {
        G[k] = sys.generator(s[k].weights);
        E[k] = expm(G[k], s[k].duration);
      }
      std::vector<Mat> before(K + 1, Mat::identity(d)), after(K + 1, Mat::identity(d));
      for (int k = 0; k < K; ++k) before[k + 1] = E[k] * before[k];
      for (int k = K - 1; k >= 0; --k) after[k] = after[k + 1] * E[k];
      for (int k = 0; k < K; ++k) {
        const Vec col = after[k + 1] * (G[k] * (before[k + 1] * x0)) * s[k].duration;
        for (int i = 0; i < d; ++i) J[i * nu + k] = col[i];
      }
      const Mat M = before[K];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) J[i * nu + K + j] = M(i, j);
      if (P) {
        // target = R(th) x0: d/dx0 = R(th), d/dth = i R(th) x0.
        const double c = std::cos(th), sn = std::sin(th);
        Mat R(4);
        R(0, 0) = c, R(0, 1) = -sn, R(1, 0) = sn, R(1, 1) = c;
        R(2, 2) = c, R(2, 3) = -sn, R(3, 2) = sn, R(3, 3) = c;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) J[i * nu + K + j] -= R(i, j);
        const Vec dr = detail::rotate_phase(x0, th + M_PI / 2);
        for (int i = 0; i < d; ++i) J[i * nu + K + d] = -dr[i];
      } else {
        for (int i = 0; i < d; ++i) J[i * nu + K + i] -= 1.0;
      }
      for (int j = 0; j < d; ++j) J[d * nu + K + j] = xref[j] / sref;
      return J;
    }
    for (int j = 0; j < nu; ++j) {
      auto w = v;
      const double hstep = 1e-7 * std::max(1.0, std::abs(v[j]));
      w[j] += hstep;
      auto r1 = residual(w);
      for (int i = 0; i < nr; ++i) J[i * nu + j] = (r1[i] - r0[i]) / hstep;
    }
    return J;
  };
  auto r = residual(u);
  double f = sq(r);
  double mu = 1e-3;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (std::sqrt(f) <= 1e-14) break;
    auto J = jacobian(u, r);
    std::vector<double> A(nu * nu, 0.0), g(nu, 0.0);
    for (int a = 0; a < nu; ++a) {
      for (int i = 0; i < nr; ++i) g[a] -= J[i * nu + a] * r[i];
      for (int b = 0; b < nu; ++b) {
        double s = 0;
        for (int i = 0; i < nr; ++i) s += J[i * nu + a] * J[i * nu + b];
        A[a * nu + b] = s;
      }
    }
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      auto Ad = A;
      for (int a = 0; a < nu; ++a) Ad[a * nu + a] += mu * (1.0 + A[a * nu + a]);
      std::vector<double> step;
      try {
        step = solve_dense(Ad, g, nu);
      } catch (const InvalidArgument&) {
        mu *= 10;
        continue;
      }
      auto un = u;
      for (int a = 0; a < nu; ++a) {
        // Durations change by at most a factor e^{0.5} per step.
        const double cap = a < K ? 0.5 : 1e300;
        un[a] += std::clamp(step[a], -cap, cap);
      }
      auto rn = residual(un);
      const double fn = sq(rn);
      if (fn < f) {
        u = un;
        r = rn;
        const double rel = (f - fn) / f;
        f = fn;
        mu = std::max(mu / 3, 1e-12);
        improved = true;
        if (rel < 1e-12) it = opt.max_iterations;  // stagnation
      } else {
        mu *= 4;
      }
    }
    if (!improved) break;
  }
  std::vector<Segment> s;
  Vec x0;
  double th;
  unpack(u, s, x0, th);
  PeriodicWitness w;
  w.iterations = it;
  w.point = x0;
  w.law = SwitchingLaw(s, true);
  w.period = w.law.total_duration();
  const Vec e = detail::end_state(sys, s, x0);
  w.phase = 0.0;
  w.closure_gap = detail::relative_gap(e, x0, opt.phase_free, &w.phase);
  if (sys.is_linear()) w.monodromy_radius = spectral_radius(monodromy(sys, w.law));
  w.converged = w.closure_gap <= opt.accept_tol;
  // A collapsing loop is replaced by a stationary point when one exists.
  if (w.period < opt.collapse_period) {
    const StationaryWitness st = stationary_witness(sys, x0, opt.stationary_tol * x0.norm());
    if (st.found) {
      PeriodicWitness sw;
      sw.kind = WitnessKind::Stationary;
      sw.point = x0;
      sw.law = SwitchingLaw::constant(st.weights);
      sw.period = 0.0;
      sw.closure_gap = st.residual / x0.norm();
      sw.converged = sw.closure_gap <= opt.accept_tol;
      sw.iterations = it;
      return sw;
    }
  }
  return w;
}

// Law of the trajectory over [t, t + tau] started from x(t).
inline PeriodicWitness close_orbit(const Trajectory& traj, const RecurrenceEvent& e, const CloseOptions& opt = {}) {
  require(e.tau > 0 && e.t + e.tau <= traj.horizon * (1 + 1e-12), "event outside the trajectory");
  const SwitchingLaw piece = traj.law.shifted(e.t).truncated(e.tau);
  PeriodicWitness w = close_law(traj.system, piece, traj.state_at(e.t), opt);
  w.source = "recurrence";
  return w;
}

// Oscillation between x1 and x2: the law on [t1, t2] followed by the law on [t3, t4].
inline PeriodicWitness close_orbit(const Trajectory& traj, const ReversedArcPair& r, const CloseOptions& opt = {}) {
  require(r.status == ReversedStatus::Found || r.status == ReversedStatus::SelfIntersection,
          "reversed-arc search produced no usable pair");
  if (r.status == ReversedStatus::SelfIntersection) {
    RecurrenceEvent e;
    e.t = std::min(r.self_a, r.self_b);
    e.tau = std::abs(r.self_b - r.self_a);
    PeriodicWitness w = close_orbit(traj, e, opt);
    w.source = "self-intersection";
    return w;
  }
  std::vector<Segment> segs = traj.law.shifted(r.t1).truncated(r.t2 - r.t1).segments();
  const auto back = traj.law.shifted(r.t3).truncated(r.t4 - r.t3).segments();
  segs.insert(segs.end(), back.begin(), back.end());
  PeriodicWitness w = close_law(traj.system, SwitchingLaw(segs, false), traj.state_at(r.t1), opt);
  w.source = "reversed arcs";
  return w;
}

// Best witness over the leading events. Candidates are the events with the
// smallest sup-distance plus the best event of each of the shortest return
// lags. Among accepted witnesses the shortest period wins; otherwise the
// smallest gap does.
inline PeriodicWitness close_orbit(const Trajectory& traj, const std::vector<RecurrenceEvent>& events,
                                   const CloseOptions& opt = {}, size_t attempts = 8) {
  require(!events.empty(), "closing an orbit needs at least one recurrence event");
  std::vector<RecurrenceEvent> cand(events.begin(), events.begin() + std::min(attempts, events.size()));
  {
    std::vector<RecurrenceEvent> by_lag = events;
    std::stable_sort(by_lag.begin(), by_lag.end(), [](const RecurrenceEvent& a, const RecurrenceEvent& b) {
      return a.lag < b.lag;
    });
    // Events within two samples of lag form one cluster; keep its best.
    std::vector<RecurrenceEvent> clusters;
    for (const auto& e : by_lag) {
      if (!clusters.empty() && e.lag <= clusters.back().lag + 2) {
        if (e.sup_distance < clusters.back().sup_distance) clusters.back() = e;
        continue;
      }
      if (clusters.size() == attempts) break;
      clusters.push_back(e);
    }
    cand.insert(cand.end(), clusters.begin(), clusters.end());
  }
  PeriodicWitness best;
  bool have = false;
  for (const auto& e : cand) {
    PeriodicWitness w = close_orbit(traj, e, opt);
    bool better;
    if (!have) better = true;
    else if (w.converged != best.converged) better = w.converged;
    else if (w.converged) better = w.period < best.period || (w.period == best.period && w.closure_gap < best.closure_gap);
    else better = w.closure_gap < best.closure_gap;
    if (better) {
      best = std::move(w);
      have = true;
    }
  }
  return best;
}

// Re-integrates the witness over one period; returns the relative gap.
inline double replay_gap(const SwitchedSystem& sys, const PeriodicWitness& w, bool phase_free = false) {
  if (w.kind == WitnessKind::Stationary) return (sys.eval(w.law.segments().front().weights, w.point)).norm() / w.point.norm();
  Trajectory tr = integrate(sys, w.law, w.point, w.period, w.period);
  return detail::relative_gap(tr.samples.back().x, w.point, phase_free, nullptr);
}

// ---------------------------------------------------------------------------
// Extremal trajectories and the end-to-end search
// ---------------------------------------------------------------------------

// Trajectory built by extremal steps of a Barabanov norm approximation.
template <class Norm>
Trajectory extremal_trajectory(const Norm& norm, const SwitchedSystem& sys, const Vec& x0, double step,
                              double horizon) {
  require(step > 0 && horizon >= step, "step and horizon must be positive");
  const long steps = static_cast<long>(std::floor(horizon / step + 1e-9));
  std::vector<Segment> segs;
  Vec x = x0;
  for (long k = 0; k < steps; ++k) {
    auto st = extremal_step(norm, sys, x, step);
    x = st.next;
    if (!segs.empty() && segs.back().weights == st.weights) segs.back().duration += step;
    else segs.push_back({step, st.weights});
  }
  SwitchingLaw law(segs, false);
  return integrate(sys, law, x0, steps * step, step);
}

struct FindPeriodicOptions {
  ProjectionKind projection = ProjectionKind::Real;
  RecurrenceOptions recurrence;
  CloseOptions close;
  double transient = 0.0;   // base times start after the transient
  size_t attempts = 8;
};

struct FindPeriodicResult {
  std::vector<RecurrenceEvent> events;
  PeriodicWitness witness;
  bool found = false;
};

inline FindPeriodicResult find_periodic(const Trajectory& traj, const FindPeriodicOptions& opt) {
  FindPeriodicResult res;
  const SphereTrajectory phi = project_trajectory(traj, opt.projection);
  RecurrenceOptions ro = opt.recurrence;
  ro.t_min = std::max(ro.t_min, opt.transient);
  res.events = detect_recurrence(phi, ro);
  if (res.events.empty()) return res;
  CloseOptions co = opt.close;
  co.phase_free = co.phase_free || opt.projection == ProjectionKind::Hopf;
  res.witness = close_orbit(traj, res.events, co, opt.attempts);
  res.found = res.witness.converged;
  return res;
}

}  // namespace swlab
