#pragma once

// Derivative-free minimisation used for local refinement.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace swlab {

struct MinResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
};

// Nelder-Mead simplex search; deterministic for a given start and step.
inline MinResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             double step, int max_evals = 4000, double ftol = 1e-15) {
  const size_t n = x0.size();
  MinResult res;
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.evaluations = 1;
    return res;
  }
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);
  std::vector<size_t> order(n + 1);
  while (evals < max_evals) {
    for (size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    const size_t best = order[0], worst = order[n], second = order[n - 1];
    const double spread = std::abs(vals[worst] - vals[best]);
    double size = 0.0;
    for (size_t i = 0; i <= n; ++i)
      for (size_t k = 0; k < n; ++k) size = std::max(size, std::abs(pts[i][k] - pts[best][k]));
    if (spread <= ftol * (1.0 + std::abs(vals[best])) && size < 1e-10) break;
    if (size < 1e-14) break;
    std::vector<double> centroid(n, 0.0);
    for (size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return x;
    };
    auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }
  size_t b = 0;
  for (size_t i = 1; i <= n; ++i)
    if (vals[i] < vals[b]) b = i;
  res.x = pts[b];
  res.f = vals[b];
  res.evaluations = evals;
  return res;
}

// Repeated Nelder-Mead restarted from the incumbent with a shrinking step.
inline MinResult nelder_mead_restarts(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x0, double step, int restarts, int max_evals = 4000) {
  MinResult best = nelder_mead(f, std::move(x0), step, max_evals);
  for (int r = 1; r < restarts; ++r) {
    MinResult next = nelder_mead(f, best.x, step * std::pow(0.3, r), max_evals);
    next.evaluations += best.evaluations;
    if (next.f <= best.f) best = next;
    else best.evaluations = next.evaluations;
  }
  return best;
}

// Bisection for a monotone predicate: returns the boundary between lo (pred false) and hi (pred true).
template <class Pred>
double bisect_predicate(Pred&& pred, double lo, double hi, int iters = 200, double xtol = 0.0) {
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    if (std::abs(hi - lo) <= xtol) break;
    if (pred(mid)) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace swlab
