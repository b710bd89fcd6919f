#pragma once

// Bounds on the uniform exponential rate
//   Lambda = lim sup (1/t) log sup_u ||Phi_u(t)||
// of a linear switched system. Lower bounds come from periodic vertex
// products (exhaustive over a dwell grid, then locally refined in continuous
// durations). Upper bounds come from Lyapunov-type certificates: optimised
// quadratic norms in any dimension and, for uniformly rotating planar
// systems, an angular Lyapunov function that is exact up to quadrature error.

#include <functional>
#include <limits>
#include <sstream>

#include "optimize.hpp"
#include "trajectory.hpp"

namespace swlab {

struct RateOptions {
  std::vector<double> dwell_grid{0.05, 0.1, 0.2, 0.4, 0.8};
  int depth = 8;
  double target_gap = 1e-3;
  long max_products = 2'000'000;  // node budget of the product enumeration
  int refine_top = 6;             // sequences refined in continuous durations
  bool refine = true;
  bool allow_pruning = true;      // norm pruning when the tree exceeds the budget
};

struct RateBounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  SwitchingLaw lower_witness;       // periodic law attaining `lower`
  std::string lower_method;
  std::string upper_certificate;
  Mat quadratic_form;               // best quadratic certificate Q (x^T Q x)
  double quadratic_upper = std::numeric_limits<double>::infinity();
  std::vector<double> dwell_grid;
  double horizon = 0.0;             // longest product duration explored
  int depth_reached = 0;
  long products_examined = 0;
  bool budget_exhausted = false;
  bool pruning_active = false;
  bool converged = false;

  double gap() const { return upper - lower; }
};

namespace detail {

inline double centering_shift(const std::vector<Mat>& mats) {
  double s = 0.0;
  for (const auto& m : mats) s += m.trace();
  return s / (static_cast<double>(mats.size()) * mats.front().dim());
}

// Induced log-norm of B under x -> ||R x||: lambda_max(sym(R B R^{-1})).
inline double quadratic_lognorm(const Mat& R, const Mat& Rinv, const std::vector<Mat>& Bs) {
  double mu = -std::numeric_limits<double>::infinity();
  for (const auto& B : Bs) mu = std::max(mu, sym_max_eig((R * B * Rinv).sym()));
  return mu;
}

struct QuadraticResult {
  double mu = std::numeric_limits<double>::infinity();
  Mat R;
};

inline Mat upper_from_params(int n, const std::vector<double>& p) {
  Mat R(n);
  size_t k = 0;
  R(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) R(i, i) = std::exp(std::clamp(p[k++], -30.0, 30.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) R(i, j) = p[k++];
  return R;
}

inline std::vector<double> params_from_upper(const Mat& R0) {
  const int n = R0.dim();
  Mat R = R0 * (1.0 / R0(0, 0));
  std::vector<double> p;
  for (int i = 1; i < n; ++i) p.push_back(std::log(R(i, i)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) p.push_back(R(i, j));
  return p;
}

inline QuadraticResult best_quadratic(const std::vector<Mat>& Bs) {
  const int n = Bs.front().dim();
  QuadraticResult best;
  auto consider = [&](const Mat& Q) {
    Mat R;
    try {
      R = cholesky_upper(Q);
    } catch (const InvalidArgument&) {
      return;
    }
    Mat Rinv = inverse(R);
    if (!Rinv.finite()) return;
    const double mu = quadratic_lognorm(R, Rinv, Bs);
    if (mu < best.mu) {
      best.mu = mu;
      best.R = R;
    }
  };
  consider(Mat::identity(n));
  if (n == 1) return best;
  std::vector<Mat> targets = Bs;
  Mat avg(n);
  for (const auto& B : Bs) avg += B * (1.0 / Bs.size());
  targets.push_back(avg);
  double scale = 0.0;
  for (const auto& B : Bs) scale = std::max(scale, B.max_abs());
  scale = std::max(scale, 1e-300);
  for (const auto& M : targets) {
    const double a = spectral_abscissa(M);
    for (double rel : {1.0, 0.3, 0.1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6}) {
      try {
        Mat Q = lyapunov_solve(M.shifted(-(a + rel * scale)), Mat::identity(n));
        Q *= 1.0 / Q.max_abs();
        if (Q.finite()) consider(Q);
      } catch (const InvalidArgument&) {
      }
    }
  }
  // Local search over the Cholesky factor.
  auto objective = [&](const std::vector<double>& p) {
    Mat R = upper_from_params(n, p);
    Mat Rinv = inverse(R);
    if (!Rinv.finite()) return std::numeric_limits<double>::infinity();
    return quadratic_lognorm(R, Rinv, Bs);
  };
  auto res = nelder_mead_restarts(objective, params_from_upper(best.R), 0.2, 4, 3000 * n);
  if (res.f < best.mu) {
    best.mu = res.f;
    best.R = upper_from_params(n, res.x);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Angular Lyapunov function V(x) = log|x| + W(theta) for planar systems in
// which every vertex rotates strictly in the same direction.
// ---------------------------------------------------------------------------

struct PlanarForms {
  // g(theta) = e^T B e, h(theta) = e_perp^T B e for e = (cos, sin).
  double gc2, gcs, gs2, hc2, hcs, hs2;
  double g(double c, double s) const { return gc2 * c * c + gcs * c * s + gs2 * s * s; }
  double h(double c, double s) const { return hc2 * c * c + hcs * c * s + hs2 * s * s; }
};

inline PlanarForms planar_forms(const Mat& B) {
  return {B(0, 0), B(0, 1) + B(1, 0), B(1, 1), B(1, 0), B(1, 1) - B(0, 0), -B(0, 1)};
}

// +1 or -1 when every vertex has angular velocity of that strict sign, else 0.
inline int uniform_rotation_sign(const std::vector<Mat>& Bs) {
  int sign = 0;
  for (const auto& B : Bs) {
    const auto f = planar_forms(B);
    // h is the quadratic form [[hc2, hcs/2], [hcs/2, hs2]].
    const double dt = f.hc2 * f.hs2 - 0.25 * f.hcs * f.hcs;
    if (!(dt > 0.0)) return 0;
    const int s = f.hc2 > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return 0;
    sign = s;
  }
  return sign;
}

inline double gk15(const std::function<double(double)>& f, double a, double b, double* err) {
  static constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                    0.207784955007898467600689403773245, 0.0};
  static constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                   0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * wgk[7], g = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double f1 = f(c - h * xgk[j]), f2 = f(c + h * xgk[j]);
    k += wgk[j] * (f1 + f2);
    if (j % 2 == 1) g += wg[j / 2] * (f1 + f2);
  }
  *err = std::abs((k - g) * h);
  return k * h;
}

// Adaptive Gauss-Kronrod. `budget` counts remaining panels; when it runs out
// the result is unreliable and *budget is left negative.
inline double adaptive_integral(const std::function<double(double)>& f, double a, double b, double tol, long* budget,
                                int depth = 0) {
  double err;
  const double v = gk15(f, a, b, &err);
  if (--*budget < 0) return v;
  if (err <= std::max(tol, 1e-13 * std::abs(v)) || depth >= 40) return v;
  const double m = 0.5 * (a + b);
  return adaptive_integral(f, a, m, tol / 2, budget, depth + 1) + adaptive_integral(f, m, b, tol / 2, budget, depth + 1);
}

// Root mu of F(mu) = int_0^pi max_i (g_i - mu)/|h_i| dtheta, or nan if the
// system is not uniformly rotating.
inline double angular_rate(const std::vector<Mat>& Bs) {
  if (Bs.front().dim() != 2 || uniform_rotation_sign(Bs) == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<PlanarForms> forms;
  double scale = 0.0;
  for (const auto& B : Bs) {
    forms.push_back(planar_forms(B));
    scale = std::max(scale, B.max_abs());
  }
  // Nearly stalled rotation makes the integrand stiff; past the panel budget
  // the certificate is withdrawn rather than trusted.
  long budget = 4'000'000;
  auto F = [&](double mu) {
    auto integrand = [&](double th) {
      const double c = std::cos(th), s = std::sin(th);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& f : forms) best = std::max(best, (f.g(c, s) - mu) / std::abs(f.h(c, s)));
      return best;
    };
    double total = 0.0;
    const int pieces = 64;
    for (int k = 0; k < pieces; ++k)
      total += adaptive_integral(integrand, M_PI * k / pieces, M_PI * (k + 1) / pieces, 1e-15 / pieces, &budget);
    return total;
  };
  double lo = -2.0 * scale - 1.0, hi = 2.0 * scale + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (F(mid) > 0) lo = mid;
    else hi = mid;
    if (budget < 0) return std::numeric_limits<double>::quiet_NaN();
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Periodic product enumeration
// ---------------------------------------------------------------------------

struct ProductSearch {
  const std::vector<Mat>* Bs;
  std::vector<std::vector<Mat>> E;  // E[i][g] = exp(tau_g B_i)
  std::vector<double> taus;
  int N = 0, G = 0, depth = 0;
  long budget = 0, nodes = 0;
  bool exhausted = false;
  int depth_reached = 0;
  // Pruning under a quadratic norm, active only when the tree is too large.
  bool prune = false;
  Mat R, Rinv;
  double prune_eps = 0.0;

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> best_seq;
  std::vector<std::pair<double, std::vector<int>>> top;  // (rate, codes)
  int top_k = 6;

  std::vector<int> seq;

  static bool canonical(const std::vector<int>& s) {
    const size_t k = s.size();
    for (size_t r = 1; r < k; ++r) {
      for (size_t j = 0; j < k; ++j) {
        const int a = s[(j + r) % k], b = s[j];
        if (a < b) return false;
        if (a > b) break;
      }
    }
    return true;
  }

  void record(double rate) {
    if (rate > best) {
      best = rate;
      best_seq = seq;
    }
    if (static_cast<int>(top.size()) < top_k || rate > top.back().first) {
      top.emplace_back(rate, seq);
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (static_cast<int>(top.size()) > top_k) top.pop_back();
    }
  }

  void dfs(const Mat& P, double T, double logscale = 0.0) {
    const int level = static_cast<int>(seq.size());
    if (level >= depth || exhausted) return;
    const int last_i = level > 0 ? seq.back() / G : -1;
    for (int i = 0; i < N; ++i) {
      if (i == last_i) continue;
      if (level > 0 && seq.front() / G > i) continue;  // rotations start at the smallest vertex
      for (int g = 0; g < G; ++g) {
        if (++nodes > budget) {
          exhausted = true;
          return;
        }
        Mat Pn = E[i][g] * P;
        const double Tn = T + taus[g];
        double ls = logscale;
        const double m = Pn.max_abs();
        if (m > 1e100 || m < 1e-100) {
          ls += std::log(m);
          Pn *= 1.0 / m;
        }
        seq.push_back(i * G + g);
        depth_reached = std::max(depth_reached, level + 1);
        const bool closes = level == 0 || (seq.front() / G != i);
        if (closes && canonical(seq)) record((log_spectral_radius(Pn) + ls) / Tn);
        bool descend = true;
        if (prune && level + 1 < depth) {
          const Mat S = R * Pn * Rinv;
          const double nrm2 = sym_max_eig(S.transpose() * S);
          if ((0.5 * std::log(std::max(nrm2, 1e-300)) + ls) / Tn < best + prune_eps) descend = false;
        }
        if (descend && N > 1) dfs(Pn, Tn, ls);
        seq.pop_back();
        if (exhausted) return;
      }
    }
  }
};

inline double sequence_rate(const std::vector<Mat>& Bs, const std::vector<int>& vertices,
                            const std::vector<double>& durations) {
  Mat P = Mat::identity(Bs.front().dim());
  double T = 0.0, logscale = 0.0;
  for (size_t k = 0; k < vertices.size(); ++k) {
    P = expm(Bs[vertices[k]], durations[k]) * P;
    T += durations[k];
    if (!P.finite()) return -std::numeric_limits<double>::infinity();
    const double m = P.max_abs();
    if (!(m > 0.0)) return -std::numeric_limits<double>::infinity();
    logscale += std::log(m);
    P *= 1.0 / m;
  }
  return (log_spectral_radius(P) + logscale) / T;
}

// Maximises the periodic rate of a fixed vertex sequence over its durations.
inline std::pair<double, std::vector<double>> refine_durations(const std::vector<Mat>& Bs,
                                                              const std::vector<int>& vertices,
                                                              std::vector<double> durations) {
  if (vertices.size() < 2) return {sequence_rate(Bs, vertices, durations), durations};
  std::vector<double> s0;
  for (double d : durations) s0.push_back(std::log(d));
  auto obj = [&](const std::vector<double>& s) {
    std::vector<double> d;
    for (double x : s) {
      // Chattering limits are covered by blended constant laws, so very short
      // segments add nothing but rounding noise.
      if (x < std::log(1e-4) || x > std::log(1e2)) return std::numeric_limits<double>::infinity();
      d.push_back(std::exp(x));
    }
    return -sequence_rate(Bs, vertices, d);
  };
  auto res = nelder_mead_restarts(obj, s0, 0.25, 4, 2500 * static_cast<int>(vertices.size()));
  std::vector<double> d;
  for (double x : res.x) d.push_back(std::exp(x));
  return {-res.f, d};
}

// Refinement that also drops segments the optimiser shrank to nothing and
// merges the neighbours they separated, then refines the shorter sequence.
inline std::pair<double, std::vector<double>> refine_and_simplify(const std::vector<Mat>& Bs, std::vector<int>& vertices,
                                                                 std::vector<double> durations) {
  auto best = refine_durations(Bs, vertices, durations);
  for (int round = 0; round < 4; ++round) {
    std::vector<int> v;
    std::vector<double> d;
    double total = 0.0;
    for (double x : best.second) total += x;
    for (size_t k = 0; k < vertices.size(); ++k) {
      if (best.second[k] < std::max(1e-4 * total, 2e-4)) continue;
      if (!v.empty() && v.back() == vertices[k]) d.back() += best.second[k];
      else {
        v.push_back(vertices[k]);
        d.push_back(best.second[k]);
      }
    }
    while (v.size() > 1 && v.front() == v.back()) {
      d.front() += d.back();
      v.pop_back();
      d.pop_back();
    }
    if (v.size() == vertices.size() || v.empty()) break;
    auto cand = refine_durations(Bs, v, d);
    if (cand.first < best.first - 1e-12 * std::max(1.0, std::abs(best.first))) break;
    vertices = v;
    best = cand;
  }
  return best;
}

// Best constant law: maximises the spectral abscissa of sum w_i B_i over the
// simplex (softmax coordinates). This covers chattering limits of the
// periodic products, which fast switching approaches but never reaches.
inline std::pair<double, std::vector<double>> best_blend(const std::vector<Mat>& Bs) {
  const size_t N = Bs.size();
  auto weights = [&](const std::vector<double>& z) {
    std::vector<double> w(N);
    double mx = 0.0;
    for (double x : z) mx = std::max(mx, x);
    double s = std::exp(-mx);
    w[N - 1] = std::exp(-mx);
    for (size_t i = 0; i + 1 < N; ++i) s += (w[i] = std::exp(z[i] - mx));
    double tot = 0.0;
    for (size_t i = 0; i + 1 < N; ++i) tot += (w[i] /= s);
    w[N - 1] = 1.0 - tot;
    return w;
  };
  auto blend = [&](const std::vector<double>& w) {
    Mat M(Bs.front().dim());
    for (size_t i = 0; i < N; ++i) M += Bs[i] * w[i];
    return M;
  };
  auto obj = [&](const std::vector<double>& z) { return -spectral_abscissa(blend(weights(z))); };
  MinResult best;
  best.f = std::numeric_limits<double>::infinity();
  // Starts at the barycentre and near each vertex.
  std::vector<std::vector<double>> starts{std::vector<double>(N - 1, 0.0)};
  for (size_t i = 0; i + 1 < N; ++i) {
    std::vector<double> z(N - 1, -2.0);
    z[i] = 2.0;
    starts.push_back(z);
  }
  starts.push_back(std::vector<double>(N - 1, -2.0));
  for (const auto& z0 : starts) {
    auto r = nelder_mead_restarts(obj, z0, 0.5, 3, 1500 * static_cast<int>(N));
    if (r.f < best.f) best = r;
  }
  return {-best.f, weights(best.x)};
}

// Rounds every entry to a power-of-two grid about 2^-30 of the largest entry.
// All discrete choices of the search run on the rounded matrices, so systems
// that differ only by rounding (for example a system and its spectral shift,
// after centering) make identical choices; reported values are then evaluated
// on the exact matrices, which keeps them rigorous.
inline std::vector<Mat> snap_to_grid(const std::vector<Mat>& Bs) {
  double scale = 0.0;
  for (const auto& B : Bs) scale = std::max(scale, B.max_abs());
  if (!(scale > 0.0)) return Bs;
  const double q = std::ldexp(1.0, std::ilogb(scale) - 30);
  std::vector<Mat> out = Bs;
  for (auto& B : out)
    for (int i = 0; i < B.dim(); ++i)
      for (int j = 0; j < B.dim(); ++j) B(i, j) = std::nearbyint(B(i, j) / q) * q;
  return out;
}

}  // namespace detail

inline RateBounds uniform_rate(const SwitchedSystem& sys, const RateOptions& opt = {}) {
  require(sys.is_linear(), "rate bounds require a linear system");
  require(!opt.dwell_grid.empty() && opt.depth >= 1, "dwell grid and depth must be nonempty");
  for (double t : opt.dwell_grid) require(std::isfinite(t) && t > 0, "dwell times must be positive");
  const int n = sys.dim(), N = sys.count();
  const double c = detail::centering_shift(sys.matrices);
  std::vector<Mat> Bs;
  for (const auto& A : sys.matrices) Bs.push_back(A.shifted(-c));
  const std::vector<Mat> Bq = detail::snap_to_grid(Bs);

  RateBounds rb;
  rb.dwell_grid = opt.dwell_grid;

  // ---- upper bound --------------------------------------------------------
  auto quad = detail::best_quadratic(Bq);
  const Mat Rinv = inverse(quad.R);
  double upper = detail::quadratic_lognorm(quad.R, Rinv, Bs);
  rb.quadratic_upper = upper + c;
  rb.quadratic_form = quad.R.transpose() * quad.R;
  rb.upper_certificate = "quadratic norm";
  const double ang = detail::angular_rate(Bs);
  if (std::isfinite(ang)) {
    double scale = 0.0;
    for (const auto& B : Bs) scale = std::max(scale, B.max_abs());
    const double cert = ang + 1e-10 * std::max(1.0, scale);
    if (cert < upper) {
      upper = cert;
      rb.upper_certificate = "angular Lyapunov function";
    }
  }

  // ---- lower bound --------------------------------------------------------
  // Candidates are chosen on the snapped matrices and valued on the exact ones.
  double lower = -std::numeric_limits<double>::infinity();
  auto offer = [&](double value, SwitchingLaw law, const char* method) {
    if (value > lower) {
      lower = value;
      rb.lower_witness = std::move(law);
      rb.lower_method = method;
    }
  };
  {
    int vbest = 0;
    double abest = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
      const double a = spectral_abscissa(Bq[i]);
      if (a > abest) {
        abest = a;
        vbest = i;
      }
    }
    offer(spectral_abscissa(Bs[vbest]), SwitchingLaw::from_sequence(N, {vbest}, {1.0}, true),
          "vertex spectral abscissa");
  }

  detail::ProductSearch ps;
  ps.Bs = &Bq;
  ps.taus = opt.dwell_grid;
  ps.N = N;
  ps.G = static_cast<int>(opt.dwell_grid.size());
  ps.depth = N == 1 ? 1 : opt.depth;
  ps.budget = opt.max_products;
  ps.top_k = opt.refine_top;
  ps.best = lower;
  for (int i = 0; i < N; ++i) {
    ps.E.emplace_back();
    for (double t : opt.dwell_grid) ps.E.back().push_back(expm(Bq[i], t));
  }
  // Size of the unpruned tree decides whether norm pruning is needed.
  double est = 0.0, layer = N;
  for (int k = 1; k <= ps.depth; ++k) {
    est += layer * std::pow(ps.G, k);
    layer *= std::max(1, N - 1);
  }
  if (opt.allow_pruning && est > static_cast<double>(opt.max_products)) {
    ps.prune = true;
    rb.pruning_active = true;
    ps.R = quad.R;
    ps.Rinv = Rinv;
    ps.prune_eps = 0.25 * opt.target_gap;
  }
  ps.dfs(Mat::identity(n), 0.0);
  rb.products_examined = ps.nodes;
  rb.budget_exhausted = ps.exhausted;
  rb.depth_reached = ps.depth_reached;
  rb.horizon = ps.depth_reached * *std::max_element(opt.dwell_grid.begin(), opt.dwell_grid.end());

  auto decode = [&](const std::vector<int>& codes, std::vector<int>& verts, std::vector<double>& durs) {
    verts.clear();
    durs.clear();
    for (int code : codes) {
      verts.push_back(code / ps.G);
      durs.push_back(opt.dwell_grid[code % ps.G]);
    }
  };
  if (!ps.best_seq.empty()) {
    std::vector<int> v;
    std::vector<double> d;
    decode(ps.best_seq, v, d);
    offer(detail::sequence_rate(Bs, v, d), SwitchingLaw::from_sequence(N, v, d, true),
          "periodic product on the dwell grid");
  }
  if (opt.refine && N > 1) {
    for (const auto& [rate, codes] : ps.top) {
      std::vector<int> v;
      std::vector<double> d;
      decode(codes, v, d);
      if (v.size() < 2) continue;
      auto dur = detail::refine_and_simplify(Bq, v, d).second;
      offer(detail::sequence_rate(Bs, v, dur), SwitchingLaw::from_sequence(N, v, dur, true),
            "periodic product with refined durations");
    }
  }

  if (N > 1) {
    auto w = detail::best_blend(Bq).second;
    Mat M(n);
    for (int i = 0; i < N; ++i) M += Bs[i] * w[i];
    const double a = spectral_abscissa(M);
    // Counts only when it beats the periodic products by more than rounding.
    if (a > lower + 1e-12 * std::max(1.0, std::abs(a)))
      offer(a, SwitchingLaw({Segment{1.0, w}}, true), "constant convex combination");
  }

  if (upper < lower) {
    // Only possible through rounding in an exact certificate; keep the order.
    upper = lower;
  }
  rb.lower = lower + c;
  rb.upper = upper + c;
  rb.converged = rb.upper - rb.lower <= opt.target_gap;
  return rb;
}

// Spectral shift: the system with vertices A_i + lambda I.
inline SwitchedSystem shift_system(const SwitchedSystem& sys, double lambda) { return sys.shifted(lambda); }

// Log spectral radius per unit time of a periodic law.
inline double periodic_rate(const SwitchedSystem& sys, const SwitchingLaw& law) {
  return log_spectral_radius(monodromy(sys, law)) / law.total_duration();
}

struct TuneStep {
  double lambda, lower, upper;
};

struct TuneResult {
  double lambda = 0.0;
  SwitchedSystem system;
  RateBounds bounds;
  std::vector<TuneStep> transcript;
  bool converged = false;
};

// Finds lambda* in [lo, hi] where the uniform rate of family(lambda) crosses
// zero. Certified bisection runs while the bounds separate the sign; inside
// the uncertainty band the refined periodic lower bound is tracked instead.
inline TuneResult boundary_tune(const std::function<SwitchedSystem(double)>& family, double lo, double hi,
                                const RateOptions& opt = {}, double accept_tol = 1e-4) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "bracket must be a finite interval");
  TuneResult out;
  auto eval = [&](double lam) {
    RateBounds b = uniform_rate(family(lam), opt);
    out.transcript.push_back({lam, b.lower, b.upper});
    return b;
  };
  RateBounds blo = eval(lo), bhi = eval(hi);
  const bool lo_pos = blo.lower > 0, lo_neg = blo.upper < 0;
  const bool hi_pos = bhi.lower > 0, hi_neg = bhi.upper < 0;
  require((lo_pos && hi_neg) || (lo_neg && hi_pos), "bracket does not straddle a certified sign change of the rate");
  // `pos_side` is the endpoint with a positive rate.
  double pos = lo_pos ? lo : hi, neg = lo_pos ? hi : lo;
  SwitchingLaw witness = lo_pos ? blo.lower_witness : bhi.lower_witness;
  for (int it = 0; it < 40 && std::abs(pos - neg) > 1e-6 * std::max(1.0, std::abs(pos)); ++it) {
    const double mid = 0.5 * (pos + neg);
    RateBounds b = eval(mid);
    if (b.lower > 0) {
      pos = mid;
      witness = b.lower_witness;
    } else if (b.upper < 0) {
      neg = mid;
    } else {
      witness = b.lower_witness;
      break;
    }
  }
  // Track the zero of the refined witness rate; it is a lower bound whose sign
  // changes exactly where the extremal periodic law switches from decay to growth.
  std::vector<int> verts;
  std::vector<double> durs;
  for (const auto& s : witness.segments()) {
    verts.push_back(static_cast<int>(std::max_element(s.weights.begin(), s.weights.end()) - s.weights.begin()));
    durs.push_back(s.duration);
  }
  const bool bang = verts.size() >= 2;
  auto witness_rate = [&](double lam) {
    SwitchedSystem s = family(lam);
    if (!bang) return uniform_rate(s, opt).lower;
    auto [r, d] = detail::refine_durations(s.matrices, verts, durs);
    durs = d;
    return r;
  };
  double a = pos, b = neg;
  for (int it = 0; it < 80 && std::abs(a - b) > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    if (witness_rate(mid) > 0) a = mid;
    else b = mid;
  }
  out.lambda = 0.5 * (a + b);
  out.system = family(out.lambda);
  out.bounds = uniform_rate(out.system, opt);
  if (bang) {
    // Keep the best witness found while tracking.
    auto law = SwitchingLaw::from_sequence(out.system.count(), verts, durs, true);
    const double r = periodic_rate(out.system, law);
    if (r > out.bounds.lower) {
      out.bounds.lower = r;
      out.bounds.lower_witness = law;
      out.bounds.lower_method = "periodic product with refined durations";
      out.bounds.upper = std::max(out.bounds.upper, r);
    }
  }
  out.transcript.push_back({out.lambda, out.bounds.lower, out.bounds.upper});
  out.converged = std::abs(out.bounds.lower) <= accept_tol && std::abs(out.bounds.upper) <= accept_tol;
  return out;
}

}  // namespace swlab
