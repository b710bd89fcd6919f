// Acceptance run: one PASS/FAIL line per criterion. Tolerances, instance
// counts, seeds and time budgets are pinned below and never read from input.
// Exit status is 0 only if every criterion passes.

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "swlab/stability.hpp"

using namespace swlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double eigen_abscissa(const Mat& A) {
  Eigen::MatrixXd e(A.dim(), A.dim());
  for (int i = 0; i < A.dim(); ++i)
    for (int j = 0; j < A.dim(); ++j) e(i, j) = A(i, j);
  return Eigen::EigenSolver<Eigen::MatrixXd>(e).eigenvalues().real().maxCoeff();
}

Mat random_mat(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0, 1);
  Mat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return m;
}

Mat rotation3(Vec axis, double th) {
  axis = axis.normalized();
  Mat K{{0, -axis[2], axis[1]}, {axis[2], 0, -axis[0]}, {-axis[1], axis[0], 0}};
  return expm(K, th);
}

SwitchedSystem tuned_pair() {
  static const SwitchedSystem s = [] {
    auto base = SwitchedSystem::linear({Mat{{0, 1}, {-1, 0}}, Mat{{0, 2}, {-0.5, 0}}});
    return base.shifted(-uniform_rate(base).lower);
  }();
  return s;
}

SwitchedSystem tuned_3d() {
  const Mat A1{{0, 2, 0}, {-0.5, 0, 0}, {0, 0, -1}};
  const Mat R = rotation3(Vec{1, 1, 1}, 0.7);
  auto base = SwitchedSystem::linear({A1, R.transpose() * A1 * R});
  return base.shifted(-uniform_rate(base).lower);
}

// ---------------------------------------------------------------------------

Outcome ac1_rate_vs_abscissa() {
  constexpr int kInstances = 50;
  constexpr double kTol = 1e-3, kSeconds = 10.0;
  std::mt19937_64 rng(9001);
  Outcome o;
  double worst = 0, slowest = 0;
  for (int k = 0; k < kInstances; ++k) {
    const int d = 2 + k % 2;
    const Mat A = random_mat(rng, d);
    const auto t0 = Clock::now();
    const RateBounds b = uniform_rate(SwitchedSystem::linear({A}));
    const double dt = seconds_since(t0);
    const double a = eigen_abscissa(A);
    const double err = std::max(std::abs(b.lower - a), std::abs(b.upper - a));
    worst = std::max(worst, err);
    slowest = std::max(slowest, dt);
    if (err > kTol) o.fail(fmt("instance %.0f: bounds off the abscissa by %.3g", k, err));
    if (dt > kSeconds) o.fail(fmt("instance %.0f took %.2f s", k, dt));
  }
  if (o.pass) o.detail = fmt("50 instances, max |bound - abscissa| %.3g, slowest %.3f s", worst, slowest);
  return o;
}

Outcome ac2_shift_equivariance() {
  constexpr int kInstances = 20;
  constexpr double kTol = 1e-9;
  std::mt19937_64 rng(9002);
  std::uniform_real_distribution<double> lam(-2.0, 2.0);
  Outcome o;
  double worst = 0;
  for (int k = 0; k < kInstances; ++k) {
    const int d = 2 + k % 2;
    auto sys = SwitchedSystem::linear({random_mat(rng, d), random_mat(rng, d)});
    const double l = lam(rng);
    const RateBounds a = uniform_rate(sys), b = uniform_rate(sys.shifted(l));
    const double err = std::max(std::abs(b.lower - a.lower - l), std::abs(b.upper - a.upper - l));
    worst = std::max(worst, err);
    if (!(err <= kTol)) o.fail(fmt("instance %.0f: shifted bounds off by %.3g", k, err));
  }
  if (o.pass) o.detail = fmt("20 instances, max deviation %.3g", worst);
  return o;
}

Outcome ac3_diagonal_family() {
  constexpr double kTol = 1e-6;
  constexpr int kDepth = 6;
  auto sys = SwitchedSystem::linear({Mat{{-1, 0}, {0, -3}}, Mat{{-3, 0}, {0, -1}}});
  const RateBounds b = uniform_rate(sys);
  Outcome o;
  if (std::abs(b.lower + 1) > kTol || std::abs(b.upper + 1) > kTol)
    o.fail(fmt("bounds [%.9g, %.9g] are not -1", b.lower, b.upper));
  // Oracle: every bang-bang periodic law of length <= 6 over a duration grid.
  const std::vector<double> durs{0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
  double best = -std::numeric_limits<double>::infinity();
  Mat E[2][6];
  for (int i = 0; i < 2; ++i)
    for (size_t j = 0; j < durs.size(); ++j) E[i][j] = expm(sys.matrices[i], durs[j]);
  std::function<void(int, int, Mat, double)> rec = [&](int len, int last, Mat P, double T) {
    if (len > 0) best = std::max(best, log_spectral_radius(P) / T);
    if (len == kDepth) return;
    for (int i = 0; i < 2; ++i) {
      if (len > 0 && i == last) continue;
      for (size_t j = 0; j < durs.size(); ++j) rec(len + 1, i, E[i][j] * P, T + durs[j]);
    }
  };
  rec(0, -1, Mat::identity(2), 0.0);
  if (std::abs(best + 1) > kTol) o.fail(fmt("bang-bang grid oracle gives %.9g", best));
  if (o.pass) o.detail = fmt("bounds [%.12g, %.12g], grid oracle %.12g", b.lower, b.upper, best);
  return o;
}

Outcome ac4_barabanov_tuned() {
  constexpr double kTol = 1e-3, kSeconds = 60.0, kTau = 0.01;
  const auto t0 = Clock::now();
  auto sys = tuned_pair();
  BarabanovOptions bo;
  bo.dwell_grid = {0.005};
  bo.increment_tol = 1e-8;
  const NormApprox n = compute_barabanov(sys, SphereGrid::circle(28800), bo);
  const auto probes = SphereGrid::circle(720).points();
  const BarabanovReport r1 = check_barabanov(n, sys, kTau, kTol, probes);
  const BarabanovReport r2 = check_barabanov(n, sys, kTau / 2, kTol, probes);
  const double dt = seconds_since(t0);
  Outcome o;
  const double ne1 = std::max(r1.nonexpansiveness, 0.0), ex1 = std::max(r1.extremality, 0.0);
  const double ne2 = std::max(r2.nonexpansiveness, 0.0), ex2 = std::max(r2.extremality, 0.0);
  if (ne1 > kTol || ex1 > kTol) o.fail(fmt("residuals %.3g, %.3g exceed 1e-3", ne1, ex1));
  // Halving: each residual at tau/2 is at most half its value at tau (an
  // absolute floor of 1e-12 absorbs rounding at zero residual).
  if (ne2 > 0.5 * ne1 + 1e-12 || ex2 > 0.5 * ex1 + 1e-12)
    o.fail(fmt("residuals at tau/2 (%.3g, %.3g) did not halve from (%.3g, %.3g)", ne2, ex2, ne1, ex1));
  if (dt > kSeconds) o.fail(fmt("took %.1f s", dt));
  if (o.pass)
    o.detail = fmt("720 probes: tau residuals (%.2g, %.2g), tau/2 (%.2g, %.2g)", ne1, ex1, ne2, ex2) +
               fmt(", %.2f s", dt);
  return o;
}

Outcome ac5_periodic_witness() {
  constexpr double kGap = 1e-6, kRadius = 1e-4, kSeconds = 60.0;
  const auto t0 = Clock::now();
  auto sys = tuned_pair();
  const Classification c = classify(sys);
  const double dt = seconds_since(t0);
  Outcome o;
  if (!c.witness || c.witness->kind != WitnessKind::Periodic) {
    o.fail("no periodic witness");
    return o;
  }
  const auto shifted = sys.shifted(-c.witness_shift);
  const double gap = replay_gap(shifted, *c.witness);
  const double rho = spectral_radius(monodromy(shifted, c.witness->law));
  if (!(gap <= kGap)) o.fail(fmt("closure gap %.3g", gap));
  if (!(std::abs(rho - 1) <= kRadius)) o.fail(fmt("monodromy radius %.9g", rho));
  if (dt > kSeconds) o.fail(fmt("took %.1f s", dt));
  if (o.pass) o.detail = fmt("period %.6g, gap %.3g, radius %.12g, %.2f s", c.witness->period, gap, rho, dt);
  return o;
}

Outcome ac6_three_discs() {
  constexpr int kInstances = 500, kCross = 50;
  constexpr double kMillis = 100.0;
  std::mt19937_64 rng(9006);
  Outcome o;
  int found = 0, agreed = 0;
  double slowest = 0;
  for (int k = 0; k < kInstances; ++k) {
    const ThreeDiscsInput in = random_three_discs_instance(rng);
    const auto t0 = Clock::now();
    bool ok = false;
    ReversedArc r;
    try {
      r = three_discs_reversed_arc(in);
      ok = valid_reverse_transit(in, r.interval);
    } catch (const Falsification& e) {
      o.fail(std::string("falsification: ") + e.what());
    }
    const double ms = 1e3 * seconds_since(t0);
    slowest = std::max(slowest, ms);
    if (ok) ++found;
    if (ms > kMillis) o.fail(fmt("instance %.0f took %.1f ms", k, ms));
    if (k % (kInstances / kCross) == 0) {
      try {
        const ReversedArc fw = three_discs_face_walk(in, nullptr, rng());
        if (ok && valid_reverse_transit(in, fw.interval)) ++agreed;
      } catch (const Falsification& e) {
        o.fail(std::string("face walk falsification: ") + e.what());
      }
    }
  }
  if (found != kInstances) o.fail(fmt("reverse transit found in %.0f/500", found));
  if (agreed != kCross) o.fail(fmt("face walk agreed on %.0f/50", agreed));
  if (o.pass) o.detail = fmt("500/500 found, face walk agrees on 50/50, slowest %.2f ms", slowest);
  return o;
}

Outcome ac7_euler() {
  constexpr int kOverlays = 1000;
  std::mt19937_64 rng(9007);
  std::uniform_int_distribution<int> curves(2, 4);
  Outcome o;
  int done = 0, skipped = 0;
  double arcs = 0, faces = 0;
  while (done < kOverlays) {
    std::vector<PolyCurve> c;
    const int m = curves(rng);
    for (int k = 0; k < m; ++k) c.push_back(random_simple_polygon(rng, 5 + k));
    c = perturb_general_position(c, 1e-6, rng());
    const PlaneGraph g = overlay(c);
    // Connectivity of the arc graph.
    std::vector<int> parent(g.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& a : g.arcs) parent[find(a.tail)] = find(a.head);
    int comps = 0;
    for (size_t v = 0; v < parent.size(); ++v) comps += find(static_cast<int>(v)) == static_cast<int>(v);
    if (comps != 1) {
      ++skipped;
      continue;
    }
    const long F = static_cast<long>(g.faces.size()), E = static_cast<long>(g.arcs.size()),
               V = static_cast<long>(g.vertices.size());
    arcs += E;
    faces += F;
    if (F != E - V + 2) o.fail(fmt("overlay %.0f: F = %.0f, E - V + 2 = %.0f", done, F, E - V + 2));
    for (size_t a = 0; a < g.arcs.size(); ++a) {
      const int f1 = left_face(g, static_cast<int>(a), true), f2 = left_face(g, static_cast<int>(a), false);
      if (f1 < 0 || f2 < 0 || f1 == f2) o.fail(fmt("overlay %.0f: arc %.0f does not border two faces", done, a));
    }
    ++done;
  }
  if (o.pass)
    o.detail = fmt("1000 connected overlays exact, mean %.1f arcs and %.1f faces (%.0f disconnected draws skipped)",
                   arcs / kOverlays, faces / kOverlays, skipped);
  return o;
}

Outcome ac8_tensor_demo() {
  constexpr double kSeconds = 300.0;
  const auto t0 = Clock::now();
  TensorDemoOptions opt;  // 100 laws, seed 0, 50 base periods, rate tol 1e-2, ratio 10
  const TensorDemoReport r = tensor_demo(tuned_pair(), opt);
  const double dt = seconds_since(t0);
  Outcome o;
  if (r.pas.trials != 100) o.fail("trial count is not 100");
  if (!r.pas_holds || !(r.pas.max_radius < 1)) o.fail(fmt("PAS fails: max radius %.9g", r.pas.max_radius));
  if (!(std::abs(r.fitted_rate) <= 1e-2)) o.fail(fmt("fitted rate %.3g", r.fitted_rate));
  if (!(r.norm_ratio <= 10)) o.fail(fmt("norm ratio %.3g", r.norm_ratio));
  if (r.horizon < 50 * r.base_period * (1 - 1e-12)) o.fail("product witness shorter than 50 base periods");
  if (!r.separation()) o.fail("report does not show the separation");
  if (dt > kSeconds) o.fail(fmt("took %.1f s", dt));
  if (o.pass)
    o.detail = fmt("max PAS radius %.4f, fitted rate %.2g, norm ratio %.3g", r.pas.max_radius, r.fitted_rate,
                   r.norm_ratio) +
               fmt(", %.2f s", dt);
  return o;
}

double grid_min_norm(const std::vector<Vec>& v, int m) {
  double best = std::numeric_limits<double>::infinity();
  const int N = static_cast<int>(v.size());
  if (N == 1) return v[0].norm();
  for (int a = 0; a <= m; ++a) {
    if (N == 2) {
      best = std::min(best, (v[0] * (a / double(m)) + v[1] * (1 - a / double(m))).norm());
      continue;
    }
    for (int b = 0; a + b <= m; ++b) {
      const double wa = a / double(m), wb = b / double(m);
      best = std::min(best, (v[0] * wa + v[1] * wb + v[2] * (1 - wa - wb)).norm());
    }
  }
  return best;
}

Outcome ac9_stationary() {
  constexpr int kInstances = 200, kMesh = 1000;
  constexpr double kResidual = 1e-6;
  std::mt19937_64 rng(9009);
  std::normal_distribution<double> g(0, 1);
  Outcome o;
  int feasible = 0;
  for (int k = 0; k < kInstances; ++k) {
    const int d = 1 + k % 3, N = 1 + (k / 3) % 3;
    std::vector<Mat> mats;
    for (int i = 0; i < N; ++i) mats.push_back(random_mat(rng, d));
    Vec x(d);
    for (int a = 0; a < d; ++a) x[a] = g(rng);
    // A quarter of the multi-vertex instances are feasible by construction.
    if (k % 4 == 0 && N >= 2) {
      const Vec v0 = mats[0] * x, v1 = mats[1] * x;
      mats[1] = mats[1] - outer(v1 + v0 * 1.5, x) * (1.0 / x.dot(x));
    }
    std::vector<Vec> v;
    double vmax = 0;
    for (const auto& m : mats) {
      v.push_back(m * x);
      vmax = std::max(vmax, v.back().norm());
    }
    const StationaryWitness w = stationary_witness(SwitchedSystem::linear(mats), x, 1e-9 * vmax);
    // The grid oracle's verdict: within twice the mesh of the hull reaching 0.
    const bool oracle = grid_min_norm(v, kMesh) <= 2.0 / kMesh * vmax;
    if (w.found != oracle) o.fail(fmt("instance %.0f: witness says %.0f, oracle %.0f", k, w.found, oracle));
    if (w.found) {
      ++feasible;
      Vec r(d);
      for (int i = 0; i < N; ++i) r += v[i] * w.weights[i];
      if (r.norm() > kResidual) o.fail(fmt("instance %.0f: feasible residual %.3g", k, r.norm()));
    }
  }
  if (o.pass) o.detail = fmt("200 instances agree with the mesh-1e-3 oracle (%.0f feasible)", feasible);
  return o;
}

Outcome ac10_poincare_bendixson() {
  constexpr double kPeriod = 1e-4, kCircle = 1e-3;
  auto sys = SwitchedSystem::linear({Mat{{0, -1, 0}, {1, 0, 0}, {0, 0, -1}}});
  const Vec x0{1.0, 0.5, 1.0};
  const Trajectory tr = integrate(sys, SwitchingLaw::vertex(1, 0, 60.0), x0, 60.0, 0.01);
  FindPeriodicOptions fo;
  fo.transient = 10.0;
  fo.recurrence.min_return = 1.0;
  const FindPeriodicResult r = find_periodic(tr, fo);
  Outcome o;
  if (!r.found || r.witness.kind != WitnessKind::Periodic) {
    o.fail("no periodic witness");
    return o;
  }
  const double perr = std::abs(r.witness.period - 2 * M_PI);
  // Closed form: the orbit through the witness point is its circle of
  // radius |(x, y)| in the plane of constant z; scale so the point is on it.
  double off = 0;
  const Vec p = r.witness.point;
  const Trajectory orbit = integrate(sys, r.witness.law, p, r.witness.period, r.witness.period / 200);
  const double s = 1.0 / std::hypot(p[0], p[1]);
  for (const auto& smp : orbit.samples) {
    const Vec q = smp.x * s;
    off = std::max(off, std::hypot(std::hypot(q[0], q[1]) - 1.0, q[2]));
  }
  if (perr > kPeriod) o.fail(fmt("period %.9g", r.witness.period));
  if (off > kCircle) o.fail(fmt("orbit is %.3g from the z = 0 unit circle", off));
  if (o.pass) o.detail = fmt("period error %.2g, distance to the circle %.2g", perr, off);
  return o;
}

Outcome ac11_hopf() {
  constexpr double kTol = 1e-12, kHom = 1e-10;
  std::mt19937_64 rng(9011);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> th(0, 2 * M_PI), sc(0.01, 100);
  Outcome o;
  double unit = 0, phase = 0, hom = 0;
  for (int k = 0; k < 1000; ++k) {
    const Vec x{g(rng), g(rng), g(rng), g(rng)};
    const Vec q = project(ProjectionKind::Hopf, x);
    unit = std::max(unit, std::abs(q.norm() - 1));
    const cplx e = std::polar(1.0, th(rng));
    const auto z = complexify(x);
    const Vec y = realify(std::array<cplx, 2>{e * z[0], e * z[1]}) * sc(rng);
    phase = std::max(phase, (project(ProjectionKind::Hopf, y) - q).norm());
  }
  for (int k = 0; k < 100; ++k) {
    CMat2 S, T;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        S(i, j) = cplx(g(rng), g(rng));
        T(i, j) = cplx(g(rng), g(rng));
      }
    hom = std::max(hom, max_abs_diff(realify(S * T), realify(S) * realify(T)));
    hom = std::max(hom, max_abs_diff(realify(S + T), realify(S) + realify(T)));
  }
  if (unit > kTol) o.fail(fmt("unit norm error %.3g", unit));
  if (phase > kTol) o.fail(fmt("phase invariance error %.3g", phase));
  if (hom > kHom) o.fail(fmt("realification error %.3g", hom));
  if (o.pass) o.detail = fmt("unit %.2g, phase %.2g, homomorphism %.2g", unit, phase, hom);
  return o;
}

Outcome ac12_non_uniqueness() {
  constexpr double kDet = 1e-3;
  auto sys = tuned_3d();
  BarabanovOptions bo;
  bo.dwell_grid = {0.1};
  bo.increment_tol = 1e-7;
  const NormApprox n = compute_barabanov(sys, SphereGrid::cross_polytope(3, 64), bo);
  ProbeOptions po;
  po.singular_tol = kDet;
  const ProbeReport r = non_uniqueness_probe(sys, n, po);
  Outcome o;
  if (!(r.hull.min_abs_det >= kDet)) o.fail(fmt("hull not certified nonsingular: min |det| %.3g", r.hull.min_abs_det));
  else if (r.branches.empty()) o.fail("falsification: no branching point on a nonsingular hull");
  if (o.pass)
    o.detail = fmt("min |det| %.4g, %.0f branching points of %.0f tied", r.hull.min_abs_det, r.branches.size(),
                   r.tied_points);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"rate vs spectral abscissa", ac1_rate_vs_abscissa},
      {"shift equivariance", ac2_shift_equivariance},
      {"diagonal family", ac3_diagonal_family},
      {"Barabanov verification on the tuned pair", ac4_barabanov_tuned},
      {"periodic witness on the tuned pair", ac5_periodic_witness},
      {"three-discs reverse transit", ac6_three_discs},
      {"Euler formula on overlays", ac7_euler},
      {"dimension-4 separation", ac8_tensor_demo},
      {"stationary-witness feasibility", ac9_stationary},
      {"Poincare-Bendixson smoke test", ac10_poincare_bendixson},
      {"Hopf chart and realification", ac11_hopf},
      {"non-uniqueness probe", ac12_non_uniqueness},
  };
  int failures = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("AC%d %s %s: %s [%.2f s]\n", k, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", k - failures, k);
  return failures == 0 ? 0 : 1;
}
