#include <catch_amalgamated.hpp>

#include <random>

#include "swlab/stability.hpp"

using namespace swlab;

namespace {

SwitchedSystem tuned_pair() {
  static const double lam = uniform_rate(SwitchedSystem::linear({Mat{{0, 1}, {-1, 0}}, Mat{{0, 2}, {-0.5, 0}}})).lower;
  return SwitchedSystem::linear({Mat{{-lam, 1}, {-1, -lam}}, Mat{{-lam, 2}, {-0.5, -lam}}});
}

Mat rotation3(Vec axis, double th) {
  axis = axis.normalized();
  Mat K{{0, -axis[2], axis[1]}, {axis[2], 0, -axis[0]}, {-axis[1], axis[0], 0}};
  return expm(K, th);
}

// Two rotation-like vertices with different axis ratios in generic planes,
// shifted by the best periodic rate.
SwitchedSystem tuned_3d() {
  static const SwitchedSystem s = [] {
    const Mat A1{{0, 2, 0}, {-0.5, 0, 0}, {0, 0, -1}};
    const Mat R = rotation3(Vec{1, 1, 1}, 0.7);
    auto base = SwitchedSystem::linear({A1, R.transpose() * A1 * R});
    return base.shifted(-uniform_rate(base).lower);
  }();
  return s;
}

// Scaling-and-squaring Taylor exponential of a complex 2x2 matrix.
CMat2 cexpm(const CMat2& T, double t) {
  int sq = 0;
  double nrm = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) nrm = std::max(nrm, std::abs(T(i, j)) * t);
  while (nrm > 0.25) {
    nrm /= 2;
    ++sq;
  }
  const CMat2 A = cplx(t / std::pow(2.0, sq)) * T;
  CMat2 E, term;
  E(0, 0) = E(1, 1) = term(0, 0) = term(1, 1) = 1.0;
  for (int k = 1; k <= 20; ++k) {
    term = cplx(1.0 / k) * (term * A);
    E = E + term;
  }
  for (int k = 0; k < sq; ++k) E = E * E;
  return E;
}

CMat2 random_cmat(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  CMat2 T;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) T(i, j) = cplx(g(rng), g(rng));
  return T;
}

}  // namespace

TEST_CASE("scalar vertices are GUES with the smallest decay", "[stability][classify]") {
  auto c = classify(SwitchedSystem::linear({Mat{{-1.0}}, Mat{{-2.0}}}));
  REQUIRE(c.verdict == Verdict::GUES);
  REQUIRE(c.kappa == Catch::Approx(1.0).margin(1e-9));
  REQUIRE_FALSE(c.witness);
  auto z = classify(SwitchedSystem::linear({Mat{{0.0}}, Mat{{-2.0}}}));
  REQUIRE(z.verdict == Verdict::MarginalLyapunov);
  REQUIRE(z.witness);
  REQUIRE(z.witness->kind == WitnessKind::Stationary);
}

TEST_CASE("a single Hurwitz matrix is GUES", "[stability][classify]") {
  Mat A{{-1, 2, 0}, {0, -1, 1}, {0, 0, -2}};
  auto c = classify(SwitchedSystem::linear({A}));
  REQUIRE(c.verdict == Verdict::GUES);
  REQUIRE(c.kappa == Catch::Approx(-spectral_abscissa(A)).margin(1e-3));
}

TEST_CASE("rotation generator is marginally Lyapunov with a 2 pi orbit", "[stability][classify]") {
  auto c = classify(SwitchedSystem::linear({Mat{{0, -1}, {1, 0}}}));
  REQUIRE(c.verdict == Verdict::MarginalLyapunov);
  REQUIRE(c.witness);
  REQUIRE(c.witness->kind == WitnessKind::Periodic);
  REQUIRE(c.witness->period == Catch::Approx(2 * M_PI).margin(1e-6));
  REQUIRE(c.witness->monodromy_radius == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("growing pairs carry a neutral witness of the shifted system", "[stability][classify]") {
  auto sys = SwitchedSystem::linear({Mat{{0.5, -1}, {1, 0.5}}, Mat{{0, 2}, {-0.5, 0}}});
  auto c = classify(sys);
  REQUIRE(c.verdict == Verdict::ExponentiallyUnstable);
  REQUIRE(c.witness);
  REQUIRE(c.witness_shift == Catch::Approx(c.rate_bounds.lower));
  const auto shifted = sys.shifted(-c.witness_shift);
  REQUIRE(replay_gap(shifted, *c.witness) <= 1e-6);
  // Unshifted, the same law escapes at the rate itself.
  REQUIRE(periodic_rate(sys, c.witness->law) == Catch::Approx(c.rate_bounds.lower).margin(1e-9));
}

TEST_CASE("tuned pair classifies as marginal with a periodic witness", "[stability][classify]") {
  auto c = classify(tuned_pair());
  REQUIRE(c.verdict == Verdict::MarginalLyapunov);
  REQUIRE(c.witness);
  REQUIRE(c.witness->kind == WitnessKind::Periodic);
  REQUIRE(c.witness->closure_gap <= 1e-6);
  REQUIRE(std::abs(c.witness->monodromy_radius - 1.0) <= 1e-4);
}

TEST_CASE("shifting past the upper bound yields GUES", "[stability][classify][property]") {
  std::mt19937_64 rng(601);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<Mat> mats;
    for (int i = 0; i < 2; ++i) {
      Mat m(2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) m(a, b) = g(rng);
      mats.push_back(m);
    }
    auto sys = SwitchedSystem::linear(mats);
    const RateBounds b = uniform_rate(sys);
    auto c = classify(shift_system(sys, -(b.upper + 0.01)));
    REQUIRE(c.verdict == Verdict::GUES);
  }
}

TEST_CASE("marginally unstable systems split into the three block cases", "[stability][classify][cases]") {
  // Case 1: invariant plane carrying rotations, resonant forcing from x3.
  auto c1 = SwitchedSystem::linear({Mat{{0, -1, 1}, {1, 0, 0}, {0, 0, 0}}, Mat{{0, -1, 0}, {1, 0, 0}, {0, 0, 0}}});
  // Case 2: invariant line e1 driven by a rotating plane.
  auto c2 = SwitchedSystem::linear({Mat{{0, 1, 0}, {0, 0, -1}, {0, 1, 0}}, Mat{{0, 0, 0}, {0, 0, -1}, {0, 1, 0}}});
  // Case 3: a common flag (upper triangular after a permutation).
  auto c3 = SwitchedSystem::linear({Mat{{0, 1, 0}, {0, 0, 0}, {0, 0, -1}}, Mat{{-1, 0, 0}, {0, 0, 0}, {0, 1, -1}}});
  const std::pair<SwitchedSystem, CaseTag> cases[] = {{c1, CaseTag::Case1}, {c2, CaseTag::Case2}, {c3, CaseTag::Case3}};
  for (const auto& [sys, tag] : cases) {
    ClassifyOptions o;
    o.cross_polytope_n = 24;
    auto c = classify(sys, o);
    INFO(to_string(tag));
    REQUIRE(c.verdict == Verdict::MarginalUnstable);
    REQUIRE(c.case_tag == tag);
    // Soundness: the reported basis reproduces the block-triangular form.
    REQUIRE(c.block.residual <= 1e-8);
    REQUIRE(c.block.blocks.size() == sys.matrices.size());
    REQUIRE(c.witness);
    REQUIRE(c.witness->kind == WitnessKind::Stationary);
    const Vec r = sys.eval(c.witness->law.segments().front().weights, c.witness->point);
    REQUIRE(r.norm() <= 1e-6);
  }
}

TEST_CASE("Jordan block in the plane is marginally unstable", "[stability][classify][cases]") {
  auto c = classify(SwitchedSystem::linear({Mat{{0, 1}, {0, 0}}}));
  REQUIRE(c.verdict == Verdict::MarginalUnstable);
  REQUIRE(c.case_tag == CaseTag::Case3);
  REQUIRE(c.witness);
  REQUIRE(std::abs(c.witness->point[1]) <= 1e-12);
}

TEST_CASE("common invariant subspaces of structured pairs", "[stability][subspaces]") {
  auto up = common_invariant_subspaces({Mat{{1, 2, 3}, {0, 4, 5}, {0, 0, 6}}, Mat{{-1, 1, 1}, {0, 2, 1}, {0, 0, -3}}});
  bool e1 = false;
  for (const auto& s : up)
    if (s.dim == 1 && std::abs(std::abs(s.basis[0][0]) - 1.0) <= 1e-9) e1 = true;
  REQUIRE(e1);
  for (const auto& s : up) REQUIRE(s.residual <= 1e-8 * 10);
  auto dg = common_invariant_subspaces({Mat{{-1, 0, 0}, {0, -2, 0}, {0, 0, -3}}, Mat{{-3, 0, 0}, {0, -1, 0}, {0, 0, -2}}});
  int lines = 0, planes = 0;
  for (const auto& s : dg) (s.dim == 1 ? lines : planes)++;
  REQUIRE(lines == 3);
  REQUIRE(planes == 3);
  REQUIRE(common_invariant_subspaces({Mat{{0, -1}, {1, 0}}, Mat::identity(2)}).empty());
}

TEST_CASE("random conjugated triangular pairs expose their flag", "[stability][subspaces][property]") {
  std::mt19937_64 rng(603);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat Q = rotation3(Vec{g(rng), g(rng), g(rng)}, g(rng));
    std::vector<Mat> mats;
    for (int i = 0; i < 2; ++i) {
      Mat U(3);
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) U(a, b) = g(rng);
      mats.push_back(Q * U * Q.transpose());
    }
    auto subs = common_invariant_subspaces(mats);
    REQUIRE(block_form(mats, subs).tag == CaseTag::Case3);
    REQUIRE(block_form(mats, subs).residual <= 1e-7);
  }
}

TEST_CASE("tensor counterexample has four 4x4 vertices", "[stability][tensor]") {
  auto ts = tensor_counterexample(tuned_pair());
  REQUIRE(ts.system.dim() == 4);
  REQUIRE(ts.system.count() == 4);
  REQUIRE_THROWS_AS(tensor_counterexample(SwitchedSystem::linear({Mat{{-1, 0}, {0, -1}}, Mat{{-2, 0}, {0, -2}}})),
                    InvalidArgument);
  REQUIRE_THROWS_AS(tensor_counterexample(SwitchedSystem::linear({Mat{{0, -1}, {1, 0}}})), InvalidArgument);
}

TEST_CASE("Kronecker sums shift the abscissa by the scale", "[stability][tensor]") {
  std::mt19937_64 rng(605);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A{{g(rng), g(rng)}, {g(rng), g(rng)}};
    auto ts = tensor_counterexample(SwitchedSystem::linear({A, A}), std::sqrt(2.0), false);
    for (const auto& M : ts.system.matrices)
      REQUIRE(spectral_abscissa(M) == Catch::Approx((1 + std::sqrt(2.0)) * spectral_abscissa(A)).margin(1e-9));
  }
}

TEST_CASE("product trajectories obey the tensor product rule", "[stability][tensor]") {
  auto ts = tensor_counterexample(tuned_pair(), std::sqrt(2.0), false);
  auto u = SwitchingLaw::from_sequence(2, {0, 1, 0}, {0.7, 0.4, 0.9}, true);
  auto v = SwitchingLaw::from_sequence(2, {1, 0}, {0.5, 1.1}, true);
  const Vec x0{1, 0.2}, y0{-0.3, 1};
  auto pt = product_trajectory(ts, u, x0, v, y0, 10.0, 0.05);
  // Finite differences of x(t) (x) y(scale t) against the active 4D vertex.
  const double h = 1e-5;
  for (double t : {0.31, 1.9, 4.4, 7.77}) {
    auto z = [&](double s) {
      const Vec x = integrate(ts.pair, u, x0, s, s).samples.back().x;
      const Vec y = integrate(ts.pair, v, y0, ts.scale * s, ts.scale * s).samples.back().x;
      return kron(x, y);
    };
    const Vec dz = (z(t + h) - z(t - h)) * (1.0 / (2 * h));
    const Mat M = ts.system.generator(pt.law.weights_at(t));
    REQUIRE((dz - M * z(t)).norm() <= 1e-7 * std::max(1.0, dz.norm()));
  }
  // The induced 4D law reproduces the product samples.
  auto tr = integrate(ts.system, pt.law, kron(x0, y0), 10.0, 0.05);
  for (size_t k = 0; k < pt.z.size(); k += 20) REQUIRE((tr.samples[k].x - pt.z[k]).norm() <= 1e-9);
}

TEST_CASE("PAS sampling flags constant laws with a zero eigenvalue", "[stability][pas]") {
  PasSampler ps;
  auto rep = verify_pas(SwitchedSystem::linear({Mat{{0, 1}, {0, -1}}}), ps, 20);
  REQUIRE_FALSE(rep.pas_holds());
  REQUIRE(rep.max_radius == Catch::Approx(1.0).margin(1e-12));
  auto ok = verify_pas(SwitchedSystem::linear({Mat{{-1, 1}, {0, -1}}, Mat{{-2, 0}, {1, -1}}}), ps, 100);
  REQUIRE(ok.pas_holds());
  for (double r : ok.radii) REQUIRE(r < 1.0);
  // Same seed, same report.
  auto again = verify_pas(SwitchedSystem::linear({Mat{{-1, 1}, {0, -1}}, Mat{{-2, 0}, {1, -1}}}), ps, 100);
  REQUIRE(again.radii == ok.radii);
}

TEST_CASE("tensor demo holds PAS while GUES fails", "[stability][tensor][pas]") {
  auto rep = tensor_demo(tuned_pair());
  REQUIRE(rep.pas.trials == 100);
  REQUIRE(rep.pas_holds);
  REQUIRE(rep.pas.max_radius < 1.0);
  REQUIRE(std::abs(rep.fitted_rate) <= 1e-2);
  REQUIRE(rep.norm_ratio <= 10.0);
  REQUIRE(rep.gues_fails);
  REQUIRE(rep.separation());
  REQUIRE(rep.horizon >= 50 * rep.base_period - 1e-9);
}

TEST_CASE("hull determinant search finds singular combinations", "[stability][probe]") {
  auto h = hull_min_det({Mat::identity(3), Mat::identity(3) * -1.0});
  REQUIRE(h.min_abs_det <= 1e-12);
  REQUIRE(h.weights[0] == Catch::Approx(0.5).margin(1e-6));
  // det(w A + (1 - w) B) = (1 + w)(3 - 2w) is concave with its minimum 2 at w = 1.
  auto h2 = hull_min_det({Mat{{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}, Mat{{1, 0, 0}, {0, 1, 0}, {0, 0, 3}}});
  REQUIRE(h2.min_abs_det == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(h2.weights[0] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("probe aborts when the hull is singular", "[stability][probe]") {
  auto sys = SwitchedSystem::linear({Mat{{0, -1, 0}, {1, 0, 0}, {0, 0, 0}}, Mat{{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}}});
  auto rep = non_uniqueness_probe(sys, euclidean_norm(SphereGrid::cross_polytope(3, 8)));
  REQUIRE_FALSE(rep.hypothesis_holds);
  REQUIRE(rep.aborted);
  REQUIRE(rep.branches.empty());
}

TEST_CASE("single nonsingular flow has no branching points", "[stability][probe]") {
  auto sys = SwitchedSystem::linear({Mat{{0, -1, 0}, {1, 0, 0}, {0, 0, -1}}});
  auto n = compute_barabanov(sys, SphereGrid::cross_polytope(3, 16));
  auto rep = non_uniqueness_probe(sys, n);
  REQUIRE(rep.hypothesis_holds);
  REQUIRE(rep.tied_points == 0);
  REQUIRE(rep.branches.empty());
  REQUIRE_THROWS_AS(non_uniqueness_probe(tuned_pair(), euclidean_norm(SphereGrid::circle(32))), InvalidArgument);
}

TEST_CASE("tuned 3D pair has branching extremal trajectories", "[stability][probe]") {
  auto sys = tuned_3d();
  BarabanovOptions o;
  o.dwell_grid = {0.1};
  auto n = compute_barabanov(sys, SphereGrid::cross_polytope(3, 64), o);
  auto rep = non_uniqueness_probe(sys, n);
  REQUIRE(rep.hypothesis_holds);
  REQUIRE(rep.hull.min_abs_det >= 1e-3);
  REQUIRE_FALSE(rep.branches.empty());
  for (const auto& b : rep.branches) {
    REQUIRE(b.separation > 1e-3);
    REQUIRE(b.w_a != b.w_b);
    REQUIRE(n(b.x) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("Hopf lift is a section of the projection", "[stability][complex]") {
  std::mt19937_64 rng(607);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 500; ++k) {
    const Vec q = Vec{g(rng), g(rng), g(rng)}.normalized();
    const Vec z = hopf_lift(q);
    REQUIRE(std::abs(z.norm() - 1.0) <= 1e-14);
    REQUIRE((project(ProjectionKind::Hopf, z) - q).norm() <= 1e-12);
  }
  REQUIRE((project(ProjectionKind::Hopf, hopf_lift(Vec{0, 0, -1})) - Vec{0, 0, -1}).norm() <= 1e-15);
}

TEST_CASE("realification commutes with matrix products and flows", "[stability][complex][property]") {
  std::mt19937_64 rng(609);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 100; ++k) {
    const CMat2 S = random_cmat(rng), T = random_cmat(rng);
    REQUIRE(max_abs_diff(realify(S * T), realify(S) * realify(T)) <= 1e-10 * (1 + realify(S * T).max_abs()));
    REQUIRE(max_abs_diff(realify(S + T), realify(S) + realify(T)) <= 1e-12);
  }
  for (int k = 0; k < 20; ++k) {
    const CMat2 S = cplx(0.4) * random_cmat(rng), T = cplx(0.4) * random_cmat(rng);
    const std::array<cplx, 2> z0{cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
    auto sys = realify_system({S, T});
    auto law = SwitchingLaw::from_sequence(2, {0, 1, 0}, {0.3, 0.5, 0.2}, false);
    const Vec x = integrate(sys, law, realify(z0), 1.0, 1.0).samples.back().x;
    // Complex integration segment by segment.
    const CMat2 E = cexpm(S, 0.2) * cexpm(T, 0.5) * cexpm(S, 0.3);
    const std::array<cplx, 2> z{E(0, 0) * z0[0] + E(0, 1) * z0[1], E(1, 0) * z0[0] + E(1, 1) * z0[1]};
    REQUIRE((x - realify(z)).norm() <= 1e-9);
  }
}

TEST_CASE("complex diagonal Hurwitz matrix is GUES", "[stability][complex]") {
  CMat2 T;
  T(0, 0) = -1;
  T(1, 1) = cplx(-1, 1);
  auto cc = complex2d_classify({T});
  REQUIRE(cc.base.verdict == Verdict::GUES);
  REQUIRE_FALSE(cc.constant_law_failure);
}

TEST_CASE("imaginary eigenvalue is a constant-law PAS failure", "[stability][complex]") {
  CMat2 T;
  T(0, 0) = cplx(0, 1);
  T(1, 1) = -1;
  auto cc = complex2d_classify({T});
  REQUIRE(cc.constant_law_failure);
  REQUIRE(cc.base.verdict != Verdict::GUES);
  REQUIRE(cc.base.witness);
  REQUIRE(cc.base.witness->closure_gap <= 1e-9);
}

TEST_CASE("boundary-tuned complex pair closes on the Hopf sphere", "[stability][complex]") {
  // Rotation-like vertices, the second conjugated by a diagonal phase and
  // given an imaginary diagonal entry, shifted by the best periodic rate.
  CMat2 T1, T2;
  T1(0, 1) = 1;
  T1(1, 0) = -1;
  T2(0, 1) = 2.0 * std::polar(1.0, -0.8);
  T2(1, 0) = -0.5 * std::polar(1.0, 0.8);
  T2(0, 0) = cplx(0, 0.3);
  REQUIRE(common_complex_lines({T1, T2}).empty());
  const double lam = uniform_rate(realify_system({T1, T2})).lower;
  for (CMat2* T : {&T1, &T2}) {
    (*T)(0, 0) -= lam;
    (*T)(1, 1) -= lam;
  }
  auto cc = complex2d_classify({T1, T2});
  REQUIRE(cc.base.verdict == Verdict::MarginalLyapunov);
  REQUIRE(cc.base.witness);
  REQUIRE(cc.base.witness->kind == WitnessKind::Periodic);
  REQUIRE(std::abs(cc.base.witness->monodromy_radius - 1.0) <= 1e-3);
  const auto shifted = realify_system({T1, T2}).shifted(-cc.base.witness_shift);
  REQUIRE(replay_gap(shifted, *cc.base.witness, true) <= 1e-6);
}
