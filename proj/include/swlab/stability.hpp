#pragma once

// End-to-end classifiers: the d <= 3 pipeline with its triangular case
// analysis, the complex 2D pipeline, the tensor counterexample in dimension
// four, PAS sampling, and the branching probe for extremal trajectories.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "barabanov.hpp"
#include "optimize.hpp"
#include "periodic.hpp"
#include "rate.hpp"

namespace swlab {

enum class Verdict { GUES, MarginalLyapunov, MarginalUnstable, ExponentiallyUnstable };
enum class CaseTag { None, Case1, Case2, Case3 };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::GUES: return "GUES";
    case Verdict::MarginalLyapunov: return "marginal-Lyapunov";
    case Verdict::MarginalUnstable: return "marginal-unstable";
    case Verdict::ExponentiallyUnstable: return "exponentially-unstable";
  }
  return "?";
}

inline const char* to_string(CaseTag c) {
  switch (c) {
    case CaseTag::None: return "none";
    case CaseTag::Case1: return "case1";
    case CaseTag::Case2: return "case2";
    case CaseTag::Case3: return "case3";
  }
  return "?";
}

inline const char* to_string(WitnessKind k) { return k == WitnessKind::Stationary ? "stationary" : "periodic"; }

// ---------------------------------------------------------------------------
// Common invariant subspaces
// ---------------------------------------------------------------------------

struct InvariantSubspace {
  int dim = 0;
  std::vector<Vec> basis;  // orthonormal
  double residual = 0.0;   // max_i |(I - P) A_i P|_F
};

namespace detail {

inline std::vector<Vec> orthonormalize(const std::vector<Vec>& in, double tol = 1e-9) {
  std::vector<Vec> out;
  for (Vec v : in) {
    for (const auto& b : out) v -= b * b.dot(v);
    for (const auto& b : out) v -= b * b.dot(v);
    const double n = v.norm();
    if (n > tol) out.push_back(v * (1.0 / n));
  }
  return out;
}

inline Mat projector(const std::vector<Vec>& basis, int d) {
  Mat P(d);
  for (const auto& b : basis) P += outer(b, b);
  return P;
}

inline double frobenius(const Mat& M) {
  double s = 0.0;
  for (int i = 0; i < M.dim(); ++i)
    for (int j = 0; j < M.dim(); ++j) s += M(i, j) * M(i, j);
  return std::sqrt(s);
}

// Orthonormal completion of a basis to all of R^d.
inline std::vector<Vec> complete_basis(std::vector<Vec> basis, int d) {
  basis = orthonormalize(basis, 1e-6);
  for (int k = 0; k < d && static_cast<int>(basis.size()) < d; ++k) {
    Vec e(d);
    e[k] = 1.0;
    auto ext = basis;
    ext.push_back(e);
    ext = orthonormalize(ext, 1e-6);
    if (ext.size() > basis.size()) basis = ext;
  }
  return basis;
}

inline Vec real_direction(const CVec& v) {
  // Rotate the phase so the largest entry is real, then take the real part.
  size_t k = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[k])) k = i;
  const cplx ph = std::abs(v[k]) > 0 ? std::conj(v[k]) / std::abs(v[k]) : cplx(1.0);
  Vec r(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) r[static_cast<int>(i)] = (v[i] * ph).real();
  return r;
}

}  // namespace detail

inline double invariance_residual(const std::vector<Mat>& mats, const std::vector<Vec>& basis) {
  require(!mats.empty(), "need at least one matrix");
  const int d = mats.front().dim();
  const Mat P = detail::projector(basis, d);
  const Mat Q = Mat::identity(d) - P;
  double r = 0.0;
  for (const auto& A : mats) r = std::max(r, detail::frobenius(Q * A * P));
  return r;
}

// Common invariant subspaces of dimension 1 and 2 (d <= 3; lines only for
// d = 4). Candidates are eigenvectors, eigenplanes, and orthogonal
// complements of left eigenvectors of the vertices and of seeded random
// convex combinations. A candidate is kept when its residual is at most
// tol * max(1, max |A_i|_F).
inline std::vector<InvariantSubspace> common_invariant_subspaces(const std::vector<Mat>& mats, double tol = 1e-8,
                                                                 uint64_t seed = 0) {
  require(!mats.empty(), "need at least one matrix");
  const int d = mats.front().dim();
  require(d <= 4, "invariant subspace search supports d <= 4");
  std::vector<InvariantSubspace> out;
  if (d < 2) return out;
  double scale = 1.0;
  for (const auto& A : mats) scale = std::max(scale, detail::frobenius(A));
  std::vector<Mat> probes = mats;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex(1.0);
  for (int k = 0; k < 8 && mats.size() > 1; ++k) {
    std::vector<double> w(mats.size());
    double s = 0.0;
    for (auto& x : w) s += (x = ex(rng));
    for (auto& x : w) x /= s;
    probes.push_back(convex_combination(mats, w));
  }
  auto consider = [&](std::vector<Vec> basis) {
    basis = detail::orthonormalize(basis);
    const int k = static_cast<int>(basis.size());
    if (k == 0 || k >= d || k > 2) return;
    const double r = invariance_residual(mats, basis);
    if (r > tol * scale) return;
    const Mat P = detail::projector(basis, d);
    for (const auto& s : out)
      if (s.dim == k && max_abs_diff(detail::projector(s.basis, d), P) <= 1e-6) return;
    out.push_back({k, basis, r});
  };
  for (const auto& C : probes) {
    for (int side = 0; side < 2; ++side) {
      const Mat M = side == 0 ? C : C.transpose();
      const Spectrum sp = eig(M);
      const double etol = sp.degenerate ? 1e-5 : 1e-7;
      for (cplx z : sp.values) {
        if (z.imag() < 0) continue;
        for (const auto& v : eigenvectors(M, z, etol)) {
          if (z.imag() == 0.0) {
            const Vec r = detail::real_direction(v);
            if (side == 0) consider({r});
            else if (d == 3) {
              // Invariant plane of C: orthogonal complement of a left eigenvector.
              auto comp = detail::complete_basis({r.normalized()}, d);
              consider({comp[1], comp[2]});
            }
          } else if (side == 0) {
            Vec re(d), im(d);
            for (int i = 0; i < d; ++i) {
              re[i] = v[i].real();
              im[i] = v[i].imag();
            }
            consider({re, im});
          }
        }
      }
    }
    // Planes spanned by pairs of real eigenvectors.
    if (d == 3) {
      std::vector<Vec> lines;
      const Spectrum sp = eig(C);
      for (cplx z : sp.values)
        if (z.imag() == 0.0)
          for (const auto& v : eigenvectors(C, z, sp.degenerate ? 1e-5 : 1e-7)) lines.push_back(detail::real_direction(v));
      for (size_t a = 0; a < lines.size(); ++a)
        for (size_t b = a + 1; b < lines.size(); ++b) consider({lines[a], lines[b]});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.dim < b.dim; });
  return out;
}

// Block-triangular form after the change of basis X = [basis columns].
struct BlockForm {
  CaseTag tag = CaseTag::None;
  Mat X;                     // orthogonal change of basis
  std::vector<Mat> blocks;   // X^T A_i X
  std::vector<int> sizes;    // diagonal block sizes, top to bottom
  double residual = 0.0;     // largest entry below the block diagonal
};

// Invariant plane => case1 (2 + 1 blocks); invariant line => case2 (1 + 2);
// a line inside an invariant plane (a full flag) => case3 (1 + 1 + 1). In
// d = 2 an invariant line is already a full flag.
inline BlockForm block_form(const std::vector<Mat>& mats, const std::vector<InvariantSubspace>& subs) {
  BlockForm bf;
  if (mats.empty()) return bf;
  const int d = mats.front().dim();
  const InvariantSubspace* line = nullptr;
  const InvariantSubspace* plane = nullptr;
  const InvariantSubspace* flag_line = nullptr;
  for (const auto& s : subs) {
    if (s.dim == 1 && !line) line = &s;
    if (s.dim == 2 && !plane) plane = &s;
  }
  for (const auto& p : subs)
    if (p.dim == 2 && d == 3)
      for (const auto& l : subs)
        if (l.dim == 1) {
          const Mat P = detail::projector(p.basis, d);
          if ((l.basis[0] - P * l.basis[0]).norm() <= 1e-6 && !flag_line) {
            flag_line = &l;
            plane = &p;
          }
        }
  std::vector<Vec> cols;
  if (d == 2 && line) {
    bf.tag = CaseTag::Case3;
    cols = detail::complete_basis(line->basis, d);
    bf.sizes = {1, 1};
  } else if (d == 3 && flag_line) {
    bf.tag = CaseTag::Case3;
    cols = detail::complete_basis({flag_line->basis[0], plane->basis[0], plane->basis[1]}, d);
    bf.sizes = {1, 1, 1};
  } else if (d == 3 && plane) {
    bf.tag = CaseTag::Case1;
    cols = detail::complete_basis(plane->basis, d);
    bf.sizes = {2, 1};
  } else if (d == 3 && line) {
    bf.tag = CaseTag::Case2;
    cols = detail::complete_basis(line->basis, d);
    bf.sizes = {1, 2};
  } else {
    return bf;
  }
  bf.X = Mat(d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) bf.X(i, j) = cols[j][i];
  std::vector<int> block_of(d);
  for (int b = 0, r = 0; b < static_cast<int>(bf.sizes.size()); ++b)
    for (int k = 0; k < bf.sizes[b]; ++k) block_of[r++] = b;
  for (const auto& A : mats) {
    Mat B = bf.X.transpose() * A * bf.X;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (block_of[i] > block_of[j]) bf.residual = std::max(bf.residual, std::abs(B(i, j)));
    bf.blocks.push_back(B);
  }
  return bf;
}

// ---------------------------------------------------------------------------
// Witness helpers
// ---------------------------------------------------------------------------

// Kernel direction of a vertex with a zero eigenvalue, as a constant-law
// stationary witness.
inline std::optional<PeriodicWitness> kernel_witness(const SwitchedSystem& sys, double eig_tol = 1e-8) {
  const int N = sys.count();
  std::optional<PeriodicWitness> best;
  for (int i = 0; i < N; ++i) {
    const Mat& A = sys.matrices[i];
    if (!has_zero_eigenvalue(A, eig_tol)) continue;
    const double s = std::max(1.0, A.max_abs());
    for (double ktol : {1e-9, 1e-7, 1e-5}) {
      auto ker = null_space(A, ktol);
      if (ker.empty()) continue;
      PeriodicWitness w;
      w.kind = WitnessKind::Stationary;
      w.point = ker.front().normalized();
      w.law = SwitchingLaw::vertex(N, i);
      w.closure_gap = (A * w.point).norm();
      w.converged = w.closure_gap <= 1e-6 * s;
      w.source = "kernel of vertex " + std::to_string(i + 1);
      if (!best || w.closure_gap < best->closure_gap) best = w;
      break;
    }
  }
  return best;
}

// Witness from a periodic law whose monodromy has a real dominant
// eigenvalue: the eigenvector closes after one period (two for a negative
// eigenvalue). Constant laws give stationary witnesses of the shifted flow.
inline std::optional<PeriodicWitness> law_witness(const SwitchedSystem& sys, const SwitchingLaw& law) {
  if (law.segments().empty()) return std::nullopt;
  const int d = sys.dim();
  const bool constant = law.compacted().segments().size() == 1;
  if (constant) {
    const Mat G = sys.generator(law.segments().front().weights);
    const Spectrum sp = eig(G);
    const cplx z = sp.values.front();
    if (z.imag() != 0.0) {
      // Rotation in an invariant plane: periodic with period 2 pi / |Im z|
      // once the real part is shifted out.
      const double p = 2 * M_PI / std::abs(z.imag());
      SwitchingLaw pl({Segment{p, law.segments().front().weights}}, true);
      auto evs = eigenvectors(G, z, sp.degenerate ? 1e-5 : 1e-7);
      if (evs.empty()) return std::nullopt;
      Vec re(d);
      for (int i = 0; i < d; ++i) re[i] = evs.front()[i].real();
      if (!(re.norm() > 0)) for (int i = 0; i < d; ++i) re[i] = evs.front()[i].imag();
      PeriodicWitness w;
      w.kind = WitnessKind::Periodic;
      w.point = re.normalized();
      w.law = pl;
      w.period = p;
      w.monodromy_radius = spectral_radius(monodromy(sys, pl));
      w.closure_gap = replay_gap(sys, w);
      w.converged = w.closure_gap <= 1e-6;
      w.source = "rotation of a constant law";
      return w;
    }
    auto evs = eigenvectors(G, z, sp.degenerate ? 1e-5 : 1e-7);
    if (evs.empty()) return std::nullopt;
    PeriodicWitness w;
    w.kind = WitnessKind::Stationary;
    w.point = detail::real_direction(evs.front()).normalized();
    w.law = SwitchingLaw::constant(law.segments().front().weights);
    w.closure_gap = (G * w.point).norm();
    w.converged = w.closure_gap <= 1e-6 * std::max(1.0, G.max_abs());
    w.source = "eigenvector of a constant law";
    return w;
  }
  SwitchingLaw pl = law.periodic() ? law : SwitchingLaw(law.segments(), true);
  Mat M = monodromy(sys, pl);
  Spectrum sp = eig(M);
  cplx z = sp.values.front();
  for (cplx c : sp.values)
    if (std::abs(c) > std::abs(z)) z = c;
  if (z.imag() != 0.0) return std::nullopt;
  if (z.real() < 0) {
    pl = pl.repeated(2);
    M = M * M;
    z = z * z;
  }
  auto evs = eigenvectors(M, z, 1e-6);
  if (evs.empty()) return std::nullopt;
  PeriodicWitness w;
  w.kind = WitnessKind::Periodic;
  w.point = detail::real_direction(evs.front()).normalized();
  w.law = pl;
  w.period = pl.period();
  w.monodromy_radius = spectral_radius(M);
  w.closure_gap = replay_gap(sys, w);
  w.converged = w.closure_gap <= 1e-6;
  w.source = "dominant eigenvector of the rate witness";
  return w;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct Classification {
  Verdict verdict = Verdict::GUES;
  RateBounds rate_bounds;
  std::optional<PeriodicWitness> witness;
  double witness_shift = 0.0;  // the witness lives on the system shifted by -witness_shift
  std::vector<InvariantSubspace> invariant_subspaces;
  CaseTag case_tag = CaseTag::None;
  BlockForm block;
  double kappa = 0.0;  // decay rate certified for GUES verdicts
  double bound_width = 0.0;
  bool barabanov_converged = false;
  bool converged = true;
  std::vector<std::string> notes;
};

struct ClassifyOptions {
  RateOptions rate;
  double marginal_width = 1e-3;  // bounds straddling zero within this width count as zero
  double zero_tol = 1e-6;        // rates within this of zero are not a sign (Jordan blocks cost sqrt(eps))
  // Barabanov grids: circle points (d = 2); cross-polytope subdivisions (d = 3).
  int circle_points = 7200;
  int cross_polytope_n = 64;
  std::vector<double> dwell_2d{0.01};
  std::vector<double> dwell_3d{0.1};
  double increment_tol = 1e-7;
  double barabanov_horizon = 200.0;
  // Extremal trajectory and recurrence search.
  double step = 0.01;
  double horizon = 40.0;
  double transient = 5.0;
  double min_return = 1.0;
  double subspace_tol = 1e-8;
  double eig_tol = 1e-6;  // zero-eigenvalue test, relative to max(1, max |a_ij|)
  uint64_t seed = 0;
};

namespace detail {

// Divergence of the dynamic programme: the sweeps stopped at the horizon with
// increments that did not decay (late mean at least half the early mean).
inline bool norm_diverged(const NormApprox& n) {
  if (n.converged) return false;
  const auto& inc = n.increments;
  if (inc.size() < 8) return true;
  const size_t q = inc.size() / 4;
  const double early = std::accumulate(inc.begin() + q, inc.begin() + 2 * q, 0.0) / q;
  const double late = std::accumulate(inc.end() - q, inc.end(), 0.0) / q;
  return late >= 0.5 * early;
}

inline SphereGrid classify_grid(int d, const ClassifyOptions& opt) {
  if (d == 2) return SphereGrid::circle(opt.circle_points);
  return SphereGrid::cross_polytope(d, opt.cross_polytope_n);
}

// Stages (3) and (4) on a system whose rate is numerically zero; `sys` is
// `original` shifted by -c.witness_shift.
inline void marginal_stage(const SwitchedSystem& original, const SwitchedSystem& sys, const SwitchingLaw& rate_law,
                           const ClassifyOptions& opt, Classification& c) {
  const int d = sys.dim();
  BarabanovOptions bo;
  bo.dwell_grid = d == 2 ? opt.dwell_2d : opt.dwell_3d;
  bo.increment_tol = opt.increment_tol;
  bo.horizon = opt.barabanov_horizon;
  std::optional<NormApprox> norm;
  bool diverged = false;
  try {
    norm = compute_barabanov(sys, classify_grid(d, opt), bo);
    diverged = detail::norm_diverged(*norm) || norm->reducibility_warning;
  } catch (const NotAtBoundary& e) {
    diverged = true;
    c.notes.push_back(std::string("Barabanov iteration: ") + e.what());
  }
  c.barabanov_converged = norm && norm->converged;
  if (!diverged) {
    c.verdict = Verdict::MarginalLyapunov;
    if (!norm->converged) c.notes.push_back("Barabanov iteration reached the horizon with decaying increments");
    Vec x0(d);
    x0[0] = 1.0;
    const Trajectory tr = extremal_trajectory(*norm, sys, x0, opt.step, opt.horizon);
    FindPeriodicOptions fo;
    fo.recurrence.min_return = opt.min_return;
    fo.transient = opt.transient;
    const FindPeriodicResult r = find_periodic(tr, fo);
    if (r.found) {
      c.witness = r.witness;
      c.witness->source = "extremal trajectory recurrence: " + c.witness->source;
      return;
    }
    c.notes.push_back(r.events.empty() ? "no recurrence along the extremal trajectory"
                                       : "recurrences did not close within tolerance");
    if (auto w = law_witness(sys, rate_law); w && w->converged) {
      c.witness = w;
      return;
    }
    if (auto w = kernel_witness(sys, opt.eig_tol)) {
      c.witness = w;
      return;
    }
    c.converged = false;
    return;
  }
  // The case analysis runs on the unshifted vertices: a shift by rounding
  // noise would move the zero eigenvalue it looks for.
  c.verdict = Verdict::MarginalUnstable;
  c.invariant_subspaces = common_invariant_subspaces(original.matrices, opt.subspace_tol, opt.seed);
  c.block = block_form(original.matrices, c.invariant_subspaces);
  c.case_tag = c.block.tag;
  if (c.invariant_subspaces.empty())
    c.notes.push_back("no common invariant subspace found; divergence may be numerical");
  if (auto w = kernel_witness(original, opt.eig_tol)) {
    c.witness = w;
    c.witness_shift = 0.0;
  } else {
    c.notes.push_back("no vertex with a zero eigenvalue");
    c.converged = false;
  }
}

}  // namespace detail

inline Classification classify(const SwitchedSystem& sys, const ClassifyOptions& opt = {}) {
  require(sys.is_linear(), "classification needs a linear system");
  require(sys.dim() <= 4, "classification supports d <= 4");
  Classification c;
  c.rate_bounds = uniform_rate(sys, opt.rate);
  const RateBounds& b = c.rate_bounds;
  c.bound_width = b.gap();
  if (!b.converged) c.notes.push_back("rate bounds did not reach the target gap");
  const int d = sys.dim();
  if (b.upper < -opt.zero_tol) {
    c.verdict = Verdict::GUES;
    c.kappa = -b.upper;
    return c;
  }
  if (b.lower > opt.zero_tol) {
    c.verdict = Verdict::ExponentiallyUnstable;
    c.witness_shift = b.lower;
    const SwitchedSystem shifted = sys.shifted(-b.lower);
    if (auto w = law_witness(shifted, b.lower_witness); w && w->converged) {
      c.witness = w;
      return c;
    }
    if (d >= 2 && d <= 3) {
      Classification inner;
      inner.witness_shift = b.lower;
      detail::marginal_stage(shifted, shifted, b.lower_witness, opt, inner);
      c.witness = inner.witness;
      c.notes.insert(c.notes.end(), inner.notes.begin(), inner.notes.end());
      c.converged = inner.converged && c.witness.has_value();
    } else {
      c.converged = false;
    }
    return c;
  }
  // The bounds straddle zero.
  if (c.bound_width > opt.marginal_width)
    c.notes.push_back("rate bounds straddle zero at width " + std::to_string(c.bound_width) +
                      " above the marginal width; verdict has low confidence");
  if (d == 1) {
    // Scalar vertices: every trajectory is bounded by the largest a_i = 0.
    c.verdict = Verdict::MarginalLyapunov;
    c.witness = kernel_witness(sys, opt.eig_tol);
    c.converged = c.witness.has_value();
    return c;
  }
  if (d == 4) {
    c.verdict = Verdict::MarginalLyapunov;
    c.notes.push_back("d = 4: Lyapunov stability and the case analysis are not decided");
    c.converged = false;
    if (auto w = law_witness(sys.shifted(-b.lower), b.lower_witness)) {
      c.witness = w;
      c.witness_shift = b.lower;
    }
    return c;
  }
  // Shift by the best periodic rate so the rate witness is exactly neutral;
  // a lower bound far below zero is not trusted as the rate.
  c.witness_shift = b.lower >= -opt.marginal_width ? b.lower : 0.0;
  detail::marginal_stage(sys, sys.shifted(-c.witness_shift), b.lower_witness, opt, c);
  return c;
}

// ---------------------------------------------------------------------------
// Periodic asymptotic stability by sampling
// ---------------------------------------------------------------------------

struct PasSampler {
  double min_period = 0.5;
  double max_period = 5.0;
  int max_segments = 6;
  double vertex_fraction = 0.5;  // share of segments placed on a single vertex
  uint64_t seed = 0;
};

struct PasFailure {
  SwitchingLaw law;
  double radius = 0.0;
};

struct PasReport {
  size_t trials = 0;
  size_t constant_laws = 0;  // vertex laws checked in addition to the trials
  double max_radius = 0.0;
  SwitchingLaw worst;
  std::vector<double> radii;  // per random trial
  std::vector<PasFailure> failures;
  bool pas_holds() const { return failures.empty(); }
};

// Random periodic law of trial k; deterministic in (seed, k).
inline SwitchingLaw sample_periodic_law(int count, const PasSampler& ps, uint64_t k) {
  std::seed_seq seq{static_cast<uint32_t>(ps.seed), static_cast<uint32_t>(ps.seed >> 32), static_cast<uint32_t>(k),
                    static_cast<uint32_t>(k >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  const double period = ps.min_period + (ps.max_period - ps.min_period) * u(rng);
  const int segs = 1 + static_cast<int>(u(rng) * ps.max_segments) % ps.max_segments;
  std::vector<double> cuts(segs);
  double total = 0.0;
  for (auto& c : cuts) total += (c = 0.05 + ex(rng));
  std::vector<Segment> out;
  for (int s = 0; s < segs; ++s) {
    std::vector<double> w(count, 0.0);
    if (u(rng) < ps.vertex_fraction) {
      w[static_cast<size_t>(u(rng) * count) % count] = 1.0;
    } else {
      double sum = 0.0;
      for (auto& x : w) sum += (x = ex(rng));
      for (auto& x : w) x /= sum;
    }
    out.push_back({period * cuts[s] / total, w});
  }
  return SwitchingLaw(std::move(out), true);
}

// Monodromy spectral radii of seeded random periodic laws and of every
// constant vertex law; radius >= 1 - tol is a PAS failure.
inline PasReport verify_pas(const SwitchedSystem& sys, const PasSampler& ps, size_t trials, double tol = 1e-9) {
  require(sys.is_linear(), "PAS sampling needs a linear system");
  PasReport rep;
  rep.trials = trials;
  auto check = [&](const SwitchingLaw& law, bool random) {
    const double r = spectral_radius(monodromy(sys, law));
    if (random) rep.radii.push_back(r);
    if (r > rep.max_radius || rep.worst.segments().empty()) {
      rep.max_radius = std::max(rep.max_radius, r);
      rep.worst = law;
    }
    if (r >= 1.0 - tol) rep.failures.push_back({law, r});
  };
  for (int i = 0; i < sys.count(); ++i) {
    check(SwitchingLaw(SwitchingLaw::vertex(sys.count(), i).segments(), true), false);
    ++rep.constant_laws;
  }
  for (size_t k = 0; k < trials; ++k) check(sample_periodic_law(sys.count(), ps, k), true);
  return rep;
}

// ---------------------------------------------------------------------------
// Dimension-four tensor counterexample
// ---------------------------------------------------------------------------

struct TensorSystem {
  SwitchedSystem pair;
  SwitchedSystem system;  // vertex (i, j) at index i * N + j
  double scale = std::sqrt(2.0);
  int index(int i, int j) const { return i * pair.count() + j; }
};

// The vertices A_i (x) I + scale (I (x) A_j). When `check_boundary` is set the
// pair's rate bounds must lie within boundary_tol of zero.
inline TensorSystem tensor_counterexample(const SwitchedSystem& pair, double scale = std::sqrt(2.0),
                                          bool check_boundary = true, double boundary_tol = 1e-4) {
  require(pair.is_linear() && pair.dim() == 2 && pair.count() == 2, "tensor counterexample needs a 2D pair");
  require(std::isfinite(scale) && scale > 0, "scale must be positive");
  if (check_boundary) {
    const RateBounds b = uniform_rate(pair);
    require(std::abs(b.lower) <= boundary_tol && std::abs(b.upper) <= boundary_tol,
            "pair is not at the stability boundary within " + std::to_string(boundary_tol));
  }
  TensorSystem t;
  t.pair = pair;
  t.scale = scale;
  const Mat I = Mat::identity(2);
  std::vector<Mat> mats;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) mats.push_back(kron(pair.matrices[i], I) + kron(I, pair.matrices[j]) * scale);
  t.system = SwitchedSystem::linear(std::move(mats));
  return t;
}

struct ProductTrajectory {
  std::vector<double> t;
  std::vector<Vec> z;   // x(t) (x) y(scale t)
  SwitchingLaw law;     // induced law of the 4D system on [0, horizon]
};

// x follows u from x0, y follows v from y0 in its own clock s = scale t.
inline ProductTrajectory product_trajectory(const TensorSystem& ts, const SwitchingLaw& u, const Vec& x0,
                                            const SwitchingLaw& v, const Vec& y0, double horizon, double step) {
  require(horizon > 0 && step > 0 && step <= horizon, "horizon and step must be positive");
  const Trajectory xa = integrate(ts.pair, u, x0, horizon, step);
  const Trajectory yb = integrate(ts.pair, v, y0, ts.scale * horizon, ts.scale * step);
  ProductTrajectory out;
  const size_t n = std::min(xa.samples.size(), yb.samples.size());
  for (size_t k = 0; k < n; ++k) {
    out.t.push_back(xa.samples[k].t);
    out.z.push_back(kron(xa.samples[k].x, yb.samples[k].x));
  }
  // Breakpoints of both factor laws on the common clock.
  std::vector<double> cuts{0.0, horizon};
  u.for_each_piece(0.0, horizon, [&](double a, double, size_t) { cuts.push_back(a); });
  v.for_each_piece(0.0, ts.scale * horizon, [&](double a, double, size_t) { cuts.push_back(a / ts.scale); });
  std::sort(cuts.begin(), cuts.end());
  std::vector<Segment> segs;
  const int N = ts.pair.count();
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b - a <= 1e-12 * std::max(1.0, horizon)) continue;
    const double mid = 0.5 * (a + b);
    const auto& wu = u.weights_at(mid);
    const auto& wv = v.weights_at(ts.scale * mid);
    std::vector<double> w(N * N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) w[ts.index(i, j)] = wu[i] * wv[j];
    if (!segs.empty() && segs.back().weights == w) segs.back().duration += b - a;
    else segs.push_back({b - a, w});
  }
  out.law = SwitchingLaw(std::move(segs), false);
  return out;
}

struct TensorDemoReport {
  PasReport pas;
  double pair_lower = 0.0, pair_upper = 0.0;
  double rate_upper = 0.0;   // (1 + scale) * pair upper bound
  double fitted_rate = 0.0;  // slope of log |z(t)|
  double norm_ratio = 0.0;   // max |z| / min |z|
  double base_period = 0.0;
  double horizon = 0.0;
  PeriodicWitness factor;    // periodic extremal law of the pair
  bool pas_holds = false;
  bool gues_fails = false;
  bool separation() const { return pas_holds && gues_fails; }
};

struct TensorDemoOptions {
  size_t trials = 100;
  PasSampler sampler;
  double periods = 50.0;
  double step = 0.01;
  double rate_tol = 1e-2;
  double ratio_max = 10.0;
  double pas_tol = 1e-9;
};

// Least-squares slope of log |z| against t.
inline double fitted_log_rate(const std::vector<double>& t, const std::vector<Vec>& z) {
  const size_t n = t.size();
  require(n >= 2 && z.size() == n, "need at least two samples");
  double mt = 0, ml = 0;
  for (size_t k = 0; k < n; ++k) {
    mt += t[k];
    ml += std::log(z[k].norm());
  }
  mt /= n;
  ml /= n;
  double sxy = 0, sxx = 0;
  for (size_t k = 0; k < n; ++k) {
    sxy += (t[k] - mt) * (std::log(z[k].norm()) - ml);
    sxx += (t[k] - mt) * (t[k] - mt);
  }
  return sxy / sxx;
}

// PAS by sampling the 4D system, and failure of GUES through the product of
// a periodic extremal trajectory of the pair with its own time-rescaled copy.
inline TensorDemoReport tensor_demo(const SwitchedSystem& pair, const TensorDemoOptions& opt = {}) {
  TensorDemoReport rep;
  const RateBounds b = uniform_rate(pair);
  rep.pair_lower = b.lower;
  rep.pair_upper = b.upper;
  const TensorSystem ts = tensor_counterexample(pair);
  rep.rate_upper = (1.0 + ts.scale) * b.upper;
  rep.pas = verify_pas(ts.system, opt.sampler, opt.trials, opt.pas_tol);
  rep.pas_holds = rep.pas.pas_holds();
  auto w = law_witness(pair, b.lower_witness);
  require(w.has_value() && w->kind == WitnessKind::Periodic, "pair has no periodic extremal law");
  rep.factor = *w;
  rep.base_period = w->period;
  rep.horizon = opt.periods * w->period;
  const ProductTrajectory pt = product_trajectory(ts, w->law, w->point, w->law, w->point, rep.horizon, opt.step);
  rep.fitted_rate = fitted_log_rate(pt.t, pt.z);
  double mx = 0, mn = std::numeric_limits<double>::infinity();
  for (const auto& z : pt.z) {
    mx = std::max(mx, z.norm());
    mn = std::min(mn, z.norm());
  }
  rep.norm_ratio = mx / mn;
  rep.gues_fails = std::abs(rep.fitted_rate) <= opt.rate_tol && rep.norm_ratio <= opt.ratio_max;
  return rep;
}

// ---------------------------------------------------------------------------
// Non-uniqueness of extremal trajectories
// ---------------------------------------------------------------------------

struct HullSingularity {
  std::vector<double> weights;
  double min_abs_det = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void simplex_grid(int N, int m, const std::function<void(const std::vector<double>&)>& f) {
  std::vector<int> c(N, 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == N - 1) {
      c[k] = left;
      std::vector<double> w(N);
      for (int i = 0; i < N; ++i) w[i] = static_cast<double>(c[i]) / m;
      f(w);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      c[k] = a;
      rec(k + 1, left - a);
    }
  };
  rec(0, m);
}

}  // namespace detail

// Minimum of |det(sum w_i A_i)| over a simplex grid, refined by a simplex
// search in squared coordinates w_i = y_i^2 / |y|^2 from the best grid point.
inline HullSingularity hull_min_det(const std::vector<Mat>& mats, int mesh = 0) {
  require(!mats.empty(), "need at least one matrix");
  const int N = static_cast<int>(mats.size());
  if (mesh <= 0) mesh = N <= 2 ? 1000 : N == 3 ? 100 : 20;
  HullSingularity h;
  detail::simplex_grid(N, mesh, [&](const std::vector<double>& w) {
    const double v = std::abs(det(convex_combination(mats, w)));
    if (v < h.min_abs_det) {
      h.min_abs_det = v;
      h.weights = w;
    }
  });
  if (N > 1 && h.min_abs_det > 0) {
    auto to_w = [&](const std::vector<double>& y) {
      std::vector<double> w(N);
      double s = 0;
      for (int i = 0; i < N; ++i) s += (w[i] = y[i] * y[i]);
      for (auto& x : w) x /= s;
      return w;
    };
    std::vector<double> y0(N);
    for (int i = 0; i < N; ++i) y0[i] = std::sqrt(h.weights[i]);
    auto f = [&](const std::vector<double>& y) {
      double s = 0;
      for (double v : y) s += v * v;
      if (!(s > 0)) return std::numeric_limits<double>::infinity();
      return std::abs(det(convex_combination(mats, to_w(y))));
    };
    const MinResult r = nelder_mead(f, y0, 0.5 / mesh, 2000);
    if (r.f < h.min_abs_det) {
      h.min_abs_det = r.f;
      h.weights = to_w(r.x);
    }
  }
  return h;
}

struct BranchPoint {
  Vec x;                              // on the norm's unit sphere
  std::vector<double> w_a, w_b;       // tied maximisers
  double separation = 0.0;            // spherical distance after the horizon
};

struct ProbeOptions {
  double branch_tol = 1e-4;       // drift tie tolerance
  double separation_factor = 10;  // divergence threshold as a multiple of branch_tol
  double tau = 0.1;               // extremal step
  double horizon = 1.0;           // continuation after the first step
  double singular_tol = 1e-3;     // hull hypothesis: min |det| must exceed this
  size_t max_points = 0;          // 0: every grid point
};

struct ProbeReport {
  HullSingularity hull;
  bool hypothesis_holds = false;
  bool aborted = false;
  size_t points = 0;
  size_t tied_points = 0;
  std::vector<BranchPoint> branches;
  std::string note;
};

// Branching search on the unit sphere of the norm: at each grid point the
// weight choices of extremal_step within branch_tol of the best drift are
// followed by extremal continuation; pairs ending farther apart than
// separation_factor * branch_tol are reported.
inline ProbeReport non_uniqueness_probe(const SwitchedSystem& sys, const NormApprox& norm,
                                        const ProbeOptions& opt = {}) {
  require(sys.is_linear() && sys.dim() == norm.grid.dim(), "system does not match the norm");
  require(sys.dim() % 2 == 1, "the probe is stated for odd dimensions");
  ProbeReport rep;
  rep.hull = hull_min_det(sys.matrices);
  rep.hypothesis_holds = rep.hull.min_abs_det >= opt.singular_tol;
  if (!rep.hypothesis_holds) {
    rep.aborted = true;
    rep.note = "a convex combination is singular: |det| = " + std::to_string(rep.hull.min_abs_det);
    return rep;
  }
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
  std::vector<Mat> E;
  for (const auto& w : cands) E.push_back(expm(sys.generator(w), opt.tau));
  const size_t P = norm.grid.size();
  const size_t stride = opt.max_points > 0 && opt.max_points < P ? (P + opt.max_points - 1) / opt.max_points : 1;
  for (size_t k = 0; k < P; k += stride) {
    ++rep.points;
    const Vec x = norm.grid.point(k) * (1.0 / norm(norm.grid.point(k)));
    std::vector<double> drift(cands.size());
    double best = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < cands.size(); ++c) best = std::max(best, drift[c] = norm(E[c] * x) - 1.0);
    std::vector<size_t> tied;
    for (size_t c = 0; c < cands.size(); ++c)
      if (drift[c] >= best - opt.branch_tol) tied.push_back(c);
    if (tied.size() < 2) continue;
    ++rep.tied_points;
    std::vector<Vec> ends;
    for (size_t c : tied) {
      Vec y = E[c] * x;
      const long steps = std::lround(opt.horizon / opt.tau);
      for (long s = 0; s < steps; ++s) y = extremal_step(norm, sys, y, opt.tau).next;
      ends.push_back(y.normalized());
    }
    BranchPoint bp;
    for (size_t a = 0; a < tied.size(); ++a)
      for (size_t b = a + 1; b < tied.size(); ++b) {
        const double sep = sphere_distance(ends[a], ends[b]);
        if (sep > bp.separation) {
          bp.separation = sep;
          bp.w_a = cands[tied[a]];
          bp.w_b = cands[tied[b]];
        }
      }
    if (bp.separation > opt.separation_factor * opt.branch_tol) {
      bp.x = x;
      rep.branches.push_back(bp);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Complex 2D systems
// ---------------------------------------------------------------------------

// Unit vector of C^2 = R^4 over a point of the Hopf sphere.
inline Vec hopf_lift(const Vec& q) {
  require(q.size() == 3, "Hopf lift expects a point of S^2");
  const Vec u = q.normalized();
  cplx z1, z2;
  if (u[2] >= 0) {
    z1 = std::sqrt((1 + u[2]) / 2);
    z2 = cplx(u[0], -u[1]) / (2.0 * z1);
  } else {
    z2 = std::sqrt((1 - u[2]) / 2);
    z1 = cplx(u[0], u[1]) / (2.0 * z2);
  }
  return realify(std::array<cplx, 2>{z1, z2}).normalized();
}

// Norm on C^2 invariant under complex phases: |z| f(pi(z)) with the profile f
// tabulated on a grid of the Hopf sphere.
struct HopfNorm {
  NormApprox profile;
  double operator()(const Vec& x) const {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    return r * profile(project(ProjectionKind::Hopf, x));
  }
};

// The dynamic programme of compute_barabanov on the Hopf sphere. A C-linear
// flow commutes with complex phases, so v(e^{i t} z) = v(z) and one lift per
// grid point suffices.
inline HopfNorm compute_hopf_barabanov(const SwitchedSystem& sys, const SphereGrid& grid,
                                       const BarabanovOptions& opt = {}) {
  require(sys.is_linear() && sys.dim() == 4, "Hopf norm needs a realified complex 2D system");
  require(grid.dim() == 3, "Hopf norm is tabulated on a grid of S^2");
  require(!opt.dwell_grid.empty() && opt.horizon > 0, "dwell grid and horizon must be positive");
  const size_t P = grid.size();
  struct Image {
    Stencil st;
    double r;
  };
  std::vector<Vec> lifts;
  for (size_t k = 0; k < P; ++k) lifts.push_back(hopf_lift(grid.point(k)));
  std::vector<Image> images;
  for (const auto& A : sys.matrices)
    for (double t : opt.dwell_grid) {
      const Mat E = expm(A, t);
      for (size_t k = 0; k < P; ++k) {
        const Vec y = E * lifts[k];
        images.push_back({grid.locate(project(ProjectionKind::Hopf, y)), y.norm()});
      }
    }
  const size_t maps = images.size() / P;
  const double step = *std::max_element(opt.dwell_grid.begin(), opt.dwell_grid.end());
  HopfNorm out;
  NormApprox& n = out.profile;
  n.grid = grid;
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
    ++n.sweeps;
    n.horizon += step;
    n.increments.push_back(inc);
    n.last_increment = inc;
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx <= opt.c_max)) throw NotAtBoundary("norm values diverge: the system grows at rate above zero");
    if (inc < opt.increment_tol * mx) {
      n.converged = true;
      break;
    }
    if (n.horizon >= opt.horizon) break;
  }
  const double mx = *std::max_element(v.begin(), v.end());
  n.anchor = mx;
  n.reducibility_warning = mx / *std::min_element(v.begin(), v.end()) > opt.c_max;
  for (auto& x : v) x /= mx;
  n.values = std::move(v);
  return out;
}

inline SwitchedSystem realify_system(const std::vector<CMat2>& Ts) {
  require(!Ts.empty(), "need at least one complex matrix");
  std::vector<Mat> mats;
  for (const auto& T : Ts) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        require(std::isfinite(T(i, j).real()) && std::isfinite(T(i, j).imag()), "entries must be finite");
    mats.push_back(realify(T));
  }
  return SwitchedSystem::linear(std::move(mats));
}

// Common eigenvectors of complex 2x2 matrices (the lines of C^2 preserved
// by every T_i).
inline std::vector<std::array<cplx, 2>> common_complex_lines(const std::vector<CMat2>& Ts, double tol = 1e-8) {
  std::vector<std::array<cplx, 2>> out;
  double scale = 1.0;
  for (const auto& T : Ts)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) scale = std::max(scale, std::abs(T(i, j)));
  for (const auto& T0 : Ts) {
    for (cplx lam : T0.eigenvalues()) {
      std::array<cplx, 2> v;
      const cplx a = T0(0, 0) - lam, b = T0(0, 1), c = T0(1, 0), d = T0(1, 1) - lam;
      if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d)) v = {b, -a};
      else v = {d, -c};
      if (std::abs(v[0]) + std::abs(v[1]) == 0.0) v = {1.0, 0.0};
      const double nv = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
      v = {v[0] / nv, v[1] / nv};
      bool common = true;
      for (const auto& T : Ts) {
        const cplx w0 = T(0, 0) * v[0] + T(0, 1) * v[1], w1 = T(1, 0) * v[0] + T(1, 1) * v[1];
        // w must be parallel to v: |w0 v1 - w1 v0| small.
        if (std::abs(w0 * v[1] - w1 * v[0]) > tol * scale) common = false;
      }
      if (!common) continue;
      bool dup = false;
      for (const auto& u : out)
        if (std::abs(u[0] * v[1] - u[1] * v[0]) <= 1e-6) dup = true;
      if (!dup) out.push_back(v);
    }
  }
  return out;
}

struct Complex2dOptions {
  RateOptions rate;
  double marginal_width = 1e-3;
  double zero_tol = 1e-6;
  int grid_n = 64;  // cross-polytope subdivision of the Hopf sphere grid
  std::vector<double> dwell{0.05};
  double increment_tol = 1e-8;
  double barabanov_horizon = 200.0;
  double step = 0.01;
  double horizon = 60.0;
  double transient = 10.0;
  double min_return = 1.0;
  double threshold = 1e-2;
  double eig_tol = 1e-9;
  double line_tol = 1e-8;
};

struct ComplexClassification {
  Classification base;  // invariant_subspaces stay empty; lines are below
  std::vector<std::array<cplx, 2>> common_lines;
  bool constant_law_failure = false;
};

// Constant law witness for an eigenvalue with nonnegative real part.
inline PeriodicWitness complex_eigen_witness(const std::vector<CMat2>& Ts, size_t i, cplx lam, double shift) {
  const CMat2& T = Ts[i];
  std::array<cplx, 2> v;
  const cplx a = T(0, 0) - lam, b = T(0, 1), c = T(1, 0), d = T(1, 1) - lam;
  v = std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d) ? std::array<cplx, 2>{b, -a} : std::array<cplx, 2>{d, -c};
  if (std::abs(v[0]) + std::abs(v[1]) == 0.0) v = {1.0, 0.0};
  PeriodicWitness w;
  w.point = realify(v).normalized();
  const SwitchedSystem shifted = realify_system(Ts).shifted(-shift);
  const double om = lam.imag();
  if (std::abs(lam - shift) <= 1e-12 * std::max(1.0, std::abs(lam))) {
    w.kind = WitnessKind::Stationary;
    w.law = SwitchingLaw::vertex(static_cast<int>(Ts.size()), static_cast<int>(i));
    w.closure_gap = (shifted.matrices[i] * w.point).norm();
  } else {
    // x(t) = e^{i om t} v after the shift: periodic with period 2 pi / |om|.
    w.kind = WitnessKind::Periodic;
    w.period = 2 * M_PI / std::abs(om);
    w.law = SwitchingLaw(SwitchingLaw::vertex(static_cast<int>(Ts.size()), static_cast<int>(i), w.period).segments(), true);
    w.closure_gap = replay_gap(shifted, w);
    w.monodromy_radius = spectral_radius(monodromy(shifted, w.law));
  }
  w.converged = w.closure_gap <= 1e-6;
  w.source = "eigenvector of vertex " + std::to_string(i + 1);
  return w;
}

// Rate bounds; eigenvalue precheck; common complex lines; otherwise the Hopf
// norm, an extremal trajectory, and the periodic engine on the Hopf sphere.
// Witnesses live on the realified system shifted by -witness_shift.
inline ComplexClassification complex2d_classify(const std::vector<CMat2>& Ts, const Complex2dOptions& opt = {}) {
  const SwitchedSystem sys = realify_system(Ts);
  ComplexClassification cc;
  Classification& c = cc.base;
  c.rate_bounds = uniform_rate(sys, opt.rate);
  const RateBounds& b = c.rate_bounds;
  c.bound_width = b.gap();
  cc.common_lines = common_complex_lines(Ts, opt.line_tol);
  // Constant-law failures: an eigenvalue with nonnegative real part.
  double re_max = -std::numeric_limits<double>::infinity();
  size_t arg_i = 0;
  cplx arg_lam;
  for (size_t i = 0; i < Ts.size(); ++i)
    for (cplx lam : Ts[i].eigenvalues())
      if (lam.real() > re_max) {
        re_max = lam.real();
        arg_i = i;
        arg_lam = lam;
      }
  cc.constant_law_failure = re_max >= -opt.eig_tol;
  if (b.upper < -opt.zero_tol) {
    c.verdict = Verdict::GUES;
    c.kappa = -b.upper;
    if (cc.constant_law_failure) c.notes.push_back("eigenvalue precheck contradicts the upper bound");
    return cc;
  }
  const bool growing = b.lower > opt.zero_tol;
  const double shift = growing || b.lower >= -opt.marginal_width ? b.lower : 0.0;
  c.witness_shift = shift;
  c.verdict = growing ? Verdict::ExponentiallyUnstable : Verdict::MarginalLyapunov;
  if (c.bound_width > opt.marginal_width && !growing)
    c.notes.push_back("rate bounds straddle zero at width " + std::to_string(c.bound_width));
  // A vertex eigenvalue at the rate gives a constant-law witness directly.
  if (re_max >= shift - opt.eig_tol) {
    c.witness_shift = re_max;
    c.witness = complex_eigen_witness(Ts, arg_i, arg_lam, re_max);
    c.notes.push_back("constant-law witness from the eigenvalue precheck");
    return cc;
  }
  if (!cc.common_lines.empty())
    c.notes.push_back("common complex line present: the system is simultaneously triangularisable");
  const SwitchedSystem shifted = sys.shifted(-shift);
  BarabanovOptions bo;
  bo.dwell_grid = opt.dwell;
  bo.increment_tol = opt.increment_tol;
  bo.horizon = opt.barabanov_horizon;
  std::optional<HopfNorm> norm;
  try {
    norm = compute_hopf_barabanov(shifted, SphereGrid::cross_polytope(3, opt.grid_n), bo);
  } catch (const NotAtBoundary& e) {
    c.notes.push_back(std::string("Hopf norm: ") + e.what());
  }
  c.barabanov_converged = norm && norm->profile.converged;
  if (!norm || detail::norm_diverged(norm->profile)) {
    if (!growing) c.verdict = Verdict::MarginalUnstable;
    c.converged = false;
    if (auto w = law_witness(shifted, b.lower_witness); w && w->converged) c.witness = w;
    return cc;
  }
  const Trajectory tr = extremal_trajectory(*norm, shifted, Vec{1, 0, 0, 0}, opt.step, opt.horizon);
  FindPeriodicOptions fo;
  fo.projection = ProjectionKind::Hopf;
  fo.recurrence.min_return = opt.min_return;
  fo.recurrence.threshold = opt.threshold;
  fo.transient = opt.transient;
  const FindPeriodicResult r = find_periodic(tr, fo);
  if (r.found) {
    c.witness = r.witness;
    c.witness->source = "Hopf recurrence: " + c.witness->source;
    return cc;
  }
  c.notes.push_back("no closing recurrence on the Hopf sphere");
  if (auto w = law_witness(shifted, b.lower_witness); w && w->converged) c.witness = w;
  else c.converged = false;
  return cc;
}

}  // namespace swlab
