#pragma once

// Switched systems, piecewise-constant simplex-valued switching laws and the
// trajectories they generate.

#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

#include "linalg.hpp"

namespace swlab {

// ============================================================================
// Switching laws
// ============================================================================

struct Segment {
  double duration = 0.0;
  std::vector<double> weights;
};

inline void validate_weights(const std::vector<double>& w, size_t count) {
  require(w.size() == count, "weight vector length must equal the vertex count");
  double s = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= -1e-12, "weights must be finite and nonnegative");
    s += x;
  }
  require(std::abs(s - 1.0) <= 1e-12, "weights must sum to one");
}

// A finite list of (duration, weights) pieces. Aperiodic laws hold their last
// weights forever; periodic laws repeat with period equal to the total duration.
class SwitchingLaw {
 public:
  SwitchingLaw() = default;
  SwitchingLaw(std::vector<Segment> segments, bool periodic) : segs_(std::move(segments)), periodic_(periodic) {
    require(!segs_.empty(), "a switching law needs at least one segment");
    const size_t count = segs_.front().weights.size();
    require(count >= 1, "weights must be nonempty");
    total_ = 0.0;
    for (const auto& s : segs_) {
      require(std::isfinite(s.duration) && s.duration > 0.0, "segment durations must be positive and finite");
      validate_weights(s.weights, count);
      total_ += s.duration;
    }
  }

  static SwitchingLaw constant(std::vector<double> w, double duration = 1.0) {
    return SwitchingLaw({Segment{duration, std::move(w)}}, false);
  }
  static SwitchingLaw vertex(int count, int i, double duration = 1.0) {
    std::vector<double> w(count, 0.0);
    w[i] = 1.0;
    return constant(std::move(w), duration);
  }
  // Bang-bang law from a vertex index sequence.
  static SwitchingLaw from_sequence(int count, const std::vector<int>& idx, const std::vector<double>& durations,
                                    bool periodic) {
    require(idx.size() == durations.size() && !idx.empty(), "sequence and durations must match");
    std::vector<Segment> segs;
    for (size_t k = 0; k < idx.size(); ++k) {
      require(idx[k] >= 0 && idx[k] < count, "vertex index out of range");
      std::vector<double> w(count, 0.0);
      w[idx[k]] = 1.0;
      segs.push_back({durations[k], w});
    }
    return SwitchingLaw(std::move(segs), periodic);
  }

  const std::vector<Segment>& segments() const { return segs_; }
  bool periodic() const { return periodic_; }
  double total_duration() const { return total_; }
  double period() const {
    require(periodic_, "law is not periodic");
    return total_;
  }
  int count() const { return static_cast<int>(segs_.front().weights.size()); }

  // Segment index active at time t (right-continuous), with local offset.
  std::pair<size_t, double> locate(double t) const {
    require(t >= 0.0, "law evaluated at negative time");
    if (periodic_) t = std::fmod(t, total_);
    double acc = 0.0;
    for (size_t k = 0; k < segs_.size(); ++k) {
      if (t < acc + segs_[k].duration) return {k, t - acc};
      acc += segs_[k].duration;
    }
    if (periodic_) return {0, 0.0};
    return {segs_.size() - 1, t - (total_ - segs_.back().duration)};
  }
  const std::vector<double>& weights_at(double t) const { return segs_[locate(t).first].weights; }

  // Calls f(a, b, k) for consecutive pieces covering [t0, t1] with segment index k.
  template <class F>
  void for_each_piece(double t0, double t1, F&& f) const {
    double t = t0;
    while (t < t1) {
      auto [k, off] = locate(t);
      double end;
      if (!periodic_ && k == segs_.size() - 1) {
        end = t1;
      } else {
        end = t + (segs_[k].duration - off);
        // Guard against zero-length pieces from rounding at boundaries.
        if (end <= t) {
          t = std::nextafter(t, t1);
          continue;
        }
      }
      end = std::min(end, t1);
      f(t, end, k);
      t = end;
    }
  }

  // Finite aperiodic law describing [0, T] exactly (periodic laws are unrolled).
  SwitchingLaw truncated(double T) const {
    require(T > 0.0, "truncation horizon must be positive");
    std::vector<Segment> out;
    for_each_piece(0.0, T, [&](double a, double b, size_t k) { out.push_back({b - a, segs_[k].weights}); });
    return SwitchingLaw(merge(std::move(out)), false);
  }

  // Law t -> u(t + tau).
  SwitchingLaw shifted(double tau) const {
    require(tau >= 0.0, "shift must be nonnegative");
    if (tau == 0.0) return *this;
    if (periodic_) {
      std::vector<Segment> out;
      for_each_piece(tau, tau + total_, [&](double a, double b, size_t k) { out.push_back({b - a, segs_[k].weights}); });
      return SwitchingLaw(drop_tiny(merge_keep_count(std::move(out))), true);
    }
    if (tau >= total_ - segs_.back().duration) return constant(segs_.back().weights);
    std::vector<Segment> out;
    for_each_piece(tau, total_, [&](double a, double b, size_t k) { out.push_back({b - a, segs_[k].weights}); });
    return SwitchingLaw(drop_tiny(std::move(out)), false);
  }

  // Adjacent segments with identical weights merged.
  SwitchingLaw compacted() const {
    auto out = merge(segs_);
    if (periodic_ && out.size() > 1 && out.front().weights == out.back().weights) {
      out.front().duration += out.back().duration;
      out.pop_back();
    }
    return SwitchingLaw(std::move(out), periodic_);
  }

  SwitchingLaw repeated(int times) const {
    require(periodic_ && times >= 1, "only periodic laws can be repeated");
    std::vector<Segment> out;
    for (int r = 0; r < times; ++r) out.insert(out.end(), segs_.begin(), segs_.end());
    return SwitchingLaw(std::move(out), true);
  }

 private:
  static std::vector<Segment> merge(std::vector<Segment> in) {
    std::vector<Segment> out;
    for (auto& s : in) {
      if (!out.empty() && out.back().weights == s.weights) out.back().duration += s.duration;
      else out.push_back(std::move(s));
    }
    return out;
  }
  static std::vector<Segment> merge_keep_count(std::vector<Segment> in) { return merge(std::move(in)); }
  static std::vector<Segment> drop_tiny(std::vector<Segment> in) {
    std::vector<Segment> out;
    for (auto& s : in)
      if (s.duration > 1e-14) out.push_back(std::move(s));
    if (out.empty()) out.push_back(in.front());
    return out;
  }

  std::vector<Segment> segs_;
  bool periodic_ = false;
  double total_ = 0.0;
};

// Prefix law of length p turned into a p-periodic law.
inline SwitchingLaw periodify(const SwitchingLaw& prefix, double p) {
  require(p > 0.0 && std::abs(prefix.total_duration() - p) <= 1e-12 * std::max(1.0, p),
          "prefix duration must equal the period");
  return SwitchingLaw(prefix.segments(), true);
}

// ============================================================================
// Switched systems
// ============================================================================

enum class SystemKind { Linear, Homogeneous };
using VectorField = std::function<Vec(const Vec&)>;

struct SwitchedSystem {
  SystemKind kind = SystemKind::Linear;
  std::vector<Mat> matrices;
  std::vector<VectorField> fields;
  double lipschitz = 0.0;
  int d = 0;

  static SwitchedSystem linear(std::vector<Mat> mats) {
    require(!mats.empty(), "a switched system needs at least one vertex");
    const int n = mats.front().dim();
    for (const auto& m : mats) {
      require(m.dim() == n, "all matrices must share one dimension");
      require(m.finite(), "matrix entries must be finite");
    }
    SwitchedSystem s;
    s.kind = SystemKind::Linear;
    s.matrices = std::move(mats);
    s.d = n;
    return s;
  }
  // Positively homogeneous, Lipschitz vector fields (degree one).
  static SwitchedSystem homogeneous(int dim, std::vector<VectorField> fs, double K) {
    require(!fs.empty() && dim >= 1 && dim <= kMaxDim, "invalid homogeneous system");
    require(std::isfinite(K) && K > 0.0, "Lipschitz constant must be positive");
    SwitchedSystem s;
    s.kind = SystemKind::Homogeneous;
    s.fields = std::move(fs);
    s.lipschitz = K;
    s.d = dim;
    return s;
  }

  int dim() const { return d; }
  int count() const { return kind == SystemKind::Linear ? static_cast<int>(matrices.size()) : static_cast<int>(fields.size()); }
  bool is_linear() const { return kind == SystemKind::Linear; }

  Mat generator(std::span<const double> w) const {
    require(is_linear(), "generator requires a linear system");
    return convex_combination(matrices, w);
  }
  Vec eval(std::span<const double> w, const Vec& x) const {
    if (is_linear()) return generator(w) * x;
    Vec y(d);
    for (size_t i = 0; i < fields.size(); ++i)
      if (w[i] != 0.0) y += fields[i](x) * w[i];
    return y;
  }
  // Vertices replaced by A_i + lambda I.
  SwitchedSystem shifted(double lambda) const {
    require(is_linear(), "spectral shift requires a linear system");
    std::vector<Mat> out;
    for (const auto& m : matrices) out.push_back(m.shifted(lambda));
    return linear(std::move(out));
  }
};

// ============================================================================
// Trajectories
// ============================================================================

struct Sample {
  double t;
  Vec x;
};

struct Trajectory {
  SwitchedSystem system;
  SwitchingLaw law;
  Vec x0;
  double horizon = 0.0;
  double out_step = 0.0;
  std::vector<Sample> samples;

  Vec state_at(double t) const;
};

namespace detail {

inline void check_state(const Vec& x, double t) {
  if (!x.finite() || x.norm() > 1e300) {
    std::ostringstream os;
    os << "state became non-finite at t=" << t;
    throw NumericalBlowup(os.str(), t);
  }
}

// Propagates x from t0 to t1 under the law. Linear systems use exact
// exponentials; homogeneous ones use classical RK4.
inline Vec propagate(const SwitchedSystem& sys, const SwitchingLaw& law, Vec x, double t0, double t1) {
  if (t1 <= t0) return x;
  law.for_each_piece(t0, t1, [&](double a, double b, size_t k) {
    const auto& w = law.segments()[k].weights;
    if (sys.is_linear()) {
      x = expm(sys.generator(w), b - a) * x;
    } else {
      const double hmax = 1e-3 / sys.lipschitz;
      const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
      const double h = (b - a) / steps;
      for (int s = 0; s < steps; ++s) {
        Vec k1 = sys.eval(w, x);
        Vec k2 = sys.eval(w, x + k1 * (h / 2));
        Vec k3 = sys.eval(w, x + k2 * (h / 2));
        Vec k4 = sys.eval(w, x + k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
      }
    }
    check_state(x, b);
  });
  return x;
}

}  // namespace detail

inline Vec Trajectory::state_at(double t) const {
  require(t >= 0.0 && t <= horizon * (1 + 1e-12) + 1e-12, "time outside the trajectory horizon");
  // Start from the last stored sample at or before t.
  size_t k = 0;
  if (!samples.empty()) {
    auto it = std::upper_bound(samples.begin(), samples.end(), t, [](double v, const Sample& s) { return v < s.t; });
    k = it == samples.begin() ? 0 : static_cast<size_t>(it - samples.begin()) - 1;
    return detail::propagate(system, law, samples[k].x, samples[k].t, t);
  }
  return detail::propagate(system, law, x0, 0.0, t);
}

// Samples at t = k * out_step (plus the horizon itself when not aligned).
inline Trajectory integrate(const SwitchedSystem& sys, const SwitchingLaw& law, const Vec& x0, double horizon,
                            double out_step) {
  require(x0.size() == sys.dim() && x0.finite(), "initial state has the wrong dimension");
  require(law.count() == sys.count(), "law weights must match the vertex count");
  require(std::isfinite(horizon) && horizon > 0.0, "horizon must be positive");
  require(std::isfinite(out_step) && out_step > 0.0 && out_step <= horizon, "output step must be in (0, horizon]");
  Trajectory tr{sys, law, x0, horizon, out_step, {}};
  const long nsteps = static_cast<long>(std::floor(horizon / out_step + 1e-9));
  tr.samples.reserve(nsteps + 2);
  tr.samples.push_back({0.0, x0});
  Vec x = x0;
  double t = 0.0;
  // Exponentials of full output steps inside one segment are cached.
  std::map<size_t, Mat> step_cache;
  for (long s = 1; s <= nsteps + 1; ++s) {
    double tn = s <= nsteps ? s * out_step : horizon;
    if (tn <= t + 1e-15 * std::max(1.0, horizon)) break;
    if (sys.is_linear()) {
      auto [k, off] = law.locate(t);
      const auto& seg = law.segments()[k];
      const bool last_hold = !law.periodic() && k == law.segments().size() - 1;
      const bool inside = last_hold || off + (tn - t) <= seg.duration;
      if (inside && std::abs((tn - t) - out_step) <= 1e-14 * std::max(1.0, tn)) {
        auto it = step_cache.find(k);
        if (it == step_cache.end()) it = step_cache.emplace(k, expm(sys.generator(seg.weights), out_step)).first;
        x = it->second * x;
        detail::check_state(x, tn);
      } else {
        x = detail::propagate(sys, law, x, t, tn);
      }
    } else {
      x = detail::propagate(sys, law, x, t, tn);
    }
    tr.samples.push_back({tn, x});
    t = tn;
  }
  return tr;
}

// sigma^tau: the trajectory t -> phi(t + tau) on [0, horizon - tau].
inline Trajectory shift(const Trajectory& tr, double tau) {
  require(tau >= 0.0 && tau < tr.horizon, "shift must lie inside the horizon");
  Vec x = tr.state_at(tau);
  return integrate(tr.system, tr.law.shifted(tau), x, tr.horizon - tau, std::min(tr.out_step, tr.horizon - tau));
}

// Follows a on [0, tau] and b's law from tau on; both must agree at tau.
inline Trajectory concatenate(const Trajectory& a, double tau, const Trajectory& b, double glue_tol = 1e-9) {
  require(tau > 0.0 && tau <= a.horizon && tau < b.horizon, "splice time outside the horizons");
  const Vec xa = a.state_at(tau), xb = b.state_at(tau);
  const double gap = (xa - xb).norm();
  if (gap > glue_tol) {
    std::ostringstream os;
    os << "trajectories disagree at the splice time: gap " << gap;
    throw SwitchingMismatch(os.str(), gap);
  }
  std::vector<Segment> segs = a.law.truncated(tau).segments();
  const auto tail = b.law.shifted(tau).truncated(b.horizon - tau).segments();
  segs.insert(segs.end(), tail.begin(), tail.end());
  SwitchingLaw law = SwitchingLaw(std::move(segs), false).compacted();
  return integrate(a.system, law, a.x0, b.horizon, a.out_step);
}

// Iterated splicing at strictly increasing times tau[k] (between trajs[k] and trajs[k+1]).
inline Trajectory concatenate_schedule(const std::vector<Trajectory>& trajs, const std::vector<double>& taus,
                                       double glue_tol = 1e-9) {
  require(!trajs.empty() && taus.size() + 1 == trajs.size(), "need one splice time per junction");
  for (size_t k = 1; k < taus.size(); ++k) require(taus[k] > taus[k - 1], "splice times must increase");
  Trajectory out = trajs.front();
  for (size_t k = 0; k < taus.size(); ++k) out = concatenate(out, taus[k], trajs[k + 1], glue_tol);
  return out;
}

// Ordered product of the segment exponentials over one period.
inline Mat monodromy(const SwitchedSystem& sys, const SwitchingLaw& law) {
  require(sys.is_linear(), "monodromy requires a linear system");
  require(law.count() == sys.count(), "law weights must match the vertex count");
  Mat M = Mat::identity(sys.dim());
  for (const auto& s : law.segments()) M = expm(sys.generator(s.weights), s.duration) * M;
  return M;
}

}  // namespace swlab
