#pragma once
// Interchange documents. Every input is a JSON object with a "format" tag and
// explicit dimension fields; unknown fields are rejected so recipes stay
// archival. Requires nlohmann/json.

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swlab/stability.hpp"

namespace swlab::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSystemFormat = "swlab-system";
inline constexpr const char* kGeometryFormat = "swlab-geometry";

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

inline json parse_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(where + ": not a JSON document (" + e.what() + ")");
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open input document " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

inline void check_fields(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw InvalidArgument(where + ": unknown field '" + k + "'");
}

inline const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw InvalidArgument(where + ": missing field '" + name + "'");
  return j.at(name);
}

inline double number(const json& j, const std::string& where) {
  require(j.is_number(), where + " must be a number");
  const double x = j.get<double>();
  require(std::isfinite(x), where + " must be finite");
  return x;
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  require(j.is_array(), where + " must be an array of numbers");
  std::vector<double> out;
  for (size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline SwitchingLaw law_from_json(const json& segs, bool periodic, int count) {
  require(segs.is_array() && !segs.empty(), "law must be a nonempty array of segments");
  std::vector<Segment> out;
  for (size_t k = 0; k < segs.size(); ++k) {
    const std::string w = "law[" + std::to_string(k) + "]";
    check_fields(segs[k], {"duration", "weights"}, w);
    Segment s;
    s.duration = number(field(segs[k], "duration", w), w + ".duration");
    s.weights = numbers(field(segs[k], "weights", w), w + ".weights");
    require(static_cast<int>(s.weights.size()) == count, w + ".weights must have one entry per matrix");
    out.push_back(std::move(s));
  }
  return SwitchingLaw(std::move(out), periodic);
}

struct SystemDocument {
  SwitchedSystem system;           // realified when the input is complex
  std::vector<CMat2> complex;      // nonempty for complex documents
  std::optional<SwitchingLaw> law;
  std::optional<Vec> x0;
  bool is_complex() const { return !complex.empty(); }
};

// {format, dim, matrices | complex_matrices, law?, periodic?, x0?, comment?}
// Real matrices are row-major arrays of dim^2 numbers. Complex matrices
// (dim 2 only) are row-major arrays of four [re, im] pairs.
inline SystemDocument parse_system(const json& j) {
  const std::string w = "system document";
  check_fields(j, {"format", "dim", "matrices", "complex_matrices", "law", "periodic", "x0", "comment"}, w);
  require(field(j, "format", w) == kSystemFormat, w + ": format must be \"" + std::string(kSystemFormat) + "\"");
  const json& jd = field(j, "dim", w);
  require(jd.is_number_integer(), w + ": dim must be an integer");
  const int d = jd.get<int>();
  require(d >= 1 && d <= kMaxDim, w + ": dim must lie in [1, " + std::to_string(kMaxDim) + "]");
  require(j.contains("matrices") != j.contains("complex_matrices"),
          w + ": exactly one of matrices and complex_matrices is required");
  SystemDocument doc;
  if (j.contains("matrices")) {
    const json& jm = j.at("matrices");
    require(jm.is_array() && !jm.empty(), w + ": matrices must be a nonempty array");
    std::vector<Mat> mats;
    for (size_t k = 0; k < jm.size(); ++k) {
      auto xs = numbers(jm[k], w + ".matrices[" + std::to_string(k) + "]");
      require(static_cast<int>(xs.size()) == d * d,
              w + ".matrices[" + std::to_string(k) + "] must have dim^2 = " + std::to_string(d * d) + " entries");
      mats.push_back(Mat::from_row_major(d, xs));
    }
    doc.system = SwitchedSystem::linear(std::move(mats));
  } else {
    require(d == 2, w + ": complex_matrices require dim 2");
    const json& jm = j.at("complex_matrices");
    require(jm.is_array() && !jm.empty(), w + ": complex_matrices must be a nonempty array");
    for (size_t k = 0; k < jm.size(); ++k) {
      const std::string wk = w + ".complex_matrices[" + std::to_string(k) + "]";
      require(jm[k].is_array() && jm[k].size() == 4, wk + " must have four [re, im] entries");
      CMat2 T;
      for (int e = 0; e < 4; ++e) {
        auto z = numbers(jm[k][e], wk + "[" + std::to_string(e) + "]");
        require(z.size() == 2, wk + "[" + std::to_string(e) + "] must be [re, im]");
        T(e / 2, e % 2) = cplx(z[0], z[1]);
      }
      doc.complex.push_back(T);
    }
    doc.system = realify_system(doc.complex);
  }
  bool periodic = false;
  if (j.contains("periodic")) {
    require(j.at("periodic").is_boolean(), w + ": periodic must be a boolean");
    periodic = j.at("periodic").get<bool>();
  }
  if (j.contains("law")) doc.law = law_from_json(j.at("law"), periodic, doc.system.count());
  else require(!j.contains("periodic"), w + ": periodic given without a law");
  if (j.contains("x0")) {
    auto xs = numbers(j.at("x0"), w + ".x0");
    require(static_cast<int>(xs.size()) == doc.system.dim(), w + ".x0 must have dim entries (realified for complex)");
    doc.x0 = Vec::from(xs);
  }
  return doc;
}

// {format, curves: [[[x, y], ...]], discs: [{cx, cy, r} x 3], intervals: [[a, b], [c, d]], comment?}
// Parameters run over the closed curve with vertex k at parameter k.
inline ThreeDiscsInput parse_geometry(const json& j) {
  const std::string w = "geometry document";
  check_fields(j, {"format", "curves", "discs", "intervals", "comment"}, w);
  require(field(j, "format", w) == kGeometryFormat, w + ": format must be \"" + std::string(kGeometryFormat) + "\"");
  const json& jc = field(j, "curves", w);
  require(jc.is_array() && jc.size() == 1, w + ": curves must hold exactly one closed curve");
  std::vector<Point2> pts;
  for (size_t k = 0; k < jc[0].size(); ++k) {
    auto p = numbers(jc[0][k], w + ".curves[0][" + std::to_string(k) + "]");
    require(p.size() == 2, w + ".curves[0][" + std::to_string(k) + "] must be [x, y]");
    pts.push_back({p[0], p[1]});
  }
  const json& jdisc = field(j, "discs", w);
  require(jdisc.is_array() && jdisc.size() == 3, w + ": discs must hold D1, D2, D3");
  std::array<Disc, 3> discs;
  for (size_t k = 0; k < 3; ++k) {
    const std::string wk = w + ".discs[" + std::to_string(k) + "]";
    check_fields(jdisc[k], {"cx", "cy", "r"}, wk);
    discs[k] = {{number(field(jdisc[k], "cx", wk), wk + ".cx"), number(field(jdisc[k], "cy", wk), wk + ".cy")},
                number(field(jdisc[k], "r", wk), wk + ".r")};
    require(discs[k].radius > 0, wk + ".r must be positive");
  }
  const json& ji = field(j, "intervals", w);
  require(ji.is_array() && ji.size() == 2, w + ": intervals must hold the two forward transits");
  std::array<ParamInterval, 2> iv;
  for (size_t k = 0; k < 2; ++k) {
    auto ab = numbers(ji[k], w + ".intervals[" + std::to_string(k) + "]");
    require(ab.size() == 2, w + ".intervals[" + std::to_string(k) + "] must be [a, b]");
    iv[k] = {ab[0], ab[1]};
  }
  ThreeDiscsInput in{PolyCurve(pts), discs[0], discs[1], discs[2], iv[0], iv[1]};
  validate_three_discs(in);
  return in;
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

// Non-finite numbers become strings so documents stay valid JSON.
inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (double x : m.row_major()) a.push_back(num(x));
  return a;
}

inline json law_segments(const SwitchingLaw& law) {
  json a = json::array();
  for (const auto& s : law.segments()) {
    json w = json::array();
    for (double x : s.weights) w.push_back(x);
    a.push_back(json{{"duration", s.duration}, {"weights", w}});
  }
  return a;
}

inline json to_json(const SwitchingLaw& law) {
  if (law.segments().empty()) return nullptr;
  return json{{"periodic", law.periodic()}, {"segments", law_segments(law)}};
}

inline json system_document(const SwitchedSystem& sys, const std::optional<SwitchingLaw>& law = {},
                            const std::optional<Vec>& x0 = {}) {
  json j{{"format", kSystemFormat}, {"dim", sys.dim()}};
  json mats = json::array();
  for (const auto& m : sys.matrices) mats.push_back(to_json(m));
  j["matrices"] = mats;
  if (law) {
    j["law"] = law_segments(*law);
    j["periodic"] = law->periodic();
  }
  if (x0) j["x0"] = to_json(*x0);
  return j;
}

inline json to_json(const RateBounds& b) {
  json dw = json::array();
  for (double x : b.dwell_grid) dw.push_back(x);
  return json{{"lower", num(b.lower)},
              {"upper", num(b.upper)},
              {"gap", num(b.gap())},
              {"converged", b.converged},
              {"lower_method", b.lower_method},
              {"lower_witness", to_json(b.lower_witness)},
              {"upper_certificate", b.upper_certificate},
              {"quadratic_upper", num(b.quadratic_upper)},
              {"quadratic_form", to_json(b.quadratic_form)},
              {"dwell_grid", dw},
              {"depth_reached", b.depth_reached},
              {"products_examined", b.products_examined},
              {"budget_exhausted", b.budget_exhausted},
              {"pruning_active", b.pruning_active}};
}

inline json to_json(const PeriodicWitness& w) {
  return json{{"kind", to_string(w.kind)},
              {"point", to_json(w.point)},
              {"law", to_json(w.law)},
              {"period", num(w.period)},
              {"closure_gap", num(w.closure_gap)},
              {"monodromy_radius", num(w.monodromy_radius)},
              {"phase", num(w.phase)},
              {"converged", w.converged},
              {"source", w.source}};
}

inline json to_json(const BarabanovReport& r) {
  return json{{"tau", r.tau},
              {"nonexpansiveness", num(r.nonexpansiveness)},
              {"extremality", num(r.extremality)},
              {"nonexpansive_pass", r.nonexpansive_pass},
              {"extremal_pass", r.extremal_pass},
              {"probes", r.probes}};
}

inline json norm_summary(const NormApprox& n) {
  return json{{"grid_points", n.grid.size()},  {"grid_mesh", n.grid.mesh()},
              {"horizon", n.horizon},           {"sweeps", n.sweeps},
              {"last_increment", n.last_increment}, {"anchor", num(n.anchor)},
              {"min_value", n.min_value()},     {"max_value", n.max_value()},
              {"converged", n.converged},       {"reducibility_warning", n.reducibility_warning}};
}

inline json to_json(const Classification& c) {
  json subs = json::array();
  for (const auto& s : c.invariant_subspaces) {
    json basis = json::array();
    for (const auto& b : s.basis) basis.push_back(to_json(b));
    subs.push_back(json{{"dim", s.dim}, {"basis", basis}, {"residual", s.residual}});
  }
  json blocks = json::array();
  for (const auto& b : c.block.blocks) blocks.push_back(to_json(b));
  json sizes = json::array();
  for (int s : c.block.sizes) sizes.push_back(s);
  json notes = json::array();
  for (const auto& n : c.notes) notes.push_back(n);
  json j{{"verdict", to_string(c.verdict)},
         {"rate", to_json(c.rate_bounds)},
         {"bound_width", num(c.bound_width)},
         {"kappa", num(c.kappa)},
         {"case_tag", to_string(c.case_tag)},
         {"invariant_subspaces", subs},
         {"block_form", json{{"sizes", sizes},
                             {"basis", c.block.blocks.empty() ? json(nullptr) : to_json(c.block.X)},
                             {"blocks", blocks},
                             {"residual", c.block.residual}}},
         {"barabanov_converged", c.barabanov_converged},
         {"witness_shift", num(c.witness_shift)},
         {"witness", c.witness ? to_json(*c.witness) : json(nullptr)},
         {"converged", c.converged},
         {"notes", notes}};
  return j;
}

inline json to_json(const PasReport& p) {
  json fails = json::array();
  for (const auto& f : p.failures) fails.push_back(json{{"law", to_json(f.law)}, {"radius", f.radius}});
  return json{{"trials", p.trials},
              {"constant_laws", p.constant_laws},
              {"max_radius", p.max_radius},
              {"worst", to_json(p.worst)},
              {"failures", fails},
              {"pas_holds", p.pas_holds()}};
}

inline json to_json(const TensorDemoReport& r) {
  return json{{"pas", to_json(r.pas)},
              {"pair_lower", num(r.pair_lower)},
              {"pair_upper", num(r.pair_upper)},
              {"tensor_rate_upper", num(r.rate_upper)},
              {"product_witness",
               json{{"base_period", r.base_period},
                    {"horizon", r.horizon},
                    {"periods", r.base_period > 0 ? r.horizon / r.base_period : 0.0},
                    {"fitted_rate", num(r.fitted_rate)},
                    {"norm_ratio", num(r.norm_ratio)},
                    {"factor", to_json(r.factor)}}},
              {"pas_holds", r.pas_holds},
              {"gues_fails", r.gues_fails},
              {"separation", r.separation()}};
}

inline json to_json(const ComplexClassification& cc) {
  json j = to_json(cc.base);
  json lines = json::array();
  for (const auto& z : cc.common_lines) lines.push_back(to_json(realify(z)));
  j["common_complex_lines"] = lines;
  j["constant_law_failure"] = cc.constant_law_failure;
  return j;
}

inline json to_json(const ProbeReport& r) {
  json br = json::array();
  for (const auto& b : r.branches) {
    json wa = json::array(), wb = json::array();
    for (double x : b.w_a) wa.push_back(x);
    for (double x : b.w_b) wb.push_back(x);
    br.push_back(json{{"x", to_json(b.x)}, {"w_a", wa}, {"w_b", wb}, {"separation", b.separation}});
  }
  json hw = json::array();
  for (double x : r.hull.weights) hw.push_back(x);
  return json{{"hull_min_abs_det", r.hull.min_abs_det}, {"hull_weights", hw},
              {"hypothesis_holds", r.hypothesis_holds}, {"aborted", r.aborted},
              {"points", r.points},                    {"tied_points", r.tied_points},
              {"branches", br},                        {"note", r.note}};
}

// One row per sample: t, x_1..x_d, active weights w_1..w_N.
inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const int d = tr.system.dim(), N = tr.system.count();
  os << "t";
  for (int i = 1; i <= d; ++i) os << ",x_" << i;
  for (int i = 1; i <= N; ++i) os << ",w_" << i;
  os << '\n';
  os.precision(17);
  for (const auto& s : tr.samples) {
    os << s.t;
    for (int i = 0; i < d; ++i) os << ',' << s.x[i];
    const auto& w = tr.law.weights_at(s.t);
    for (double x : w) os << ',' << x;
    os << '\n';
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Re-validation of an emitted witness through the owning checker: the
// replayed orbit gap for periodic witnesses, |f(x)| for stationary ones.
inline double revalidate(const SwitchedSystem& sys, const PeriodicWitness& w, bool phase_free = false) {
  if (w.kind == WitnessKind::Stationary) {
    const auto& wt = w.law.segments().front().weights;
    return sys.eval(wt, w.point).norm();
  }
  return replay_gap(sys, w, phase_free);
}

}  // namespace swlab::io
