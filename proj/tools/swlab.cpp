// Batch front door: one command per process, JSON documents in, reports,
// CSV trajectories and SVG figures out.
//
// Exit status: 0 success, 2 invalid input, 3 not converged, 4 falsification.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "swlab/io.hpp"

using namespace swlab;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 2, kNotConverged = 3, kFalsified = 4 };

struct RunConfig {
  std::string command;
  std::string input;
  std::string out = ".";
  uint64_t seed = 0;
  std::optional<double> tol, horizon, step;
  std::optional<int> depth, grid;
};

void write_text(const RunConfig& cfg, const std::string& name, const std::string& text) {
  fs::create_directories(cfg.out);
  const fs::path p = fs::path(cfg.out) / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write " + p.string());
  os << text;
  std::cout << p.string() << '\n';
}

void write_json(const RunConfig& cfg, const std::string& name, const io::json& j) {
  write_text(cfg, name, io::dump(j));
}

SvgLayer plane_layer(const std::vector<Vec>& xs, const std::string& stroke, double width, bool closed) {
  SvgLayer l;
  std::vector<Point2> pts;
  for (const auto& x : xs) pts.push_back({x[0], x.size() > 1 ? x[1] : 0.0});
  l.polylines.push_back(std::move(pts));
  l.stroke = stroke;
  l.width = width;
  l.closed = closed;
  return l;
}

std::vector<Vec> states(const Trajectory& tr, ProjectionKind kind, size_t from = 0) {
  std::vector<Vec> out;
  for (size_t k = from; k < tr.samples.size(); ++k)
    out.push_back(kind == ProjectionKind::Hopf ? project(kind, tr.samples[k].x) : tr.samples[k].x);
  return out;
}

RateOptions rate_options(const RunConfig& cfg) {
  RateOptions o;
  if (cfg.depth) {
    require(*cfg.depth >= 1 && *cfg.depth <= 16, "--depth must lie in [1, 16]");
    o.depth = *cfg.depth;
  }
  if (cfg.tol) {
    require(*cfg.tol > 0, "--tol must be positive");
    o.target_gap = *cfg.tol;
  }
  return o;
}

SphereGrid norm_grid(int d, const RunConfig& cfg) {
  if (d == 2) {
    const int M = cfg.grid.value_or(28800);
    require(M >= 8, "--grid must be at least 8 circle points");
    return SphereGrid::circle(M);
  }
  const int n = cfg.grid.value_or(64);
  require(n >= 2 && n <= 512, "--grid must lie in [2, 512] subdivisions");
  return SphereGrid::cross_polytope(d, n);
}

BarabanovOptions norm_options(int d, const RunConfig& cfg) {
  BarabanovOptions o;
  o.dwell_grid = {d == 2 ? 0.005 : 0.1};
  o.increment_tol = d == 2 ? 1e-8 : 1e-7;
  if (cfg.tol) {
    require(*cfg.tol > 0, "--tol must be positive");
    o.increment_tol = *cfg.tol;
  }
  if (cfg.horizon) {
    require(*cfg.horizon > 0, "--horizon must be positive");
    o.horizon = *cfg.horizon;
  }
  return o;
}

io::SystemDocument load_system(const RunConfig& cfg) { return io::parse_system(io::read_file(cfg.input)); }

int cmd_rate(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  const RateBounds b = uniform_rate(doc.system, rate_options(cfg));
  write_json(cfg, "rate.json", io::json{{"command", "rate"}, {"rate", io::to_json(b)}});
  return b.converged ? kOk : kNotConverged;
}

int cmd_simulate(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  require(doc.law.has_value(), "simulate needs a law in the input document");
  require(doc.x0.has_value(), "simulate needs x0 in the input document");
  const double horizon = cfg.horizon.value_or(doc.law->total_duration());
  const double step = cfg.step.value_or(0.01);
  require(horizon > 0 && step > 0, "--horizon and --step must be positive");
  const Trajectory tr = integrate(doc.system, *doc.law, *doc.x0, horizon, step);
  std::ostringstream os;
  io::write_csv(os, tr);
  write_text(cfg, "trajectory.csv", os.str());
  return kOk;
}

int cmd_barabanov(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  require(!doc.is_complex(), "barabanov takes a real system; use complex2d for complex input");
  const int d = doc.system.dim();
  require(d >= 2 && d <= 4, "barabanov needs dim in [2, 4]");
  const NormApprox n = compute_barabanov(doc.system, norm_grid(d, cfg), norm_options(d, cfg));
  std::ostringstream table;
  n.write_table(table);
  write_text(cfg, "norm.txt", table.str());
  const double tau = cfg.step.value_or(0.01);
  const double check_tol = 1e-3;
  // Planar norms are probed on a fixed 720-point circle, others at the grid.
  const std::vector<Vec> probes = d == 2 ? SphereGrid::circle(720).points() : std::vector<Vec>{};
  const BarabanovReport r1 = check_barabanov(n, doc.system, tau, check_tol, probes);
  const BarabanovReport r2 = check_barabanov(n, doc.system, tau / 2, check_tol, probes);
  write_json(cfg, "barabanov.json",
             io::json{{"command", "barabanov"},
                      {"norm", io::norm_summary(n)},
                      {"check", io::to_json(r1)},
                      {"check_half_tau", io::to_json(r2)}});
  return n.converged && r1.pass() ? kOk : kNotConverged;
}

int cmd_find_periodic(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  const double step = cfg.step.value_or(0.01);
  if (doc.is_complex()) {
    Complex2dOptions o;
    o.rate = rate_options(cfg);
    if (cfg.horizon) o.horizon = *cfg.horizon;
    if (cfg.grid) o.grid_n = *cfg.grid;
    o.step = step;
    const ComplexClassification cc = complex2d_classify(doc.complex, o);
    require(cc.base.verdict != Verdict::GUES, "the system is GUES; no periodic witness exists");
    if (!cc.base.witness) {
      write_json(cfg, "witness.json", io::json{{"command", "find-periodic"}, {"found", false}});
      return kNotConverged;
    }
    const auto shifted = doc.system.shifted(-cc.base.witness_shift);
    io::json j{{"command", "find-periodic"},
               {"found", true},
               {"witness_shift", cc.base.witness_shift},
               {"witness", io::to_json(*cc.base.witness)},
               {"revalidated_gap", io::revalidate(shifted, *cc.base.witness, true)}};
    write_json(cfg, "witness.json", j);
    return kOk;
  }
  const int d = doc.system.dim();
  require(d >= 2 && d <= 3, "find-periodic needs dim 2 or 3 (complex input for 4)");
  Vec x0 = doc.x0.value_or(Vec::unit(d, 0));
  require(x0.norm() > 0, "x0 must be nonzero");
  const double horizon = cfg.horizon.value_or(60.0);
  require(horizon > 0 && step > 0, "--horizon and --step must be positive");
  Trajectory tr;
  std::string engine;
  if (doc.system.count() == 1) {
    tr = integrate(doc.system, SwitchingLaw::vertex(1, 0, horizon), x0, horizon, step);
    engine = "single flow";
  } else {
    const NormApprox n = compute_barabanov(doc.system, norm_grid(d, cfg), norm_options(d, cfg));
    tr = extremal_trajectory(n, doc.system, x0, step, horizon);
    engine = "extremal trajectory";
  }
  FindPeriodicOptions fo;
  fo.transient = std::min(10.0, horizon / 4);
  fo.recurrence.min_return = 1.0;
  if (cfg.tol) fo.close.accept_tol = *cfg.tol;
  const FindPeriodicResult r = find_periodic(tr, fo);
  SvgLayer path = plane_layer(states(tr, ProjectionKind::Real), "gray", 0.5, false);
  std::vector<SvgLayer> layers{path};
  io::json j{{"command", "find-periodic"}, {"engine", engine}, {"recurrences", r.events.size()}, {"found", r.found}};
  if (r.found) {
    j["witness"] = io::to_json(r.witness);
    j["revalidated_gap"] = io::revalidate(doc.system, r.witness);
    if (r.witness.kind == WitnessKind::Periodic) {
      const Trajectory orbit = integrate(doc.system, r.witness.law, r.witness.point, r.witness.period,
                                         r.witness.period / 400);
      layers.push_back(plane_layer(states(orbit, ProjectionKind::Real), "red", 2.0, true));
    }
  }
  write_json(cfg, "witness.json", j);
  std::ostringstream svg;
  write_svg(svg, layers);
  write_text(cfg, "orbit.svg", svg.str());
  return r.found ? kOk : kNotConverged;
}

int cmd_classify(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  if (doc.is_complex()) {
    Complex2dOptions o;
    o.rate = rate_options(cfg);
    if (cfg.horizon) o.horizon = *cfg.horizon;
    if (cfg.grid) o.grid_n = *cfg.grid;
    const ComplexClassification cc = complex2d_classify(doc.complex, o);
    io::json j{{"command", "classify"}, {"complex", true}, {"classification", io::to_json(cc)}};
    write_json(cfg, "classification.json", j);
    return cc.base.converged ? kOk : kNotConverged;
  }
  ClassifyOptions o;
  o.rate = rate_options(cfg);
  o.seed = cfg.seed;
  if (cfg.horizon) o.horizon = *cfg.horizon;
  if (cfg.grid) {
    o.circle_points = *cfg.grid;
    o.cross_polytope_n = *cfg.grid;
  }
  if (cfg.step) o.step = *cfg.step;
  const Classification c = classify(doc.system, o);
  io::json j{{"command", "classify"}, {"complex", false}, {"classification", io::to_json(c)}};
  if (c.witness) {
    const auto shifted = doc.system.shifted(-c.witness_shift);
    j["revalidated_gap"] = io::revalidate(shifted, *c.witness);
  }
  write_json(cfg, "classification.json", j);
  return c.converged ? kOk : kNotConverged;
}

int cmd_probe(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  const int d = doc.system.dim();
  require(d == 3, "probe needs a real system of dim 3");
  const NormApprox n = compute_barabanov(doc.system, norm_grid(d, cfg), norm_options(d, cfg));
  const ProbeReport r = non_uniqueness_probe(doc.system, n);
  write_json(cfg, "probe.json", io::json{{"command", "probe"}, {"norm", io::norm_summary(n)}, {"probe", io::to_json(r)}});
  if (!r.hypothesis_holds) return kInvalid;
  return r.branches.empty() ? kFalsified : kOk;
}

int cmd_three_discs(const RunConfig& cfg) {
  const ThreeDiscsInput in = io::parse_geometry(io::read_file(cfg.input));
  const ReversedArc scan = three_discs_reversed_arc(in);
  const ReversedArc walk = three_discs_face_walk(in);
  auto interval = [&](const ReversedArc& r) {
    return io::json{{"a", r.interval.a}, {"b", r.interval.b}, {"engine", r.engine},
                    {"valid", valid_reverse_transit(in, r.interval)}};
  };
  write_json(cfg, "interval.json", io::json{{"command", "three-discs"}, {"scan", interval(scan)}, {"face_walk", interval(walk)}});
  std::ostringstream svg;
  write_svg(svg,
            {{{in.psi.vertices()}, "black", 1.0, true},
             {{curve_piece(in.psi, in.fwd1), curve_piece(in.psi, in.fwd2)}, "blue", 2.0, false},
             {{curve_piece(in.psi, scan.interval)}, "red", 2.5, false}},
            {in.d1, in.d2, in.d3});
  write_text(cfg, "arrangement.svg", svg.str());
  if (!valid_reverse_transit(in, scan.interval) || !valid_reverse_transit(in, walk.interval))
    throw Falsification("reported interval fails the reverse-transit conclusion");
  return kOk;
}

int cmd_tensor_demo(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  require(!doc.is_complex() && doc.system.dim() == 2, "tensor-demo needs a real planar pair");
  TensorDemoOptions o;
  o.sampler.seed = cfg.seed;
  if (cfg.step) o.step = *cfg.step;
  if (cfg.horizon) o.periods = *cfg.horizon;
  if (cfg.tol) o.rate_tol = *cfg.tol;
  const TensorDemoReport r = tensor_demo(doc.system, o);
  write_json(cfg, "tensor.json", io::json{{"command", "tensor-demo"}, {"seed", cfg.seed}, {"report", io::to_json(r)}});
  return r.separation() ? kOk : kNotConverged;
}

int cmd_complex2d(const RunConfig& cfg) {
  auto doc = load_system(cfg);
  require(doc.is_complex(), "complex2d needs complex_matrices");
  Complex2dOptions o;
  o.rate = rate_options(cfg);
  if (cfg.horizon) o.horizon = *cfg.horizon;
  if (cfg.grid) o.grid_n = *cfg.grid;
  if (cfg.step) o.step = *cfg.step;
  const ComplexClassification cc = complex2d_classify(doc.complex, o);
  io::json j{{"command", "complex2d"}, {"report", io::to_json(cc)}};
  if (cc.base.witness)
    j["revalidated_gap"] = io::revalidate(doc.system.shifted(-cc.base.witness_shift), *cc.base.witness, true);
  write_json(cfg, "complex2d.json", j);
  return cc.base.converged ? kOk : kNotConverged;
}

int dispatch(const RunConfig& cfg) {
  if (cfg.command == "rate") return cmd_rate(cfg);
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "barabanov") return cmd_barabanov(cfg);
  if (cfg.command == "find-periodic") return cmd_find_periodic(cfg);
  if (cfg.command == "classify") return cmd_classify(cfg);
  if (cfg.command == "probe") return cmd_probe(cfg);
  if (cfg.command == "three-discs") return cmd_three_discs(cfg);
  if (cfg.command == "tensor-demo") return cmd_tensor_demo(cfg);
  if (cfg.command == "complex2d") return cmd_complex2d(cfg);
  throw InvalidArgument("unknown command " + cfg.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swlab: switched linear systems workbench"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto add = [&](const char* name, const char* desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("input", cfg.input, "input document")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--tol", cfg.tol, "tolerance override");
    sub->add_option("--horizon", cfg.horizon, "horizon override");
    sub->add_option("--step", cfg.step, "sampling step override");
    sub->add_option("--depth", cfg.depth, "rate search depth");
    sub->add_option("--grid", cfg.grid, "sphere grid resolution");
    sub->callback([&cfg, name] { cfg.command = name; });
  };
  add("rate", "uniform exponential rate bounds");
  add("simulate", "integrate the document's law from x0 to CSV");
  add("barabanov", "Barabanov norm table and check report");
  add("find-periodic", "recurrence search for a periodic witness");
  add("classify", "stability classification report");
  add("probe", "non-uniqueness probe of extremal trajectories (dim 3)");
  add("three-discs", "reverse transit of the three-discs configuration");
  add("tensor-demo", "dimension-4 tensor counterexample report");
  add("complex2d", "complex 2x2 pipeline report");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }
  try {
    return dispatch(cfg);
  } catch (const Falsification& e) {
    std::cerr << "falsification: " << e.what() << '\n';
    return kFalsified;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const DegenerateInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const NotAtBoundary& e) {
    std::cerr << "invalid input: system is not at the stability boundary: " << e.what() << '\n';
    return kInvalid;
  } catch (const SwitchingMismatch& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const ApproximationFailure& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const NumericalBlowup& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNotConverged;
  }
}
