#pragma once

// Plane topology for polygonal Jordan curves: robust orientation tests,
// general position, overlay arrangements with faces traced from a half-edge
// structure, left faces and boundary orientation, polygonal approximation,
// and the three-discs reversed-arc query with two independent engines.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"

namespace swlab {

struct Point2 {
  double x = 0.0, y = 0.0;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const { return x == o.x && y == o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

// ---------------------------------------------------------------------------
// Orientation predicate with an exact fallback
// ---------------------------------------------------------------------------

namespace exact {

inline void two_product(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a, av = s - bv;
  e = (a - av) + (b - bv);
}

// Adds b to a nonoverlapping expansion, dropping zero components.
inline void grow(std::vector<double>& e, double b) {
  std::vector<double> out;
  out.reserve(e.size() + 1);
  double q = b;
  for (double c : e) {
    double s, err;
    two_sum(q, c, s, err);
    if (err != 0.0) out.push_back(err);
    q = s;
  }
  if (q != 0.0) out.push_back(q);
  e.swap(out);
}

// Sign of a x b + b x c + c x a computed without rounding.
inline int orient_sign(const Point2& a, const Point2& b, const Point2& c) {
  const double f[6][2] = {{a.x, b.y}, {-a.y, b.x}, {b.x, c.y}, {-b.y, c.x}, {c.x, a.y}, {-c.y, a.x}};
  std::vector<double> e;
  for (const auto& t : f) {
    double p, err;
    two_product(t[0], t[1], p, err);
    grow(e, err);
    grow(e, p);
  }
  if (e.empty()) return 0;
  return e.back() > 0 ? 1 : -1;
}

}  // namespace exact

// +1 if c lies left of the directed line a->b, -1 if right, 0 if collinear.
// The float determinant is trusted only when it is clearly away from zero.
inline int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  const double l = (b.x - a.x) * (c.y - a.y), r = (b.y - a.y) * (c.x - a.x);
  const double det = l - r;
  const double bound = std::abs(l) + std::abs(r);
  if (std::abs(det) > 1e-10 * bound) return det > 0 ? 1 : -1;
  return exact::orient_sign(a, b, c);
}

// ---------------------------------------------------------------------------
// Curves and discs
// ---------------------------------------------------------------------------

struct Disc {
  Point2 center;
  double radius = 1.0;
  bool contains_open(const Point2& p) const { return distance(p, center) < radius; }
};

inline bool discs_disjoint(const Disc& a, const Disc& b) {
  return distance(a.center, b.center) > a.radius + b.radius;
}

inline double signed_area(const std::vector<Point2>& poly) {
  double s = 0.0;
  for (size_t i = 0, n = poly.size(); i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * s;
}

enum class SegmentRelation { Disjoint, Proper, Degenerate };

// Proper: one transverse crossing in both interiors. Degenerate: touching,
// collinear overlap, or a crossing through an endpoint.
inline SegmentRelation segment_relation(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  if (std::max(p1.x, p2.x) < std::min(q1.x, q2.x) || std::max(q1.x, q2.x) < std::min(p1.x, p2.x) ||
      std::max(p1.y, p2.y) < std::min(q1.y, q2.y) || std::max(q1.y, q2.y) < std::min(p1.y, p2.y))
    return SegmentRelation::Disjoint;
  const int o1 = orient2d(p1, p2, q1), o2 = orient2d(p1, p2, q2);
  const int o3 = orient2d(q1, q2, p1), o4 = orient2d(q1, q2, p2);
  if (o1 * o2 > 0 || o3 * o4 > 0) return SegmentRelation::Disjoint;
  if (o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return SegmentRelation::Proper;
  if (o1 == 0 && o2 == 0) {
    // Collinear: overlapping bounding intervals along the line.
    auto key = [&](const Point2& p) { return std::abs(p2.x - p1.x) >= std::abs(p2.y - p1.y) ? p.x : p.y; };
    const double a0 = std::min(key(p1), key(p2)), a1 = std::max(key(p1), key(p2));
    const double b0 = std::min(key(q1), key(q2)), b1 = std::max(key(q1), key(q2));
    return (a1 < b0 || b1 < a0) ? SegmentRelation::Disjoint : SegmentRelation::Degenerate;
  }
  return SegmentRelation::Degenerate;
}

// Parameters (t on p, s on q) of the crossing of two properly crossing segments.
inline std::pair<double, double> crossing_params(const Point2& p1, const Point2& p2, const Point2& q1,
                                                 const Point2& q2) {
  const Point2 r = p2 - p1, s = q2 - q1, w = q1 - p1;
  const double den = cross(r, s);
  return {std::clamp(cross(w, s) / den, 0.0, 1.0), std::clamp(cross(w, r) / den, 0.0, 1.0)};
}

class PolyCurve {
 public:
  PolyCurve() = default;
  explicit PolyCurve(std::vector<Point2> v) : v_(std::move(v)) {
    require_valid();
  }

  const std::vector<Point2>& vertices() const { return v_; }
  size_t size() const { return v_.size(); }
  const Point2& operator[](size_t k) const { return v_[k % v_.size()]; }
  bool counterclockwise() const { return signed_area(v_) > 0; }

  // Point at parameter s in [0, n): vertex floor(s) plus the fraction along
  // the following edge.
  Point2 at(double s) const {
    const double n = static_cast<double>(v_.size());
    s = std::fmod(s, n);
    if (s < 0) s += n;
    size_t k = static_cast<size_t>(std::floor(s));
    if (k >= v_.size()) k = v_.size() - 1;
    const double t = s - static_cast<double>(k);
    const Point2& a = v_[k];
    const Point2& b = v_[(k + 1) % v_.size()];
    return a + (b - a) * t;
  }

  PolyCurve reversed() const {
    std::vector<Point2> r(v_.rbegin(), v_.rend());
    return PolyCurve(std::move(r));
  }

  // Simplicity audit by exhaustive pairwise segment tests.
  bool simple() const {
    const size_t n = v_.size();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
        const Point2 &a = v_[i], &b = v_[(i + 1) % n], &c = v_[j], &d = v_[(j + 1) % n];
        if (adjacent) {
          // Adjacent edges may only share their common vertex.
          const Point2& shared = j == i + 1 ? b : a;
          const Point2& far1 = j == i + 1 ? a : b;
          const Point2& far2 = j == i + 1 ? d : c;
          if (orient2d(far1, shared, far2) == 0 && dot(far1 - shared, far2 - shared) > 0) return false;
          continue;
        }
        if (segment_relation(a, b, c, d) != SegmentRelation::Disjoint) return false;
      }
    return true;
  }

 private:
  std::vector<Point2> v_;

  void require_valid() const {
    if (v_.size() < 3) throw InvalidArgument("a closed curve needs at least 3 vertices");
    for (size_t i = 0; i < v_.size(); ++i) {
      if (!std::isfinite(v_[i].x) || !std::isfinite(v_[i].y)) throw InvalidArgument("curve vertices must be finite");
      if (v_[i] == v_[(i + 1) % v_.size()]) throw InvalidArgument("consecutive curve vertices must differ");
    }
  }
};

// Regular polygon around a disc centre; `phase` rotates the first vertex.
inline PolyCurve regular_polygon(const Point2& c, double circumradius, int sides, double phase = 0.0) {
  std::vector<Point2> v;
  for (int k = 0; k < sides; ++k) {
    const double t = phase + 2.0 * M_PI * k / sides;
    v.push_back({c.x + circumradius * std::cos(t), c.y + circumradius * std::sin(t)});
  }
  return PolyCurve(std::move(v));
}

// Polygon strictly inside the disc, clearance radius * 1e-3 at the vertices.
inline PolyCurve disc_polygon(const Disc& d, int sides = 64, double phase = 0.0) {
  return regular_polygon(d.center, d.radius * (1.0 - 1e-3), sides, phase);
}

// ---------------------------------------------------------------------------
// General position
// ---------------------------------------------------------------------------

struct GeneralPositionReport {
  bool generic = true;
  std::string reason;
  int crossings = 0;
};

// Pairwise intersections of distinct curves must be proper crossings with no
// two crossings closer than 1e-10 of the picture size (no triple points).
inline GeneralPositionReport check_general_position(const std::vector<PolyCurve>& curves) {
  GeneralPositionReport rep;
  double scale = 0.0;
  for (const auto& c : curves)
    for (const auto& p : c.vertices()) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double sep = 1e-10 * std::max(scale, 1e-300);
  for (size_t a = 0; a < curves.size(); ++a)
    if (!curves[a].simple()) {
      rep.generic = false;
      rep.reason = "curve " + std::to_string(a) + " is not simple";
      return rep;
    }
  std::vector<Point2> pts;
  // Crossings grouped by segment so close pairs on one segment are detected.
  std::map<std::pair<size_t, size_t>, std::vector<double>> on_segment;
  for (size_t a = 0; a < curves.size(); ++a)
    for (size_t b = a + 1; b < curves.size(); ++b) {
      const auto& A = curves[a].vertices();
      const auto& B = curves[b].vertices();
      for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < B.size(); ++j) {
          const Point2 &p1 = A[i], &p2 = A[(i + 1) % A.size()], &q1 = B[j], &q2 = B[(j + 1) % B.size()];
          const auto rel = segment_relation(p1, p2, q1, q2);
          if (rel == SegmentRelation::Disjoint) continue;
          if (rel == SegmentRelation::Degenerate) {
            rep.generic = false;
            rep.reason = "curves " + std::to_string(a) + " and " + std::to_string(b) + " touch or overlap";
            return rep;
          }
          ++rep.crossings;
          auto [t, s] = crossing_params(p1, p2, q1, q2);
          on_segment[{a, i}].push_back(t * distance(p1, p2));
          on_segment[{b, j}].push_back(s * distance(q1, q2));
        }
    }
  for (auto& [key, ts] : on_segment) {
    (void)key;
    std::sort(ts.begin(), ts.end());
    for (size_t k = 0; k + 1 < ts.size(); ++k)
      if (ts[k + 1] - ts[k] <= sep) {
        rep.generic = false;
        rep.reason = "two crossings coincide (triple point)";
        return rep;
      }
  }
  return rep;
}

// Moves vertices by at most eps until the curves are in general position.
// Generic input is returned unchanged.
inline std::vector<PolyCurve> perturb_general_position(const std::vector<PolyCurve>& curves, double eps,
                                                       uint64_t seed, int budget = 40) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("perturbation size must be positive");
  for (const auto& c : curves)
    if (!c.simple()) throw InvalidArgument("curves must be simple before perturbation");
  if (check_general_position(curves).generic) return curves;
  std::mt19937_64 rng(seed);
  for (int attempt = 1; attempt <= budget; ++attempt) {
    // Small moves first; the full eps is reached on the later attempts.
    const double amp = eps * std::min(1.0, std::pow(2.0, attempt - budget / 2));
    std::uniform_real_distribution<double> u(-amp / std::sqrt(2.0), amp / std::sqrt(2.0));
    std::vector<PolyCurve> out;
    bool ok = true;
    for (const auto& c : curves) {
      std::vector<Point2> v = c.vertices();
      for (auto& p : v) p = p + Point2{u(rng), u(rng)};
      try {
        out.emplace_back(std::move(v));
      } catch (const InvalidArgument&) {
        ok = false;
        break;
      }
    }
    if (ok && check_general_position(out).generic) return out;
  }
  throw DegenerateInput("curves stay degenerate after the perturbation budget");
}

// ---------------------------------------------------------------------------
// Plane graphs
// ---------------------------------------------------------------------------

struct GraphVertex {
  Point2 p;
  std::vector<int> curves;  // source curves passing through the vertex
};

struct Arc {
  int tail = -1, head = -1;
  std::vector<Point2> path;        // tail point ... head point
  int curve = -1;                  // source curve tag
  double param_tail = 0.0, param_head = 0.0;  // curve parameters at the ends
};

struct OrientedArc {
  int arc;
  bool forward;  // along the stored tail -> head direction
  bool operator==(const OrientedArc& o) const { return arc == o.arc && forward == o.forward; }
};

struct Face {
  bool unbounded = false;
  std::vector<int> outer;               // half-edge cycle (empty for the unbounded face)
  std::vector<std::vector<int>> holes;  // outer cycles of components inside
};

class PlaneGraph {
 public:
  std::vector<GraphVertex> vertices;
  std::vector<Arc> arcs;
  std::vector<Face> faces;
  std::vector<int> face_of;  // per half-edge 2*arc + (forward ? 0 : 1)
  int components = 0;
  int unbounded_face = -1;

  static int half(int arc, bool forward) { return 2 * arc + (forward ? 0 : 1); }
  int origin(int h) const { return h % 2 == 0 ? arcs[h / 2].tail : arcs[h / 2].head; }
  int target(int h) const { return h % 2 == 0 ? arcs[h / 2].head : arcs[h / 2].tail; }
  OrientedArc oriented(int h) const { return {h / 2, h % 2 == 0}; }

  // Polyline of a half-edge in its direction of travel.
  std::vector<Point2> half_path(int h) const {
    std::vector<Point2> p = arcs[h / 2].path;
    if (h % 2 == 1) std::reverse(p.begin(), p.end());
    return p;
  }

  std::vector<int> degrees() const {
    std::vector<int> d(vertices.size(), 0);
    for (const auto& a : arcs) {
      ++d[a.tail];
      ++d[a.head];
    }
    return d;
  }

  bool euler_holds() const {
    return static_cast<long>(faces.size()) ==
           static_cast<long>(arcs.size()) - static_cast<long>(vertices.size()) + 1 + components;
  }

  // Builds the rotation system, the face cycles and the face nesting.
  void build_faces() {
    const int H = static_cast<int>(arcs.size()) * 2;
    const int V = static_cast<int>(vertices.size());
    for (const auto& a : arcs)
      if (a.tail == a.head) throw InvalidArgument("arcs must join distinct vertices");
    std::vector<std::vector<int>> out(V);
    for (int h = 0; h < H; ++h) out[origin(h)].push_back(h);
    for (int v = 0; v < V; ++v) {
      if (out[v].size() < 2) throw InvalidArgument("every vertex needs degree at least 2");
      const Point2 c = vertices[v].p;
      auto dir = [&](int h) {
        const auto& path = arcs[h / 2].path;
        return h % 2 == 0 ? path[1] : path[path.size() - 2];
      };
      auto upper = [&](const Point2& p) { return p.y > c.y || (p.y == c.y && p.x > c.x); };
      std::sort(out[v].begin(), out[v].end(), [&](int a, int b) {
        const Point2 pa = dir(a), pb = dir(b);
        const bool ua = upper(pa), ub = upper(pb);
        if (ua != ub) return ua;
        return orient2d(c, pa, pb) > 0;
      });
    }
    std::vector<int> pos(H);
    for (int v = 0; v < V; ++v)
      for (size_t k = 0; k < out[v].size(); ++k) pos[out[v][k]] = static_cast<int>(k);
    auto next = [&](int h) {
      const int v = target(h), tw = h ^ 1;
      const auto& ring = out[v];
      const int k = pos[tw];
      return ring[(k + ring.size() - 1) % ring.size()];
    };
    // Face cycles.
    std::vector<int> cycle_of(H, -1);
    std::vector<std::vector<int>> cycles;
    for (int h = 0; h < H; ++h) {
      if (cycle_of[h] >= 0) continue;
      std::vector<int> cyc;
      int e = h;
      while (cycle_of[e] < 0) {
        cycle_of[e] = static_cast<int>(cycles.size());
        cyc.push_back(e);
        e = next(e);
      }
      cycles.push_back(std::move(cyc));
    }
    // Components by union-find over arcs.
    std::vector<int> parent(V);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& a : arcs) parent[find(a.tail)] = find(a.head);
    std::map<int, int> comp_id;
    for (int v = 0; v < V; ++v) comp_id.emplace(find(v), static_cast<int>(comp_id.size()));
    components = static_cast<int>(comp_id.size());
    std::vector<double> area(cycles.size());
    std::vector<std::vector<Point2>> polys(cycles.size());
    for (size_t c = 0; c < cycles.size(); ++c) {
      polys[c] = cycle_polygon(cycles[c]);
      area[c] = signed_area(polys[c]);
    }
    faces.clear();
    faces.push_back(Face{true, {}, {}});
    unbounded_face = 0;
    std::vector<int> face_of_cycle(cycles.size(), -1);
    for (size_t c = 0; c < cycles.size(); ++c)
      if (area[c] > 0) {
        face_of_cycle[c] = static_cast<int>(faces.size());
        faces.push_back(Face{false, cycles[c], {}});
      }
    for (size_t c = 0; c < cycles.size(); ++c) {
      if (area[c] > 0) continue;
      const int comp = comp_id[find(origin(cycles[c][0]))];
      const Point2 probe = vertices[origin(cycles[c][0])].p;
      int best = -1;
      double best_area = std::numeric_limits<double>::infinity();
      for (size_t d = 0; d < cycles.size(); ++d) {
        if (area[d] <= 0 || comp_id[find(origin(cycles[d][0]))] == comp) continue;
        if (area[d] < best_area && point_in_polygon(probe, polys[d])) {
          best = static_cast<int>(d);
          best_area = area[d];
        }
      }
      const int f = best < 0 ? 0 : face_of_cycle[best];
      faces[f].holes.push_back(cycles[c]);
      face_of_cycle[c] = f;
    }
    face_of.assign(H, -1);
    for (size_t c = 0; c < cycles.size(); ++c)
      for (int h : cycles[c]) face_of[h] = face_of_cycle[c];
  }

  std::vector<Point2> cycle_polygon(const std::vector<int>& cyc) const {
    std::vector<Point2> poly;
    for (int h : cyc) {
      auto p = half_path(h);
      poly.insert(poly.end(), p.begin(), p.end() - 1);
    }
    return poly;
  }

  static bool point_in_polygon(const Point2& q, const std::vector<Point2>& poly) {
    // Crossing-number test with exact orientation.
    bool inside = false;
    for (size_t i = 0, n = poly.size(); i < n; ++i) {
      const Point2 &a = poly[i], &b = poly[(i + 1) % n];
      if ((a.y > q.y) != (b.y > q.y)) {
        const int o = orient2d(a, b, q);
        if ((b.y > a.y && o > 0) || (b.y < a.y && o < 0)) inside = !inside;
      }
    }
    return inside;
  }

  // Face containing a point off the graph.
  int locate(const Point2& q) const {
    for (size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].unbounded) continue;
      if (!point_in_polygon(q, cycle_polygon(faces[f].outer))) continue;
      bool in_hole = false;
      for (const auto& hole : faces[f].holes)
        if (point_in_polygon(q, cycle_polygon(hole))) in_hole = true;
      if (!in_hole) return static_cast<int>(f);
    }
    return unbounded_face;
  }

  // Subgraph on a set of arcs, keeping arc geometry and tags. Degree-two
  // vertices of the result are kept as subdivision points.
  PlaneGraph subgraph(const std::vector<int>& arc_ids, std::vector<int>* arc_map = nullptr) const {
    PlaneGraph g;
    std::map<int, int> vmap;
    auto vid = [&](int v) {
      auto it = vmap.find(v);
      if (it != vmap.end()) return it->second;
      const int id = static_cast<int>(g.vertices.size());
      vmap.emplace(v, id);
      g.vertices.push_back(vertices[v]);
      return id;
    };
    if (arc_map) arc_map->clear();
    for (int a : arc_ids) {
      Arc c = arcs[a];
      c.tail = vid(c.tail);
      c.head = vid(c.head);
      g.arcs.push_back(std::move(c));
      if (arc_map) arc_map->push_back(a);
    }
    g.build_faces();
    return g;
  }
};

struct OverlayOptions {
  std::vector<bool> subdividable;  // per curve; curves that may receive extra vertices (default all)
};

// Arrangement of curves in general position. Every crossing becomes a vertex;
// each curve is split into arcs; extra vertices remove loops and parallel arcs.
inline PlaneGraph overlay(const std::vector<PolyCurve>& curves, const OverlayOptions& opt = {}) {
  if (curves.empty()) throw InvalidArgument("overlay needs at least one curve");
  const auto gp = check_general_position(curves);
  if (!gp.generic) throw DegenerateInput("overlay input is not in general position: " + gp.reason);
  std::vector<bool> subdiv = opt.subdividable;
  subdiv.resize(curves.size(), true);
  PlaneGraph g;
  struct Event {
    double param;
    int vertex;
  };
  std::vector<std::vector<Event>> events(curves.size());
  for (size_t a = 0; a < curves.size(); ++a)
    for (size_t b = a + 1; b < curves.size(); ++b) {
      const auto& A = curves[a].vertices();
      const auto& B = curves[b].vertices();
      for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < B.size(); ++j) {
          const Point2 &p1 = A[i], &p2 = A[(i + 1) % A.size()], &q1 = B[j], &q2 = B[(j + 1) % B.size()];
          if (segment_relation(p1, p2, q1, q2) != SegmentRelation::Proper) continue;
          auto [t, s] = crossing_params(p1, p2, q1, q2);
          const int v = static_cast<int>(g.vertices.size());
          g.vertices.push_back({p1 + (p2 - p1) * t, {static_cast<int>(a), static_cast<int>(b)}});
          events[a].push_back({static_cast<double>(i) + t, v});
          events[b].push_back({static_cast<double>(j) + s, v});
        }
    }
  for (size_t c = 0; c < curves.size(); ++c) {
    auto& ev = events[c];
    const size_t n = curves[c].size();
    // Curves with fewer than three vertices on them get evenly spaced extra ones.
    if (ev.size() < 3) {
      const size_t need = 3 - ev.size();
      for (size_t k = 0; k < need; ++k) {
        double s = (static_cast<double>(k) + 0.5) * static_cast<double>(n) / static_cast<double>(need) + 0.25;
        // Keep clear of crossings already on the curve.
        const int v = static_cast<int>(g.vertices.size());
        g.vertices.push_back({curves[c].at(s), {static_cast<int>(c)}});
        ev.push_back({s, v});
      }
    }
    std::sort(ev.begin(), ev.end(), [](const Event& x, const Event& y) { return x.param < y.param; });
  }
  // Arcs between consecutive events along each curve.
  for (size_t c = 0; c < curves.size(); ++c) {
    const auto& ev = events[c];
    const auto& V = curves[c].vertices();
    const size_t n = V.size();
    for (size_t k = 0; k < ev.size(); ++k) {
      const Event& e0 = ev[k];
      const Event& e1 = ev[(k + 1) % ev.size()];
      double s1 = e1.param;
      if (k + 1 == ev.size()) s1 += static_cast<double>(n);
      Arc arc;
      arc.tail = e0.vertex;
      arc.head = e1.vertex;
      arc.curve = static_cast<int>(c);
      arc.param_tail = e0.param;
      arc.param_head = e1.param;
      arc.path.push_back(g.vertices[e0.vertex].p);
      for (long j = static_cast<long>(std::floor(e0.param)) + 1; static_cast<double>(j) < s1; ++j)
        arc.path.push_back(V[static_cast<size_t>(j) % n]);
      arc.path.push_back(g.vertices[e1.vertex].p);
      g.arcs.push_back(std::move(arc));
    }
  }
  // Parallel arcs: keep one per endpoint pair, subdividing the others
  // (subdividable curves first).
  auto split = [&](int a) {
    Arc arc = g.arcs[a];
    const size_t m = arc.path.size();
    Point2 mid;
    std::vector<Point2> first, second;
    if (m > 2) {
      const size_t k = m / 2;
      mid = arc.path[k];
      first.assign(arc.path.begin(), arc.path.begin() + k + 1);
      second.assign(arc.path.begin() + k, arc.path.end());
    } else {
      mid = (arc.path[0] + arc.path[1]) * 0.5;
      first = {arc.path[0], mid};
      second = {mid, arc.path[1]};
    }
    const int v = static_cast<int>(g.vertices.size());
    g.vertices.push_back({mid, {arc.curve}});
    // Parameter of the split point along the source curve.
    double span = arc.param_head - arc.param_tail;
    if (span <= 0) span += static_cast<double>(curves[arc.curve].size());
    double pm = arc.param_tail + 0.5 * span;
    if (m > 2) {
      const double fl = std::floor(arc.param_tail);
      pm = fl + static_cast<double>(m / 2);
    }
    pm = std::fmod(pm, static_cast<double>(curves[arc.curve].size()));
    Arc a1 = arc, a2 = arc;
    a1.head = v;
    a1.path = first;
    a1.param_head = pm;
    a2.tail = v;
    a2.path = second;
    a2.param_tail = pm;
    g.arcs[a] = a1;
    g.arcs.push_back(a2);
  };
  std::map<std::pair<int, int>, std::vector<int>> by_ends;
  for (size_t a = 0; a < g.arcs.size(); ++a) {
    const auto& arc = g.arcs[a];
    by_ends[{std::min(arc.tail, arc.head), std::max(arc.tail, arc.head)}].push_back(static_cast<int>(a));
  }
  for (auto& [ends, group] : by_ends) {
    (void)ends;
    if (group.size() < 2) continue;
    // Keep a non-subdividable arc when there is one.
    std::stable_sort(group.begin(), group.end(),
                     [&](int x, int y) { return !subdiv[g.arcs[x].curve] && subdiv[g.arcs[y].curve]; });
    for (size_t k = 1; k < group.size(); ++k) split(group[k]);
  }
  g.build_faces();
  return g;
}

inline int left_face(const PlaneGraph& g, int arc, bool forward) { return g.face_of[PlaneGraph::half(arc, forward)]; }

// Oriented boundary cycles of a face, each placing the face on its left. The
// outer cycle comes first; hole cycles follow.
inline std::vector<std::vector<OrientedArc>> boundary_orientation(const PlaneGraph& g, int face) {
  if (face < 0 || face >= static_cast<int>(g.faces.size())) throw InvalidArgument("face id out of range");
  std::vector<std::vector<OrientedArc>> out;
  auto conv = [&](const std::vector<int>& cyc) {
    std::vector<OrientedArc> c;
    for (int h : cyc) c.push_back(g.oriented(h));
    return c;
  };
  const Face& f = g.faces[face];
  if (!f.unbounded) out.push_back(conv(f.outer));
  for (const auto& h : f.holes) out.push_back(conv(h));
  return out;
}

// Point slightly to the left of an oriented arc, at fraction u of one of its segments.
inline Point2 left_probe(const PlaneGraph& g, int arc, bool forward, double u = 0.5, double offset = 1e-7) {
  auto p = g.half_path(PlaneGraph::half(arc, forward));
  size_t k = p.size() / 2 - (p.size() % 2 == 0 ? 1 : 0);
  k = std::min(k, p.size() - 2);
  const Point2 a = p[k], b = p[k + 1];
  const Point2 d = b - a;
  const double len = d.norm();
  const Point2 nrm{-d.y / len, d.x / len};
  return a + d * u + nrm * (offset * len);
}

// ---------------------------------------------------------------------------
// Polygonal approximation
// ---------------------------------------------------------------------------

struct PolygonalApprox {
  PolyCurve curve;
  std::vector<size_t> kept;  // sample indices of the output vertices
  double sup_distance = 0.0;
};

namespace detail {

// Largest distance between samples i..j (cyclic) and the chord through
// samples i and j, both parametrised by sample index.
inline std::pair<double, size_t> chord_deviation(const std::vector<Point2>& s, size_t i, size_t j) {
  const size_t n = s.size();
  const size_t len = (j + n - i) % n == 0 ? n : (j + n - i) % n;
  double worst = 0.0;
  size_t at = i;
  for (size_t k = 1; k < len; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(len);
    const Point2 q = s[i] + (s[j] - s[i]) * u;
    const double d = distance(q, s[(i + k) % n]);
    if (d > worst) {
      worst = d;
      at = (i + k) % n;
    }
  }
  return {worst, at};
}

inline void simplify_chain(const std::vector<Point2>& s, size_t i, size_t j, double tol, std::vector<bool>& keep) {
  auto [d, at] = chord_deviation(s, i, j);
  if (d <= tol || at == i) return;
  keep[at] = true;
  simplify_chain(s, i, at, tol, keep);
  simplify_chain(s, at, j, tol, keep);
}

}  // namespace detail

// Simple closed polygon through a subset of the samples, within parametrised
// sup-distance delta of the sampled curve (Douglas-Peucker on sample index).
inline PolygonalApprox polygonal_approx(const std::vector<Point2>& samples, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  PolyCurve input;
  try {
    input = PolyCurve(samples);
  } catch (const InvalidArgument& e) {
    throw ApproximationFailure(std::string("samples do not form a closed curve: ") + e.what());
  }
  if (!input.simple()) throw ApproximationFailure("sampled curve intersects itself");
  const size_t n = samples.size();
  double tol = delta;
  for (int attempt = 0; attempt < 60; ++attempt) {
    // Split at the sample farthest from sample 0, then recurse on both chains.
    std::vector<bool> keep(n, false);
    keep[0] = true;
    size_t far = 0;
    for (size_t k = 1; k < n; ++k)
      if (distance(samples[k], samples[0]) > distance(samples[far], samples[0])) far = k;
    keep[far] = true;
    detail::simplify_chain(samples, 0, far, tol, keep);
    detail::simplify_chain(samples, far, 0, tol, keep);
    std::vector<size_t> kept;
    for (size_t k = 0; k < n; ++k)
      if (keep[k]) kept.push_back(k);
    // At least a triangle: add the sample farthest from the chord.
    while (kept.size() < 3) {
      size_t best = 0;
      double bd = -1;
      for (size_t k = 0; k < n; ++k) {
        if (keep[k]) continue;
        const double d = std::abs(cross(samples[far] - samples[0], samples[k] - samples[0]));
        if (d > bd) {
          bd = d;
          best = k;
        }
      }
      keep[best] = true;
      kept.clear();
      for (size_t k = 0; k < n; ++k)
        if (keep[k]) kept.push_back(k);
    }
    std::vector<Point2> v;
    for (size_t k : kept) v.push_back(samples[k]);
    PolyCurve out;
    try {
      out = PolyCurve(v);
    } catch (const InvalidArgument&) {
      tol *= 0.5;
      continue;
    }
    if (!out.simple() || std::abs(signed_area(v)) == 0.0) {
      tol *= 0.5;
      continue;
    }
    double sup = 0.0;
    for (size_t k = 0; k < kept.size(); ++k)
      sup = std::max(sup, detail::chord_deviation(samples, kept[k], kept[(k + 1) % kept.size()]).first);
    return {out, kept, sup};
  }
  throw ApproximationFailure("no simple polygon within the tolerance");
}

// ---------------------------------------------------------------------------
// Three-discs reversed arc
// ---------------------------------------------------------------------------

// Cyclic parameter interval [a, b] on a closed curve with parameters in [0, n).
struct ParamInterval {
  double a = 0.0, b = 0.0;
};

inline double cyclic_length(double a, double b, double n) {
  double l = std::fmod(b - a, n);
  if (l < 0) l += n;
  return l;
}

inline bool cyclic_contains(const ParamInterval& I, double s, double n) {
  return cyclic_length(I.a, s, n) <= cyclic_length(I.a, I.b, n);
}

// Minimum distance from a point to the curve restricted to a parameter interval.
inline double min_distance_on(const PolyCurve& psi, const ParamInterval& I, const Point2& c) {
  const double n = static_cast<double>(psi.size());
  const double len = cyclic_length(I.a, I.b, n);
  double best = distance(psi.at(I.a), c);
  best = std::min(best, distance(psi.at(I.a + len), c));
  // Walk the pieces between integer parameters.
  for (double s = I.a; s < I.a + len;) {
    const double e = std::min(std::floor(s) + 1.0, I.a + len);
    const Point2 p = psi.at(s), d = psi.at(e) - p;
    const double dd = dot(d, d);
    const double t = dd > 0 ? std::clamp(dot(c - p, d) / dd, 0.0, 1.0) : 0.0;
    best = std::min(best, distance(p + d * t, c));
    s = e;
  }
  return best;
}

struct ThreeDiscsInput {
  PolyCurve psi;
  Disc d1, d2, d3;
  ParamInterval fwd1, fwd2;
};

// Throws InvalidArgument naming the first failed hypothesis.
inline void validate_three_discs(const ThreeDiscsInput& in, double margin = 1e-9) {
  const double n = static_cast<double>(in.psi.size());
  for (const Disc* d : {&in.d1, &in.d2, &in.d3})
    if (!(d->radius > 0) || !std::isfinite(d->radius)) throw InvalidArgument("disc radii must be positive");
  if (!discs_disjoint(in.d1, in.d2) || !discs_disjoint(in.d1, in.d3) || !discs_disjoint(in.d2, in.d3))
    throw InvalidArgument("discs must be pairwise disjoint");
  if (!in.psi.simple()) throw InvalidArgument("curve must be simple");
  int k = 0;
  for (const ParamInterval* I : {&in.fwd1, &in.fwd2}) {
    ++k;
    const std::string tag = "forward interval " + std::to_string(k);
    if (!(distance(in.psi.at(I->a), in.d1.center) < in.d1.radius - margin))
      throw InvalidArgument(tag + ": start is not inside D1");
    if (!(distance(in.psi.at(I->b), in.d2.center) < in.d2.radius - margin))
      throw InvalidArgument(tag + ": end is not inside D2");
    if (!(min_distance_on(in.psi, *I, in.d3.center) > in.d3.radius + margin))
      throw InvalidArgument(tag + ": meets D3");
  }
  // Disjointness of the two cyclic intervals.
  if (cyclic_contains(in.fwd1, in.fwd2.a, n) || cyclic_contains(in.fwd1, in.fwd2.b, n) ||
      cyclic_contains(in.fwd2, in.fwd1.a, n))
    throw InvalidArgument("forward intervals must be disjoint");
}

// Checks the conclusion: psi(c) in Int D2, psi(d) in Int D1, psi([c,d]) misses D3.
inline bool valid_reverse_transit(const ThreeDiscsInput& in, const ParamInterval& r) {
  return in.d2.contains_open(in.psi.at(r.a)) && in.d1.contains_open(in.psi.at(r.b)) &&
         min_distance_on(in.psi, r, in.d3.center) > in.d3.radius;
}

struct Visit {
  int disc;           // 0, 1, 2 for D1, D2, D3
  double enter, exit;  // cyclic parameters; psi is inside on (enter, exit)
  double deepest;      // parameter of the point closest to the centre
};

// Maximal parameter intervals where the curve lies inside each open disc,
// in cyclic order of their entry parameter.
inline std::vector<Visit> disc_visits(const PolyCurve& psi, const std::array<Disc, 3>& discs) {
  const size_t n = psi.size();
  std::vector<Visit> out;
  for (int k = 0; k < 3; ++k) {
    const Disc& D = discs[k];
    // Inside sub-intervals per segment.
    std::vector<std::pair<double, double>> pieces;
    for (size_t i = 0; i < n; ++i) {
      const Point2 p = psi[i], d = psi[i + 1] - psi[i];
      const Point2 w = p - D.center;
      const double A = dot(d, d), B = 2 * dot(w, d), C = dot(w, w) - D.radius * D.radius;
      const double disc = B * B - 4 * A * C;
      if (disc <= 0) continue;
      const double sq = std::sqrt(disc);
      double t0 = (-B - sq) / (2 * A), t1 = (-B + sq) / (2 * A);
      t0 = std::max(t0, 0.0);
      t1 = std::min(t1, 1.0);
      if (t0 >= t1) continue;
      pieces.push_back({static_cast<double>(i) + t0, static_cast<double>(i) + t1});
    }
    if (pieces.empty()) continue;
    // Merge pieces that touch at segment boundaries, cyclically.
    std::vector<std::pair<double, double>> merged;
    for (const auto& pc : pieces) {
      if (!merged.empty() && std::abs(pc.first - merged.back().second) < 1e-12) merged.back().second = pc.second;
      else merged.push_back(pc);
    }
    if (merged.size() > 1 && merged.front().first < 1e-12 &&
        std::abs(merged.back().second - static_cast<double>(n)) < 1e-12) {
      merged.front().first = merged.back().first - static_cast<double>(n);
      merged.pop_back();
    }
    const bool whole = merged.size() == 1 && merged[0].second - merged[0].first >= static_cast<double>(n) - 1e-12;
    for (auto [a, b] : merged) {
      if (whole) throw InvalidArgument("curve lies entirely inside a disc");
      // Deepest point over the visit.
      double best = std::numeric_limits<double>::infinity(), at = 0.5 * (a + b);
      for (double s = a; s < b;) {
        const double e = std::min(std::floor(s) + 1.0, b);
        const Point2 p = psi.at(s), q = psi.at(e);
        const Point2 d = q - p;
        const double dd = dot(d, d);
        const double t = dd > 0 ? std::clamp(dot(D.center - p, d) / dd, 0.0, 1.0) : 0.0;
        const double dist = distance(p + d * t, D.center);
        if (dist < best) {
          best = dist;
          at = s + t * (e - s);
        }
        s = e;
      }
      auto wrap = [&](double s) {
        s = std::fmod(s, static_cast<double>(n));
        return s < 0 ? s + static_cast<double>(n) : s;
      };
      out.push_back({k, wrap(a), wrap(b), wrap(at)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Visit& x, const Visit& y) { return x.enter < y.enter; });
  return out;
}

struct ReversedArc {
  ParamInterval interval;
  std::string engine;
};

// Every minimal reverse transit: a D2 visit followed, before any D3 visit, by
// a D1 visit. The interval runs between the deepest points of the two visits.
inline std::vector<ParamInterval> reverse_transits_scan(const PolyCurve& psi, const Disc& d1, const Disc& d2,
                                                       const Disc& d3) {
  const auto visits = disc_visits(psi, {d1, d2, d3});
  std::vector<ParamInterval> out;
  const size_t m = visits.size();
  for (size_t k = 0; k < m; ++k) {
    if (visits[k].disc != 1) continue;
    // Next visit to D1 or D3 after this D2 visit.
    for (size_t j = 1; j < m + 1; ++j) {
      const Visit& v = visits[(k + j) % m];
      if (v.disc == 2) break;
      if (v.disc == 1) break;  // a later D2 visit starts its own candidate
      if (v.disc == 0) {
        out.push_back({visits[k].deepest, v.deepest});
        break;
      }
    }
  }
  return out;
}

// Primary engine: crossing-sequence scan. A missing reverse transit under
// validated hypotheses is impossible, so it is raised as a Falsification.
inline ReversedArc three_discs_reversed_arc(const ThreeDiscsInput& in) {
  validate_three_discs(in);
  for (const auto& r : reverse_transits_scan(in.psi, in.d1, in.d2, in.d3))
    if (valid_reverse_transit(in, r)) return {r, "crossing-sequence scan"};
  throw Falsification("no reverse transit from D2 to D1 avoiding D3 was found");
}

struct FaceWalkTrace {
  PlaneGraph graph;      // G = Gamma1 + Gamma2 + Gamma3 + Theta
  PlaneGraph reduced;    // G' = Gamma1 + Gamma2 + I + J
  int arc_I = -1, arc_J = -1, arc_K = -1;  // arcs of G
  int face_F = -1, face_Fprime = -1;
  std::array<PolyCurve, 3> gammas;
};

namespace detail {

// Polygon inside disc d whose interior strictly contains every point in pts.
inline PolyCurve inner_polygon(const Disc& d, const std::vector<Point2>& pts, double phase) {
  double dmax = 0.0;
  for (const auto& p : pts) dmax = std::max(dmax, distance(p, d.center));
  for (int sides = 64; sides <= (1 << 16); sides *= 2) {
    const double c = std::cos(M_PI / sides);
    if (dmax >= d.radius * c) continue;
    const double clear = std::min(1e-3, 0.5 * (1.0 - dmax / (d.radius * c)));
    return regular_polygon(d.center, d.radius * (1.0 - clear), sides, phase);
  }
  throw InvalidArgument("transit endpoints lie too close to the disc boundary");
}

// Polygon enclosing disc d3 whose closure stays within gap of it.
inline PolyCurve outer_polygon(const Disc& d, double gap, double phase) {
  const double delta = std::min(1e-3, gap / (3.0 * d.radius));
  for (int sides = 64; sides <= (1 << 16); sides *= 2) {
    const double R = d.radius * (1.0 + delta) / std::cos(M_PI / sides);
    if (R < d.radius + 0.9 * gap) return regular_polygon(d.center, R, sides, phase);
  }
  throw InvalidArgument("no room for a polygon around D3");
}

}  // namespace detail

// Cross-validation engine following the face-walk proof: build G and the
// four-face subgraph G', take the face F of G left of the 1->2 arc on the
// boundary of F', and read off an arc K of Theta from Gamma2 to Gamma1.
inline ReversedArc three_discs_face_walk(const ThreeDiscsInput& in, FaceWalkTrace* trace = nullptr,
                                         uint64_t seed = 1) {
  validate_three_discs(in);
  const PolyCurve& theta = in.psi;
  const double n = static_cast<double>(theta.size());
  double gap = std::min(distance(in.d3.center, in.d1.center) - in.d1.radius,
                        distance(in.d3.center, in.d2.center) - in.d2.radius);
  for (const ParamInterval* I : {&in.fwd1, &in.fwd2}) gap = std::min(gap, min_distance_on(theta, *I, in.d3.center));
  gap -= in.d3.radius;
  if (!(gap > 0)) throw InvalidArgument("no clearance around D3");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  FaceWalkTrace tr;
  bool built = false;
  for (int attempt = 0; attempt < 20 && !built; ++attempt) {
    tr.gammas[0] = detail::inner_polygon(in.d1, {theta.at(in.fwd1.a), theta.at(in.fwd2.a)}, ph(rng));
    tr.gammas[1] = detail::inner_polygon(in.d2, {theta.at(in.fwd1.b), theta.at(in.fwd2.b)}, ph(rng));
    tr.gammas[2] = detail::outer_polygon(in.d3, gap, ph(rng));
    std::vector<PolyCurve> curves{tr.gammas[0], tr.gammas[1], tr.gammas[2], theta};
    if (!check_general_position(curves).generic) continue;
    OverlayOptions oo;
    oo.subdividable = {true, true, true, false};
    tr.graph = overlay(curves, oo);
    built = true;
  }
  if (!built) throw DegenerateInput("could not place the auxiliary polygons in general position");
  const PlaneGraph& G = tr.graph;
  auto label = [&](int v) {
    for (int c : G.vertices[v].curves)
      if (c < 3) return c + 1;
    return 0;
  };
  // I and J: arcs of Theta inside each forward interval from Gamma1 to Gamma2.
  auto find_12 = [&](const ParamInterval& I) {
    int best = -1;
    double best_pos = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < G.arcs.size(); ++a) {
      const Arc& arc = G.arcs[a];
      if (arc.curve != 3) continue;
      if (!cyclic_contains(I, arc.param_tail, n) || !cyclic_contains(I, arc.param_head, n)) continue;
      if (cyclic_length(arc.param_tail, arc.param_head, n) > cyclic_length(I.a, I.b, n)) continue;
      if (label(arc.tail) != 1 || label(arc.head) != 2) continue;
      const double pos = cyclic_length(I.a, arc.param_tail, n);
      if (pos < best_pos) {
        best_pos = pos;
        best = static_cast<int>(a);
      }
    }
    return best;
  };
  tr.arc_I = find_12(in.fwd1);
  tr.arc_J = find_12(in.fwd2);
  if (tr.arc_I < 0 || tr.arc_J < 0 || tr.arc_I == tr.arc_J)
    throw Falsification("forward transits do not contain two distinct arcs from Gamma1 to Gamma2");
  std::vector<int> sub;
  for (size_t a = 0; a < G.arcs.size(); ++a)
    if (G.arcs[a].curve == 0 || G.arcs[a].curve == 1) sub.push_back(static_cast<int>(a));
  sub.push_back(tr.arc_I);
  sub.push_back(tr.arc_J);
  std::vector<int> amap;
  tr.reduced = G.subgraph(sub, &amap);
  const PlaneGraph& Gp = tr.reduced;
  if (Gp.faces.size() != 4) throw Falsification("the reduced graph does not have four faces");
  const int iI = static_cast<int>(sub.size()) - 2, iJ = static_cast<int>(sub.size()) - 1;
  // F' borders I and does not contain D3.
  const int f3 = Gp.locate(in.d3.center);
  int fp = -1;
  for (bool fw : {true, false}) {
    const int f = left_face(Gp, iI, fw);
    if (f != f3) fp = f;
  }
  tr.face_Fprime = fp;
  // Exactly one of I, J runs from Gamma1 to Gamma2 along the boundary of F'.
  int chosen = -1;
  for (int a : {iI, iJ})
    if (left_face(Gp, a, true) == fp) chosen = chosen < 0 ? a : -2;
  if (chosen < 0) throw Falsification("boundary of F' does not orient exactly one of I, J from Gamma1 to Gamma2");
  const int I_star = amap[chosen];
  if (chosen == iJ) std::swap(tr.arc_I, tr.arc_J);
  // F: face of G left of I*; its boundary cycle through I* carries K.
  const int hI = PlaneGraph::half(I_star, true);
  tr.face_F = G.face_of[hI];
  const Face& F = G.faces[tr.face_F];
  std::vector<const std::vector<int>*> cycles;
  if (!F.unbounded) cycles.push_back(&F.outer);
  for (const auto& h : F.holes) cycles.push_back(&h);
  for (const auto* cyc : cycles) {
    if (std::find(cyc->begin(), cyc->end(), hI) == cyc->end()) continue;
    for (int h : *cyc) {
      if (label(G.origin(h)) != 2 || label(G.target(h)) != 1) continue;
      const Arc& arc = G.arcs[h / 2];
      if (arc.curve != 3 || h % 2 != 0) throw Falsification("2->1 arc on the boundary of F is not a forward arc of Theta");
      tr.arc_K = h / 2;
      ReversedArc out{{arc.param_tail, arc.param_head}, "face walk"};
      if (!valid_reverse_transit(in, out.interval))
        throw Falsification("face-walk arc does not satisfy the reverse-transit conclusion");
      if (trace) *trace = std::move(tr);
      return out;
    }
  }
  throw Falsification("boundary of F has no arc from Gamma2 to Gamma1");
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

// Simple polygon from random points in the unit square, untangled by 2-opt.
inline PolyCurve random_simple_polygon(std::mt19937_64& rng, int n) {
  if (n < 3) throw InvalidArgument("random polygon needs at least 3 vertices");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> v(n);
  for (auto& p : v) p = {u(rng), u(rng)};
  for (int pass = 0; pass < 100 * n; ++pass) {
    bool changed = false;
    for (int i = 0; i < n && !changed; ++i)
      for (int j = i + 2; j < n && !changed; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (segment_relation(v[i], v[i + 1], v[j], v[(j + 1) % n]) != SegmentRelation::Disjoint) {
          std::reverse(v.begin() + i + 1, v.begin() + j + 1);
          changed = true;
        }
      }
    if (!changed) break;
  }
  PolyCurve c(v);
  if (!c.simple()) return random_simple_polygon(rng, n);
  return c;
}

// Random instance with two validated forward transits: D1 and D2 sit on two
// interleaved close passes of the curve; D3 is placed clear of both transits.
inline ThreeDiscsInput random_three_discs_instance(std::mt19937_64& rng, int vertices = 40) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    PolyCurve psi = random_simple_polygon(rng, vertices);
    const int m = 8 * vertices;
    const double n = static_cast<double>(vertices);
    std::vector<Point2> P(m);
    for (int j = 0; j < m; ++j) P[j] = psi.at(n * j / m);
    std::vector<std::pair<int, int>> close;
    for (int j = 0; j < m; ++j)
      for (int k = j + m / 10; k < m; ++k) {
        if (j + m - k < m / 10) continue;
        if (distance(P[j], P[k]) < 0.06) close.push_back({j, k});
      }
    if (close.size() < 2) continue;
    std::uniform_int_distribution<size_t> pick(0, close.size() - 1);
    auto [j1, k1] = close[pick(rng)];
    auto [j2, k2] = close[pick(rng)];
    // Interleaving j1 < j2 < k1 < k2 gives transits j1 -> j2 and k1 -> k2.
    if (!(j1 < j2 && j2 < k1 && k1 < k2)) continue;
    auto make_disc = [&](int a, int b) {
      const Point2 c = (P[a] + P[b]) * 0.5;
      return Disc{c, 0.5 * distance(P[a], P[b]) + 0.002 + 0.02 * u(rng)};
    };
    Disc d1 = make_disc(j1, k1), d2 = make_disc(j2, k2);
    if (!discs_disjoint(d1, d2)) continue;
    ParamInterval f1{n * j1 / m, n * j2 / m}, f2{n * k1 / m, n * k2 / m};
    // D3: near a point on the rest of the curve most of the time.
    Point2 c3;
    if (u(rng) < 0.7) {
      const int lo = k2, hi = j1 + m;
      const int span = hi - lo;
      if (span < 2) continue;
      c3 = P[(lo + 1 + static_cast<int>(u(rng) * (span - 1))) % m];
      if (u(rng) < 0.5) c3 = c3 + Point2{0.02 * (u(rng) - 0.5), 0.02 * (u(rng) - 0.5)};
    } else {
      c3 = {1.2 * u(rng) - 0.1, 1.2 * u(rng) - 0.1};
    }
    double room = std::min(distance(c3, d1.center) - d1.radius, distance(c3, d2.center) - d2.radius);
    room = std::min(room, min_distance_on(psi, f1, c3));
    room = std::min(room, min_distance_on(psi, f2, c3));
    if (room < 0.01) continue;
    Disc d3{c3, room * (0.3 + 0.6 * u(rng))};
    ThreeDiscsInput in{psi, d1, d2, d3, f1, f2};
    try {
      validate_three_discs(in);
    } catch (const InvalidArgument&) {
      continue;
    }
    return in;
  }
  throw DegenerateInput("could not generate a three-discs instance");
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct SvgLayer {
  std::vector<std::vector<Point2>> polylines;
  std::string stroke = "black";
  double width = 1.0;
  bool closed = false;
};

inline void write_svg(std::ostream& os, const std::vector<SvgLayer>& layers, const std::vector<Disc>& discs = {},
                      double size = 600.0) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  auto grow = [&](const Point2& p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  };
  for (const auto& l : layers)
    for (const auto& pl : l.polylines)
      for (const auto& p : pl) grow(p);
  for (const auto& d : discs) {
    grow(d.center - Point2{d.radius, d.radius});
    grow(d.center + Point2{d.radius, d.radius});
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double pad = 0.05 * std::max(x1 - x0, y1 - y0);
  x0 -= pad;
  y0 -= pad;
  x1 += pad;
  y1 += pad;
  const double s = size / std::max(x1 - x0, y1 - y0);
  auto X = [&](double x) { return (x - x0) * s; };
  auto Y = [&](double y) { return (y1 - y) * s; };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (x1 - x0) * s << "\" height=\"" << (y1 - y0) * s
     << "\">\n";
  const char* fills[] = {"#cfe3ff", "#ffe0c2", "#e0e0e0"};
  for (size_t k = 0; k < discs.size(); ++k)
    os << "<circle cx=\"" << X(discs[k].center.x) << "\" cy=\"" << Y(discs[k].center.y) << "\" r=\""
       << discs[k].radius * s << "\" fill=\"" << fills[k % 3] << "\" stroke=\"gray\"/>\n";
  for (const auto& l : layers)
    for (const auto& pl : l.polylines) {
      os << "<" << (l.closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << l.stroke
         << "\" stroke-width=\"" << l.width << "\" points=\"";
      for (const auto& p : pl) os << X(p.x) << ',' << Y(p.y) << ' ';
      os << "\"/>\n";
    }
  os << "</svg>\n";
}

// Polyline of the curve over a parameter interval.
inline std::vector<Point2> curve_piece(const PolyCurve& psi, const ParamInterval& I) {
  const double n = static_cast<double>(psi.size());
  const double len = cyclic_length(I.a, I.b, n);
  std::vector<Point2> out{psi.at(I.a)};
  for (double s = std::floor(I.a) + 1.0; s < I.a + len; s += 1.0) out.push_back(psi.at(s));
  out.push_back(psi.at(I.a + len));
  return out;
}

}  // namespace swlab
