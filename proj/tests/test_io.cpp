#include <catch_amalgamated.hpp>

#include "swlab/io.hpp"

using namespace swlab;
using io::json;

namespace {

json planar_doc() {
  return json::parse(R"({"format": "swlab-system", "dim": 2,
                         "matrices": [[0, 1, -1, 0], [0, 2, -0.5, 0]],
                         "law": [{"duration": 1.0, "weights": [1, 0]}, {"duration": 0.5, "weights": [0.25, 0.75]}],
                         "periodic": true, "x0": [1, 0]})");
}

}  // namespace

TEST_CASE("system documents parse into systems, laws and states", "[io]") {
  auto doc = io::parse_system(planar_doc());
  REQUIRE(doc.system.dim() == 2);
  REQUIRE(doc.system.count() == 2);
  REQUIRE(doc.system.matrices[1](1, 0) == -0.5);
  REQUIRE(doc.law);
  REQUIRE(doc.law->periodic());
  REQUIRE(doc.law->total_duration() == 1.5);
  REQUIRE(doc.law->segments()[1].weights[1] == 0.75);
  REQUIRE(doc.x0);
  REQUIRE((*doc.x0)[0] == 1.0);
  REQUIRE_FALSE(doc.is_complex());
}

TEST_CASE("system documents round-trip exactly", "[io]") {
  auto doc = io::parse_system(planar_doc());
  const json out = io::system_document(doc.system, doc.law, doc.x0);
  auto back = io::parse_system(io::parse_text(io::dump(out), "round trip"));
  for (size_t i = 0; i < 2; ++i) REQUIRE(max_abs_diff(back.system.matrices[i], doc.system.matrices[i]) == 0.0);
  REQUIRE(back.law->segments().size() == 2);
  REQUIRE(io::dump(io::system_document(back.system, back.law, back.x0)) == io::dump(out));
  // Shortest round-trip decimal output keeps every bit.
  const double x = 0.1 + 0.2;
  auto s = io::parse_system(
      json{{"format", "swlab-system"}, {"dim", 1}, {"matrices", json::array({json::array({x})})}});
  REQUIRE(s.system.matrices[0](0, 0) == x);
}

TEST_CASE("unknown and missing fields are rejected by name", "[io]") {
  json j = planar_doc();
  j["colour"] = "red";
  REQUIRE_THROWS_WITH(io::parse_system(j), Catch::Matchers::ContainsSubstring("unknown field 'colour'"));
  json k = planar_doc();
  k["law"][0]["pause"] = 1;
  REQUIRE_THROWS_WITH(io::parse_system(k), Catch::Matchers::ContainsSubstring("unknown field 'pause'"));
  json m = planar_doc();
  m.erase("dim");
  REQUIRE_THROWS_WITH(io::parse_system(m), Catch::Matchers::ContainsSubstring("missing field 'dim'"));
  json f = planar_doc();
  f["format"] = "other";
  REQUIRE_THROWS_AS(io::parse_system(f), InvalidArgument);
  REQUIRE_THROWS_AS(io::parse_text("{not json", "inline"), InvalidArgument);
}

TEST_CASE("shapes and law invariants are validated", "[io]") {
  json a = planar_doc();
  a["matrices"][0] = json::array({0, 1, -1});
  REQUIRE_THROWS_WITH(io::parse_system(a), Catch::Matchers::ContainsSubstring("dim^2"));
  json b = planar_doc();
  b["law"][0]["weights"] = json::array({0.5, 0.6});
  REQUIRE_THROWS_AS(io::parse_system(b), InvalidArgument);
  json c = planar_doc();
  c["law"][0]["duration"] = -1;
  REQUIRE_THROWS_AS(io::parse_system(c), InvalidArgument);
  json d = planar_doc();
  d["x0"] = json::array({1, 0, 0});
  REQUIRE_THROWS_AS(io::parse_system(d), InvalidArgument);
  json e = planar_doc();
  e["dim"] = 9;
  REQUIRE_THROWS_AS(io::parse_system(e), InvalidArgument);
  json g = planar_doc();
  g["matrices"][1][2] = "x";
  REQUIRE_THROWS_AS(io::parse_system(g), InvalidArgument);
  json h = planar_doc();
  h.erase("law");
  REQUIRE_THROWS_WITH(io::parse_system(h), Catch::Matchers::ContainsSubstring("periodic given without a law"));
}

TEST_CASE("complex documents are realified", "[io][complex]") {
  auto doc = io::parse_system(json::parse(R"({"format": "swlab-system", "dim": 2,
      "complex_matrices": [[[0, 1], [2, 0], [0, 0], [-1, -0.5]]]})"));
  REQUIRE(doc.is_complex());
  REQUIRE(doc.complex[0](0, 0) == cplx(0, 1));
  REQUIRE(doc.complex[0](1, 1) == cplx(-1, -0.5));
  REQUIRE(doc.system.dim() == 4);
  REQUIRE(max_abs_diff(doc.system.matrices[0], realify(doc.complex[0])) == 0.0);
  REQUIRE_THROWS_AS(io::parse_system(json::parse(R"({"format": "swlab-system", "dim": 3,
      "complex_matrices": [[[0, 1], [2, 0], [0, 0], [-1, -0.5]]]})")),
                    InvalidArgument);
  REQUIRE_THROWS_AS(io::parse_system(json::parse(R"({"format": "swlab-system", "dim": 2,
      "matrices": [[1, 0, 0, 1]], "complex_matrices": [[[0, 1], [2, 0], [0, 0], [-1, -0.5]]]})")),
                    InvalidArgument);
}

TEST_CASE("geometry documents validate the three-discs hypotheses", "[io][three-discs]") {
  json g = json::parse(R"({"format": "swlab-geometry",
      "curves": [[[-1, 0.2], [1, 0.2], [1.6, 0.2], [1.6, 1.8], [-1.8, 1.8], [-1.8, -0.2], [-1, -0.2],
                  [1, -0.2], [0.8, 0], [-1, 0]]],
      "discs": [{"cx": -1, "cy": 0, "r": 0.4}, {"cx": 1, "cy": 0, "r": 0.4}, {"cx": 0, "cy": 1, "r": 0.3}],
      "intervals": [[0, 1], [6, 7]]})");
  auto in = io::parse_geometry(g);
  REQUIRE(in.psi.size() == 10);
  REQUIRE(valid_reverse_transit(in, three_discs_reversed_arc(in).interval));
  json bad = g;
  bad["discs"][2]["cy"] = 0.1;  // D3 now meets D1 and D2
  REQUIRE_THROWS_AS(io::parse_geometry(bad), InvalidArgument);
  json extra = g;
  extra["discs"][0]["label"] = "D1";
  REQUIRE_THROWS_WITH(io::parse_geometry(extra), Catch::Matchers::ContainsSubstring("unknown field 'label'"));
}

TEST_CASE("reports are deterministic and keep non-finite numbers valid", "[io]") {
  auto sys = SwitchedSystem::linear({Mat{{-1.0}}, Mat{{-2.0}}});
  const RateBounds b = uniform_rate(sys);
  REQUIRE(io::dump(io::to_json(b)) == io::dump(io::to_json(uniform_rate(sys))));
  REQUIRE(io::num(std::numeric_limits<double>::infinity()) == "inf");
  REQUIRE(io::num(-std::numeric_limits<double>::infinity()) == "-inf");
  const json rt = io::parse_text(io::dump(io::to_json(RateBounds{})), "defaults");
  REQUIRE(rt["lower"] == "-inf");
}

TEST_CASE("CSV trajectories list time, state and active weights", "[io]") {
  auto doc = io::parse_system(planar_doc());
  auto tr = integrate(doc.system, *doc.law, *doc.x0, 1.5, 0.5);
  std::ostringstream os;
  io::write_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  REQUIRE(line == "t,x_1,x_2,w_1,w_2");
  std::getline(is, line);
  REQUIRE(line == "0,1,0,1,0");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  REQUIRE(rows == 4);
}

TEST_CASE("emitted witnesses re-validate through their checkers", "[io]") {
  auto c = classify(SwitchedSystem::linear({Mat{{0, -1}, {1, 0}}}));
  REQUIRE(c.witness);
  REQUIRE(io::revalidate(SwitchedSystem::linear({Mat{{0, -1}, {1, 0}}}), *c.witness) <= 1e-6);
  auto z = classify(SwitchedSystem::linear({Mat{{0, 1}, {0, 0}}}));
  REQUIRE(z.witness);
  REQUIRE(io::revalidate(SwitchedSystem::linear({Mat{{0, 1}, {0, 0}}}), *z.witness) <= 1e-12);
  const json j = io::to_json(*z.witness);
  REQUIRE(j["kind"] == "stationary");
}
