// Regenerates the bundled input documents in the given directory. The tuned
// instances are shifted onto the stability boundary by the rate lower bound,
// which is attained by a periodic law.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "swlab/io.hpp"

using namespace swlab;

namespace {

void save(const std::filesystem::path& dir, const std::string& name, const io::json& j) {
  std::ofstream os(dir / name, std::ios::binary);
  os << io::dump(j);
  std::cout << (dir / name).string() << '\n';
}

io::json with_comment(io::json j, const std::string& c) {
  io::json out{{"format", j["format"]}, {"comment", c}};
  for (auto& [k, v] : j.items())
    if (k != "format") out[k] = v;
  return out;
}

Mat rotation3(Vec axis, double th) {
  axis = axis.normalized();
  Mat K{{0, -axis[2], axis[1]}, {axis[2], 0, -axis[0]}, {-axis[1], axis[0], 0}};
  return expm(K, th);
}

SwitchedSystem tuned(const SwitchedSystem& base) { return base.shifted(-uniform_rate(base).lower); }

io::json complex_document(const std::vector<CMat2>& Ts, const std::string& comment) {
  io::json mats = io::json::array();
  for (const auto& T : Ts) {
    io::json m = io::json::array();
    for (int e = 0; e < 4; ++e) m.push_back(io::json::array({T(e / 2, e % 2).real(), T(e / 2, e % 2).imag()}));
    mats.push_back(m);
  }
  return io::json{{"format", io::kSystemFormat}, {"comment", comment}, {"dim", 2}, {"complex_matrices", mats}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);

  save(dir, "scalar.json",
       with_comment(io::system_document(SwitchedSystem::linear({Mat{{-1.0}}, Mat{{-2.0}}})), "d = 1, rate -1"));

  const auto pair = tuned(SwitchedSystem::linear({Mat{{0, 1}, {-1, 0}}, Mat{{0, 2}, {-0.5, 0}}}));
  save(dir, "tuned_pair.json",
       with_comment(io::system_document(pair),
                    "rotation and elliptic rotation, shifted by the best periodic rate onto the boundary"));

  save(dir, "rotation_flow.json",
       with_comment(io::system_document(SwitchedSystem::linear({Mat{{0, -1, 0}, {1, 0, 0}, {0, 0, -1}}}), std::nullopt,
                                        Vec{1.0, 0.5, 1.0}),
                    "single flow whose limit cycle is the unit circle of the z = 0 plane"));

  const Mat A1{{0, 2, 0}, {-0.5, 0, 0}, {0, 0, -1}};
  const Mat R = rotation3(Vec{1, 1, 1}, 0.7);
  save(dir, "tuned_3d.json",
       with_comment(io::system_document(tuned(SwitchedSystem::linear({A1, R.transpose() * A1 * R}))),
                    "elliptic rotation and its conjugate by a rotation of 0.7 about (1,1,1), shifted onto the boundary"));

  const auto sw = SwitchingLaw::from_sequence(2, {0, 1}, {1.0, 0.5}, true);
  save(dir, "simulate_pair.json",
       with_comment(io::system_document(pair, sw, Vec{1.0, 0.0}), "tuned pair with a periodic bang-bang law"));

  CMat2 T1, T2;
  T1(0, 1) = 1;
  T1(1, 0) = -1;
  T2(0, 1) = 2.0 * std::polar(1.0, -0.8);
  T2(1, 0) = -0.5 * std::polar(1.0, 0.8);
  T2(0, 0) = cplx(0, 0.3);
  const double lam = uniform_rate(realify_system({T1, T2})).lower;
  for (CMat2* T : {&T1, &T2}) {
    (*T)(0, 0) -= lam;
    (*T)(1, 1) -= lam;
  }
  save(dir, "complex_pair.json",
       complex_document({T1, T2}, "complex rotation pair without common lines, shifted onto the boundary"));

  CMat2 H;
  H(0, 0) = -1;
  H(1, 1) = cplx(-1, 1);
  save(dir, "complex_hurwitz.json", complex_document({H}, "diag(-1, -1 + i): GUES"));

  // Two forward transits along y = +-0.2, a loop over D3, and a return between them.
  io::json curve = io::json::array();
  for (auto [x, y] : std::vector<std::pair<double, double>>{{-1, 0.2}, {1, 0.2}, {1.6, 0.2}, {1.6, 1.8}, {-1.8, 1.8},
                                                            {-1.8, -0.2}, {-1, -0.2}, {1, -0.2}, {0.8, 0}, {-1, 0}})
    curve.push_back(io::json::array({x, y}));
  save(dir, "three_discs.json",
       io::json{{"format", io::kGeometryFormat},
                {"comment", "two forward transits from D1 to D2 below D3"},
                {"curves", io::json::array({curve})},
                {"discs", io::json::array({io::json{{"cx", -1}, {"cy", 0}, {"r", 0.4}},
                                           io::json{{"cx", 1}, {"cy", 0}, {"r", 0.4}},
                                           io::json{{"cx", 0}, {"cy", 1}, {"r", 0.3}}})},
                {"intervals", io::json::array({io::json::array({0, 1}), io::json::array({6, 7})})}});
  return 0;
}
