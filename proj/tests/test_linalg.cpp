#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <random>

#include "swlab/linalg.hpp"

using namespace swlab;

namespace {

Mat random_mat(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd e(m.dim(), m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) e(i, j) = m(i, j);
  return e;
}

double rel_err(const Mat& a, const Eigen::MatrixXd& b) {
  double num = 0, den = 0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) {
      num = std::max(num, std::abs(a(i, j) - b(i, j)));
      den = std::max(den, std::abs(b(i, j)));
    }
  return num / den;
}

// Matching of two multisets of complex numbers by greedy nearest pairing.
double spectrum_distance(std::vector<cplx> a, std::vector<cplx> b) {
  double worst = 0;
  for (cplx z : a) {
    size_t best = 0;
    for (size_t k = 1; k < b.size(); ++k)
      if (std::abs(b[k] - z) < std::abs(b[best] - z)) best = k;
    worst = std::max(worst, std::abs(b[best] - z));
    b.erase(b.begin() + best);
  }
  return worst;
}

}  // namespace

TEST_CASE("expm of a zero matrix is the identity", "[linalg][expm]") {
  for (int n = 1; n <= 8; ++n) REQUIRE(max_abs_diff(expm(Mat(n)), Mat::identity(n)) == 0.0);
}

TEST_CASE("expm of a rotation generator is a rotation", "[linalg][expm]") {
  Mat J{{0, -1}, {1, 0}};
  for (double t : {0.1, 1.0, 2.5, M_PI, 9.9}) {
    Mat R = expm(J, t);
    Mat exact{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
    REQUIRE(max_abs_diff(R, exact) <= 1e-13);
  }
}

TEST_CASE("expm agrees with a direct Taylor sum for small arguments", "[linalg][expm]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    Mat A = random_mat(rng, n, 0.25);
    Mat sum = Mat::identity(n), term = Mat::identity(n);
    for (int k = 1; k <= 30; ++k) {
      term = term * A * (1.0 / k);
      sum += term;
    }
    REQUIRE(max_abs_diff(expm(A), sum) <= 1e-14);
  }
}

TEST_CASE("expm relative error against an independent Pade implementation", "[linalg][expm]") {
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    Mat A = random_mat(rng, n);
    const double t = 10.0 / std::max(A.norm1(), 1e-9) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Eigen::MatrixXd ref = (to_eigen(A) * t).exp();
    worst = std::max(worst, rel_err(expm(A, t), ref));
  }
  REQUIRE(worst <= 1e-12);
}

TEST_CASE("expm semigroup and determinant identities", "[linalg][expm]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 5;
    Mat A = random_mat(rng, n);
    Mat lhs = expm(A, 0.7) * expm(A, 0.4);
    REQUIRE(max_abs_diff(lhs, expm(A, 1.1)) <= 1e-12 * std::max(1.0, lhs.max_abs()));
    REQUIRE(det(expm(A)) == Catch::Approx(std::exp(A.trace())).epsilon(1e-11));
  }
}

TEST_CASE("expm rejects non-finite input", "[linalg][expm]") {
  Mat A{{0, 1}, {std::nan(""), 0}};
  REQUIRE_THROWS_AS(expm(A), InvalidArgument);
  REQUIRE_THROWS_AS(Mat(9), InvalidArgument);
}

TEST_CASE("characteristic polynomial matches det(zI - A)", "[linalg][eig]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    Mat A = random_mat(rng, n);
    auto c = char_poly(A);
    for (double z : {-1.3, 0.2, 2.1}) {
      double p = 0;
      for (int k = n; k >= 0; --k) p = p * z + c[k];
      REQUIRE(p == Catch::Approx(det(Mat::identity(n) * z - A)).margin(1e-11));
    }
  }
}

TEST_CASE("eig of a diagonal matrix returns its entries", "[linalg][eig]") {
  Mat D{{-1, 0, 0}, {0, 3, 0}, {0, 0, 0.5}};
  auto sp = eig(D);
  REQUIRE(sp.values.size() == 3);
  REQUIRE(sp.values[0].real() == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(sp.values[1].real() == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(sp.values[2].real() == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE_FALSE(sp.degenerate);
}

TEST_CASE("eig of companion matrices recovers the polynomial roots", "[linalg][eig]") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    // Build roots: conjugate pairs and real roots, well separated.
    std::vector<cplx> roots;
    while (static_cast<int>(roots.size()) < n) {
      if (n - roots.size() >= 2 && trial % 2 == 0) {
        cplx z(u(rng), 0.3 + std::abs(u(rng)));
        roots.push_back(z);
        roots.push_back(std::conj(z));
      } else {
        roots.emplace_back(u(rng), 0.0);
      }
    }
    bool separated = true;
    for (size_t i = 0; i < roots.size(); ++i)
      for (size_t j = i + 1; j < roots.size(); ++j)
        if (std::abs(roots[i] - roots[j]) < 0.2) separated = false;
    if (!separated) continue;
    std::vector<cplx> poly{1.0};
    for (cplx r : roots) {
      std::vector<cplx> next(poly.size() + 1, 0.0);
      for (size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= r * poly[k];
      }
      poly = next;
    }
    Mat C(n);
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -poly[i].real();
    REQUIRE(spectrum_distance(eig(C).values, roots) <= 1e-9);
  }
}

TEST_CASE("eig agrees with an independent QR solver", "[linalg][eig]") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    Mat A = random_mat(rng, n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(A));
    std::vector<cplx> ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
    auto sp = eig(A);
    const double tol = sp.degenerate ? 1e-6 : 1e-9;
    REQUIRE(spectrum_distance(sp.values, ref) <= tol);
  }
}

TEST_CASE("repeated eigenvalues are flagged and accurate to 1e-6", "[linalg][eig]") {
  Mat J{{2, 1, 0}, {0, 2, 0}, {0, 0, -1}};
  auto sp = eig(J);
  REQUIRE(sp.degenerate);
  REQUIRE(spectrum_distance(sp.values, {2.0, 2.0, -1.0}) <= 1e-6);
  REQUIRE(has_zero_eigenvalue(Mat{{0, 1}, {0, 0}}));
  REQUIRE_FALSE(has_zero_eigenvalue(Mat{{1e-6, 0}, {0, 1}}));
}

TEST_CASE("spectral radius of products via the log form", "[linalg][eig]") {
  Mat P{{1e200, 0}, {0, 1e-200}};
  REQUIRE(log_spectral_radius(P) == Catch::Approx(200 * std::log(10.0)).epsilon(1e-14));
  Mat R{{0, -2}, {2, 0}};
  REQUIRE(spectral_radius(R) == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(spectral_abscissa(Mat{{-1, 5}, {0, -2}}) == Catch::Approx(-1.0));
}

TEST_CASE("symmetric eigen-decomposition", "[linalg]") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    Mat A = random_mat(rng, n).sym();
    auto se = sym_eig(A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(A));
    for (int k = 0; k < n; ++k) REQUIRE(se.values[k] == Catch::Approx(ref.eigenvalues()(k)).margin(1e-12));
    Mat D = Mat::diag(se.values);
    REQUIRE(max_abs_diff(se.vectors * D * se.vectors.transpose(), A) <= 1e-12);
    REQUIRE(sym_max_eig(A) == Catch::Approx(se.values[n - 1]).margin(1e-12));
  }
}

TEST_CASE("Lyapunov solve, Cholesky, inverse", "[linalg]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4;
    Mat A = random_mat(rng, n);
    A = A.shifted(-(spectral_abscissa(A) + 0.5));
    Mat X = lyapunov_solve(A, Mat::identity(n));
    Mat res = A.transpose() * X + X * A + Mat::identity(n);
    REQUIRE(res.max_abs() <= 1e-10 * std::max(1.0, X.max_abs()));
    Mat R = cholesky_upper(X);
    REQUIRE(max_abs_diff(R.transpose() * R, X) <= 1e-11 * X.max_abs());
    REQUIRE(max_abs_diff(inverse(R) * R, Mat::identity(n)) <= 1e-10);
  }
}

TEST_CASE("null spaces and eigenvectors", "[linalg]") {
  Mat A{{1, 2, 3}, {2, 4, 6}, {1, 1, 1}};
  auto ns = null_space(A);
  REQUIRE(ns.size() == 1);
  REQUIRE((A * ns[0]).norm() <= 1e-12);
  Mat R{{0, -1}, {1, 0}};
  auto ev = eigenvectors(R, cplx(0, 1));
  REQUIRE(ev.size() == 1);
  cplx r0 = -ev[0][1], r1 = ev[0][0];
  REQUIRE(std::abs(r0 - cplx(0, 1) * ev[0][0]) <= 1e-12);
  REQUIRE(std::abs(r1 - cplx(0, 1) * ev[0][1]) <= 1e-12);
  REQUIRE(null_space(Mat::identity(3)).empty());
  REQUIRE(null_space(Mat(2)).size() == 2);
}

TEST_CASE("Kronecker mixed-product property", "[linalg][kron]") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = random_mat(rng, 2), B = random_mat(rng, 2), C = random_mat(rng, 2), D = random_mat(rng, 2);
    REQUIRE(max_abs_diff(kron(A, B) * kron(C, D), kron(A * C, B * D)) <= 1e-14);
    Vec x{0.3, -1.2}, y{2.0, 0.5};
    Vec lhs = kron(A, B) * kron(x, y);
    Vec rhs = kron(A * x, B * y);
    REQUIRE((lhs - rhs).norm() <= 1e-14);
  }
  REQUIRE_THROWS_AS(kron(Mat(3), Mat(3)), InvalidArgument);
}

TEST_CASE("Kronecker sums exponentiate to Kronecker products", "[linalg][kron]") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = random_mat(rng, 2), B = random_mat(rng, 2);
    const double s = std::sqrt(2.0);
    Mat K = kron(A, Mat::identity(2)) + kron(Mat::identity(2), B) * s;
    Mat lhs = expm(K, 0.9);
    Mat rhs = kron(expm(A, 0.9), expm(B, 0.9 * s));
    REQUIRE(max_abs_diff(lhs, rhs) <= 1e-12 * std::max(1.0, rhs.max_abs()));
  }
}

TEST_CASE("convex combinations validate weights", "[linalg]") {
  std::vector<Mat> ms{Mat{{1, 0}, {0, 0}}, Mat{{0, 0}, {0, 1}}};
  std::vector<double> w{0.25, 0.75};
  Mat M = convex_combination(ms, w);
  REQUIRE(M(0, 0) == 0.25);
  REQUIRE(M(1, 1) == 0.75);
  std::vector<double> bad{0.5, 0.6};
  REQUIRE_THROWS_AS(convex_combination(ms, bad), InvalidArgument);
  std::vector<double> neg{-0.5, 1.5};
  REQUIRE_THROWS_AS(convex_combination(ms, neg), InvalidArgument);
}

TEST_CASE("realification is a multiplicative star-homomorphism", "[linalg][complex]") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rnd = [&] {
    CMat2 T;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) T(i, j) = cplx(u(rng), u(rng));
    return T;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    CMat2 T = rnd(), S = rnd();
    REQUIRE(max_abs_diff(realify(T * S), realify(T) * realify(S)) <= 1e-12);
    REQUIRE(max_abs_diff(realify(T.adjoint()), realify(T).transpose()) <= 1e-15);
    std::array<cplx, 2> z{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    std::array<cplx, 2> Tz{T(0, 0) * z[0] + T(0, 1) * z[1], T(1, 0) * z[0] + T(1, 1) * z[1]};
    REQUIRE((realify(T) * realify(z) - realify(Tz)).norm() <= 1e-14);
  }
  CMat2 T;
  T(0, 0) = cplx(0, 1);
  T(1, 1) = -1.0;
  auto ev = T.eigenvalues();
  REQUIRE(std::abs(ev[0] - cplx(0, 1)) + std::abs(ev[1] + 1.0) <= 1e-15);
}
