#pragma once

// Small dense real matrices (dimension 1..8) and the dense kernels the rest of
// the library is built on: matrix exponential, spectra, Kronecker products,
// Lyapunov equations, null spaces and the complex 2x2 realification.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace swlab {

inline constexpr int kMaxDim = 8;
using cplx = std::complex<double>;

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// ============================================================================
// Vec
// ============================================================================

class Vec {
 public:
  Vec() = default;
  explicit Vec(int n, double fill = 0.0) : n_(n) {
    require(n >= 1 && n <= kMaxDim, "vector dimension must be in 1..8");
    v_.fill(0.0);
    std::fill_n(v_.begin(), n, fill);
  }
  Vec(std::initializer_list<double> xs) : Vec(static_cast<int>(xs.size())) {
    std::copy(xs.begin(), xs.end(), v_.begin());
  }
  static Vec from(std::span<const double> xs) {
    Vec r(static_cast<int>(xs.size()));
    std::copy(xs.begin(), xs.end(), r.v_.begin());
    return r;
  }
  static Vec unit(int n, int k) {
    Vec r(n);
    r[k] = 1.0;
    return r;
  }

  int size() const { return n_; }
  double& operator[](int i) { return v_[i]; }
  double operator[](int i) const { return v_[i]; }
  const double* data() const { return v_.data(); }
  double* data() { return v_.data(); }
  std::span<const double> span() const { return {v_.data(), static_cast<size_t>(n_)}; }
  std::vector<double> to_vector() const { return {v_.begin(), v_.begin() + n_}; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] += o.v_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n_; ++i) v_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += v_[i] * o.v_[i];
    return s;
  }
  double norm() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(v_[i]));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += (v_[i] / m) * (v_[i] / m);
    return m * std::sqrt(s);
  }
  double norm1() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += std::abs(v_[i]);
    return s;
  }
  Vec normalized() const {
    double r = norm();
    require(r > 0.0, "cannot normalize the zero vector");
    return *this * (1.0 / r);
  }
  bool finite() const {
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(v_[i])) return false;
    return true;
  }

 private:
  int n_ = 0;
  std::array<double, kMaxDim> v_{};
};

// ============================================================================
// Mat
// ============================================================================

class Mat {
 public:
  Mat() = default;
  explicit Mat(int n, double fill = 0.0) : n_(n) {
    require(n >= 1 && n <= kMaxDim, "matrix dimension must be in 1..8");
    a_.fill(0.0);
    for (int i = 0; i < n * n; ++i) a_[i] = fill;
  }
  Mat(std::initializer_list<std::initializer_list<double>> rows) : Mat(static_cast<int>(rows.size())) {
    int i = 0;
    for (const auto& row : rows) {
      require(static_cast<int>(row.size()) == n_, "matrix must be square");
      int j = 0;
      for (double x : row) (*this)(i, j++) = x;
      ++i;
    }
  }
  static Mat identity(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat from_row_major(int n, std::span<const double> xs) {
    require(static_cast<int>(xs.size()) == n * n, "wrong number of matrix entries");
    Mat m(n);
    for (int i = 0; i < n * n; ++i) m.a_[i] = xs[i];
    return m;
  }
  static Mat diag(const Vec& d) {
    Mat m(d.size());
    for (int i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  int dim() const { return n_; }
  double& operator()(int i, int j) { return a_[i * n_ + j]; }
  double operator()(int i, int j) const { return a_[i * n_ + j]; }
  std::vector<double> row_major() const { return {a_.begin(), a_.begin() + n_ * n_}; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < n_ * n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < n_ * n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < n_ * n_; ++i) a_[i] *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }
  friend Mat operator-(Mat a) { return a *= -1.0; }

  friend Mat operator*(const Mat& a, const Mat& b) {
    const int n = a.n_;
    Mat c(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }
  friend Vec operator*(const Mat& a, const Vec& x) {
    Vec y(a.n_);
    for (int i = 0; i < a.n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < a.n_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  Mat transpose() const {
    Mat t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  double trace() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }
  double norm1() const {
    double m = 0.0;
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }
  double norm_inf() const { return transpose().norm1(); }
  double frobenius() const {
    double s = 0.0;
    for (int i = 0; i < n_ * n_; ++i) s += a_[i] * a_[i];
    return std::sqrt(s);
  }
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n_ * n_; ++i) m = std::max(m, std::abs(a_[i]));
    return m;
  }
  bool finite() const {
    for (int i = 0; i < n_ * n_; ++i)
      if (!std::isfinite(a_[i])) return false;
    return true;
  }
  Mat shifted(double lambda) const {
    Mat m = *this;
    for (int i = 0; i < n_; ++i) m(i, i) += lambda;
    return m;
  }
  Mat sym() const { return (*this + transpose()) * 0.5; }

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).max_abs(); }

inline Mat outer(const Vec& a, const Vec& b) {
  Mat m(a.size());
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

// ============================================================================
// Matrix exponential: scaling and squaring around a Taylor core
// ============================================================================

inline Mat expm(const Mat& A, double t = 1.0) {
  require(A.finite() && std::isfinite(t), "expm requires finite input");
  const int n = A.dim();
  Mat M = A * t;
  const double nrm = M.norm1();
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  if (s > 0) M *= std::ldexp(1.0, -s);
  // ||M|| <= 0.5: 20 terms push the truncation error below 1e-25.
  Mat E = Mat::identity(n);
  Mat term = Mat::identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = term * M * (1.0 / k);
    E += term;
    if (term.max_abs() <= 1e-18 * E.max_abs()) break;
  }
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

// ============================================================================
// Dense solves
// ============================================================================

// General n x n solve with partial pivoting, n arbitrary (used for n^2 systems).
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    if (a[p * n + c] == 0.0) throw InvalidArgument("singular linear system");
    if (p != c) {
      for (int j = 0; j < n; ++j) std::swap(a[p * n + j], a[c * n + j]);
      std::swap(b[p], b[c]);
    }
    const double piv = a[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / piv;
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= a[r * n + j] * x[j];
    x[r] = s / a[r * n + r];
  }
  return x;
}

inline Vec solve(const Mat& A, const Vec& b) {
  const int n = A.dim();
  auto x = solve_dense(A.row_major(), b.to_vector(), n);
  return Vec::from(x);
}

inline double det(const Mat& A) {
  const int n = A.dim();
  auto a = A.row_major();
  double d = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    if (a[p * n + c] == 0.0) return 0.0;
    if (p != c) {
      for (int j = 0; j < n; ++j) std::swap(a[p * n + j], a[c * n + j]);
      d = -d;
    }
    const double piv = a[c * n + c];
    d *= piv;
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / piv;
      for (int j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
    }
  }
  return d;
}

inline Mat inverse(const Mat& A) {
  const int n = A.dim();
  Mat inv(n);
  for (int k = 0; k < n; ++k) {
    Vec col = solve(A, Vec::unit(n, k));
    for (int i = 0; i < n; ++i) inv(i, k) = col[i];
  }
  return inv;
}

// Upper-triangular R with R^T R = S for symmetric positive definite S.
inline Mat cholesky_upper(const Mat& S) {
  const int n = S.dim();
  Mat R(n);
  for (int i = 0; i < n; ++i) {
    double d = S(i, i);
    for (int k = 0; k < i; ++k) d -= R(k, i) * R(k, i);
    if (!(d > 0.0)) throw InvalidArgument("matrix is not positive definite");
    R(i, i) = std::sqrt(d);
    for (int j = i + 1; j < n; ++j) {
      double s = S(i, j);
      for (int k = 0; k < i; ++k) s -= R(k, i) * R(k, j);
      R(i, j) = s / R(i, i);
    }
  }
  return R;
}

// Solves A^T X + X A = -C for symmetric X.
inline Mat lyapunov_solve(const Mat& A, const Mat& C) {
  const int n = A.dim();
  const int m = n * n;
  std::vector<double> K(static_cast<size_t>(m) * m, 0.0), rhs(m);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const int row = p * n + q;
      rhs[row] = -C(p, q);
      for (int k = 0; k < n; ++k) {
        K[row * m + (k * n + q)] += A(k, p);
        K[row * m + (p * n + k)] += A(k, q);
      }
    }
  auto x = solve_dense(std::move(K), std::move(rhs), m);
  Mat X = Mat::from_row_major(n, x);
  return X.sym();
}

// ============================================================================
// Symmetric eigenproblem (cyclic Jacobi)
// ============================================================================

struct SymEig {
  Vec values;    // ascending
  Mat vectors;   // columns
};

inline SymEig sym_eig(const Mat& S_in) {
  const int n = S_in.dim();
  Mat S = S_in.sym();
  Mat V = Mat::identity(n);
  const double scale = std::max(S.frobenius(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += S(i, j) * S(i, j);
    if (std::sqrt(off) <= 1e-17 * scale) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (S(p, q) == 0.0) continue;
        const double theta = (S(q, q) - S(p, p)) / (2.0 * S(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double skp = S(k, p), skq = S(k, q);
          S(k, p) = c * skp - s * skq;
          S(k, q) = s * skp + c * skq;
        }
        for (int k = 0; k < n; ++k) {
          const double spk = S(p, k), sqk = S(q, k);
          S(p, k) = c * spk - s * sqk;
          S(q, k) = s * spk + c * sqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return S(a, a) < S(b, b); });
  SymEig out{Vec(n), Mat(n)};
  for (int k = 0; k < n; ++k) {
    out.values[k] = S(idx[k], idx[k]);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = V(i, idx[k]);
  }
  return out;
}

inline double sym_max_eig(const Mat& S) {
  const int n = S.dim();
  if (n == 1) return S(0, 0);
  if (n == 2) {
    const double a = S(0, 0), b = 0.5 * (S(0, 1) + S(1, 0)), d = S(1, 1);
    return 0.5 * (a + d) + std::hypot(0.5 * (a - d), b);
  }
  return sym_eig(S).values[n - 1];
}

// ============================================================================
// Spectra
// ============================================================================

// Coefficients c[0..n] of det(zI - A) = sum c_k z^k (c[n] = 1), Faddeev-LeVerrier.
inline std::vector<double> char_poly(const Mat& A) {
  const int n = A.dim();
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  Mat M(n);
  for (int k = 1; k <= n; ++k) {
    M = A * M + Mat::identity(n) * c[n - k + 1];
    c[n - k] = -(A * M).trace() / k;
  }
  return c;
}

inline cplx poly_eval(const std::vector<cplx>& c, cplx z, cplx* deriv = nullptr) {
  cplx p = 0.0, dp = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
  if (deriv) *deriv = dp;
  return p;
}

// Roots of sum c_k z^k via Aberth-Ehrlich iteration with Newton polishing.
inline std::vector<cplx> poly_roots(const std::vector<double>& coeffs) {
  int deg = static_cast<int>(coeffs.size()) - 1;
  while (deg > 0 && coeffs[deg] == 0.0) --deg;
  require(deg >= 1, "polynomial must have positive degree");
  std::vector<cplx> c(deg + 1);
  for (int k = 0; k <= deg; ++k) c[k] = coeffs[k] / coeffs[deg];
  if (deg == 1) return {-c[0]};
  double bound = 0.0;
  for (int k = 0; k < deg; ++k) bound = std::max(bound, std::abs(c[k]));
  bound = 1.0 + bound;
  // Smaller starting radius from the geometric mean of |c0|.
  double r0 = std::abs(c[0]) > 0 ? std::pow(std::abs(c[0]), 1.0 / deg) : 0.5;
  r0 = std::clamp(r0, 1e-3, bound);
  std::vector<cplx> z(deg);
  for (int k = 0; k < deg; ++k) z[k] = std::polar(r0, 2.0 * M_PI * k / deg + 0.4);
  for (int it = 0; it < 800; ++it) {
    double maxstep = 0.0;
    for (int k = 0; k < deg; ++k) {
      cplx dp;
      cplx p = poly_eval(c, z[k], &dp);
      if (p == 0.0) continue;
      cplx ratio = p / dp;
      cplx sum = 0.0;
      for (int j = 0; j < deg; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      cplx step = ratio / (1.0 - ratio * sum);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = ratio;
      z[k] -= step;
      maxstep = std::max(maxstep, std::abs(step) / (1.0 + std::abs(z[k])));
    }
    if (maxstep < 1e-16) break;
  }
  for (auto& zk : z) {
    for (int it = 0; it < 3; ++it) {
      cplx dp;
      cplx p = poly_eval(c, zk, &dp);
      if (dp == 0.0) break;
      cplx cand = zk - p / dp;
      if (std::abs(poly_eval(c, cand)) < std::abs(p)) zk = cand;
      else break;
    }
  }
  return z;
}

namespace detail {

// Real Hessenberg reduction followed by the shifted QR algorithm.
inline std::vector<cplx> hessenberg_qr_eigenvalues(const Mat& A) {
  const int n = A.dim();
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) a[i][j] = A(i - 1, j - 1);
  for (int m = 2; m < n; ++m) {
    double x = 0.0;
    int i = m;
    for (int j = m; j <= n; ++j)
      if (std::abs(a[j][m - 1]) > std::abs(x)) {
        x = a[j][m - 1];
        i = j;
      }
    if (i != m) {
      for (int j = m - 1; j <= n; ++j) std::swap(a[i][j], a[m][j]);
      for (int j = 1; j <= n; ++j) std::swap(a[j][i], a[j][m]);
    }
    if (x != 0.0) {
      for (i = m + 1; i <= n; ++i) {
        double y = a[i][m - 1];
        if (y != 0.0) {
          y /= x;
          a[i][m - 1] = y;
          for (int j = m; j <= n; ++j) a[i][j] -= y * a[m][j];
          for (int j = 1; j <= n; ++j) a[j][m] += y * a[j][i];
        }
      }
    }
  }
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j < i - 1; ++j) a[i][j] = 0.0;

  std::vector<double> wr(n + 1), wi(n + 1);
  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);
  int nn = n, l = 1;
  double t = 0.0, p = 0, q = 0, r = 0, s, w, x, y, z;
  auto sign = [](double u, double v) { return v >= 0.0 ? std::abs(u) : -std::abs(u); };
  while (nn >= 1) {
    int its = 0;
    do {
      for (l = nn; l >= 2; --l) {
        s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        y = a[nn - 1][nn - 1];
        w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (its == 60) throw InvalidArgument("eigenvalue iteration did not converge");
          if (its == 10 || its == 20 || its == 40) {
            t += x;
            for (int i = 1; i <= nn; ++i) a[i][i] -= x;
            s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m;
          for (m = nn - 2; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a[k][k - 1] = -a[k][k - 1];
              } else {
                a[k][k - 1] = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a[k][j] + q * a[k + 1][j];
                if (k != nn - 1) {
                  p += r * a[k + 2][j];
                  a[k + 2][j] -= p * z;
                }
                a[k + 1][j] -= p * y;
                a[k][j] -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a[i][k] + y * a[i][k + 1];
                if (k != nn - 1) {
                  p += z * a[i][k + 2];
                  a[i][k + 2] -= p * r;
                }
                a[i][k + 1] -= p * q;
                a[i][k] -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::vector<cplx> out;
  for (int i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace detail

struct Spectrum {
  std::vector<cplx> values;  // sorted by descending real part, then imaginary part
  bool degenerate = false;   // clustered roots, accuracy reduced to about 1e-6
};

inline Spectrum eig(const Mat& A) {
  require(A.finite(), "eig requires finite entries");
  const int n = A.dim();
  const double scale = A.max_abs();
  Spectrum sp;
  if (scale == 0.0) {
    sp.values.assign(n, cplx(0.0, 0.0));
    sp.degenerate = n > 1;
    return sp;
  }
  if (n == 1) {
    sp.values = {cplx(A(0, 0), 0.0)};
  } else if (n <= 4) {
    std::vector<cplx> roots = poly_roots(char_poly(A * (1.0 / scale)));
    for (auto& z : roots) z *= scale;
    sp.values = roots;
  } else {
    sp.values = detail::hessenberg_qr_eigenvalues(A);
  }
  // A real matrix has a conjugation-symmetric spectrum; snap near-real roots.
  for (auto& z : sp.values)
    if (std::abs(z.imag()) <= 1e-10 * scale) z = cplx(z.real(), 0.0);
  for (size_t i = 0; i < sp.values.size(); ++i)
    for (size_t j = i + 1; j < sp.values.size(); ++j)
      if (std::abs(sp.values[i] - sp.values[j]) <= 1e-5 * scale) sp.degenerate = true;
  std::sort(sp.values.begin(), sp.values.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return sp;
}

inline double spectral_abscissa(const Mat& A) {
  if (A.dim() == 2) {
    const double tr = A.trace(), dt = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double disc = tr * tr / 4.0 - dt;
    return disc >= 0 ? tr / 2.0 + std::sqrt(disc) : tr / 2.0;
  }
  return eig(A).values.front().real();
}

// log of the spectral radius, robust to badly scaled products.
inline double log_spectral_radius(const Mat& P) {
  const double s = P.max_abs();
  if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
  const Mat Q = P * (1.0 / s);
  double rho;
  if (Q.dim() == 1) {
    rho = std::abs(Q(0, 0));
  } else if (Q.dim() == 2) {
    const double tr = Q.trace(), dt = Q(0, 0) * Q(1, 1) - Q(0, 1) * Q(1, 0);
    const double disc = tr * tr / 4.0 - dt;
    rho = disc >= 0 ? std::abs(tr) / 2.0 + std::sqrt(disc) : std::sqrt(std::max(dt, 0.0));
  } else {
    rho = 0.0;
    for (cplx z : eig(Q).values) rho = std::max(rho, std::abs(z));
  }
  if (!(rho > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(rho) + std::log(s);
}

inline double spectral_radius(const Mat& P) { return std::exp(log_spectral_radius(P)); }

inline bool has_zero_eigenvalue(const Mat& A, double tol = 1e-8) {
  for (cplx z : eig(A).values)
    if (std::abs(z) <= tol * std::max(1.0, A.max_abs())) return true;
  return false;
}

// ============================================================================
// Null spaces (Gaussian elimination with full pivoting)
// ============================================================================

using CVec = std::vector<cplx>;

// Orthonormalised basis of {x : M x = 0}; M is n x n complex, row major.
inline std::vector<CVec> null_space_complex(std::vector<cplx> M, int n, double tol) {
  std::vector<int> colperm(n);
  std::iota(colperm.begin(), colperm.end(), 0);
  double scale = 0.0;
  for (auto& z : M) scale = std::max(scale, std::abs(z));
  if (scale == 0.0) scale = 1.0;
  int rank = 0;
  for (; rank < n; ++rank) {
    int pr = -1, pc = -1;
    double best = tol * scale;
    for (int r = rank; r < n; ++r)
      for (int c = rank; c < n; ++c)
        if (std::abs(M[r * n + c]) > best) {
          best = std::abs(M[r * n + c]);
          pr = r;
          pc = c;
        }
    if (pr < 0) break;
    for (int c = 0; c < n; ++c) std::swap(M[pr * n + c], M[rank * n + c]);
    for (int r = 0; r < n; ++r) std::swap(M[r * n + pc], M[r * n + rank]);
    std::swap(colperm[pc], colperm[rank]);
    for (int r = 0; r < n; ++r) {
      if (r == rank) continue;
      const cplx f = M[r * n + rank] / M[rank * n + rank];
      if (f == 0.0) continue;
      for (int c = rank; c < n; ++c) M[r * n + c] -= f * M[rank * n + c];
    }
  }
  std::vector<CVec> basis;
  for (int free = rank; free < n; ++free) {
    CVec y(n, 0.0);
    y[free] = 1.0;
    for (int r = 0; r < rank; ++r) y[r] = -M[r * n + free] / M[r * n + r];
    CVec x(n);
    for (int k = 0; k < n; ++k) x[colperm[k]] = y[k];
    for (const auto& b : basis) {
      cplx proj = 0.0;
      for (int k = 0; k < n; ++k) proj += std::conj(b[k]) * x[k];
      for (int k = 0; k < n; ++k) x[k] -= proj * b[k];
    }
    double nrm = 0.0;
    for (auto& z : x) nrm += std::norm(z);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    for (auto& z : x) z /= nrm;
    basis.push_back(std::move(x));
  }
  return basis;
}

inline std::vector<Vec> null_space(const Mat& A, double tol = 1e-9) {
  const int n = A.dim();
  std::vector<cplx> M(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M[i * n + j] = A(i, j);
  std::vector<Vec> out;
  for (const auto& b : null_space_complex(M, n, tol)) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = b[k].real();
    out.push_back(v);
  }
  return out;
}

// Eigenvectors of a real matrix for eigenvalue z (complex in general).
inline std::vector<CVec> eigenvectors(const Mat& A, cplx z, double tol = 1e-7) {
  const int n = A.dim();
  std::vector<cplx> M(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M[i * n + j] = A(i, j) - (i == j ? z : 0.0);
  return null_space_complex(std::move(M), n, tol);
}

// ============================================================================
// Structured constructions
// ============================================================================

inline Mat kron(const Mat& A, const Mat& B) {
  const int p = A.dim(), q = B.dim();
  require(p * q <= kMaxDim, "Kronecker product exceeds the supported dimension");
  Mat K(p * q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l) K(i * q + k, j * q + l) = A(i, j) * B(k, l);
  return K;
}

inline Vec kron(const Vec& a, const Vec& b) {
  Vec r(a.size() * b.size());
  for (int i = 0; i < a.size(); ++i)
    for (int k = 0; k < b.size(); ++k) r[i * b.size() + k] = a[i] * b[k];
  return r;
}

inline Mat convex_combination(const std::vector<Mat>& mats, std::span<const double> w) {
  require(!mats.empty() && mats.size() == w.size(), "weights must match the vertex count");
  double s = 0.0;
  for (double x : w) {
    require(x >= -1e-12, "weights must be nonnegative");
    s += x;
  }
  require(std::abs(s - 1.0) <= 1e-12, "weights must sum to one");
  Mat M(mats[0].dim());
  for (size_t i = 0; i < mats.size(); ++i)
    if (w[i] != 0.0) M += mats[i] * w[i];
  return M;
}

// ============================================================================
// Complex 2x2 matrices and realification
// ============================================================================

struct CMat2 {
  std::array<std::array<cplx, 2>, 2> a{};
  cplx& operator()(int i, int j) { return a[i][j]; }
  cplx operator()(int i, int j) const { return a[i][j]; }
  CMat2 adjoint() const {
    CMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r(i, j) = std::conj(a[j][i]);
    return r;
  }
  friend CMat2 operator*(const CMat2& x, const CMat2& y) {
    CMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j);
    return r;
  }
  friend CMat2 operator+(const CMat2& x, const CMat2& y) {
    CMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r(i, j) = x(i, j) + y(i, j);
    return r;
  }
  friend CMat2 operator*(cplx s, const CMat2& x) {
    CMat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r(i, j) = s * x(i, j);
    return r;
  }
  std::array<cplx, 2> eigenvalues() const {
    const cplx tr = a[0][0] + a[1][1];
    const cplx dt = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const cplx disc = std::sqrt(tr * tr / 4.0 - dt);
    return {tr / 2.0 + disc, tr / 2.0 - disc};
  }
};

// Identifies C^2 with R^4 via (z1, z2) -> (Re z1, Im z1, Re z2, Im z2).
inline Mat realify(const CMat2& T) {
  Mat R(4);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      const double x = T(j, k).real(), y = T(j, k).imag();
      R(2 * j, 2 * k) = x;
      R(2 * j, 2 * k + 1) = -y;
      R(2 * j + 1, 2 * k) = y;
      R(2 * j + 1, 2 * k + 1) = x;
    }
  return R;
}

inline Vec realify(const std::array<cplx, 2>& z) {
  return Vec{z[0].real(), z[0].imag(), z[1].real(), z[1].imag()};
}

inline std::array<cplx, 2> complexify(const Vec& x) {
  require(x.size() == 4, "complexify expects a 4-vector");
  return {cplx(x[0], x[1]), cplx(x[2], x[3])};
}

}  // namespace swlab
