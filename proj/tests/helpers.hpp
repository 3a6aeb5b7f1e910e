#pragma once

// Test-side oracles, independent of the library implementation paths they
// cross-check.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace testkit {

using Complex = std::complex<double>;

// Plain fixed-step classical RK4 on the amplitude equations
//   dA_s/dx = i phi A_p,  dA_p/dx = i phi A_s + (i - beta) A_p,
// written out directly from the defining system.
inline std::pair<Complex, Complex> reference_rk4(const std::function<double(double)>& phi,
                                                 Complex s0, Complex p0, double x0, double x1,
                                                 double beta, long steps) {
  const Complex i(0.0, 1.0);
  auto rhs = [&](double x, Complex as, Complex ap, Complex& das, Complex& dap) {
    const double f = phi(x);
    das = i * f * ap;
    dap = i * f * as + (i - beta) * ap;
  };
  const double h = (x1 - x0) / static_cast<double>(steps);
  Complex as = s0, ap = p0;
  for (long k = 0; k < steps; ++k) {
    const double x = x0 + h * static_cast<double>(k);
    Complex k1s, k1p, k2s, k2p, k3s, k3p, k4s, k4p;
    rhs(x, as, ap, k1s, k1p);
    rhs(x + 0.5 * h, as + 0.5 * h * k1s, ap + 0.5 * h * k1p, k2s, k2p);
    rhs(x + 0.5 * h, as + 0.5 * h * k2s, ap + 0.5 * h * k2p, k3s, k3p);
    rhs(x + h, as + h * k3s, ap + h * k3p, k4s, k4p);
    as += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    ap += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  }
  return {as, ap};
}

// Composite Simpson rule for plain real integrals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4096) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Composite Simpson rule for the complex kernel integral of a callable.
inline Complex simpson_kernel(const std::function<double(double)>& phi, double a, double b,
                              double beta, int n = 20000) {
  if (n % 2) ++n;
  const Complex k(beta, -1.0);
  auto g = [&](double x) { return std::exp(k * x) * phi(x); };
  const double h = (b - a) / n;
  Complex s = g(a) + g(b);
  for (int j = 1; j < n; ++j) s += g(a + j * h) * Complex(j % 2 ? 4.0 : 2.0, 0.0);
  return s * (h / 3.0);
}

// Least-squares polynomial fit by normal equations (tiny degrees only).
inline std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                                   int degree) {
  const int m = degree + 1;
  std::vector<double> ata(m * m, 0.0), aty(m, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> pow(m, 1.0);
    for (int j = 1; j < m; ++j) pow[j] = pow[j - 1] * x[i];
    for (int j = 0; j < m; ++j) {
      aty[j] += pow[j] * y[i];
      for (int k = 0; k < m; ++k) ata[j * m + k] += pow[j] * pow[k];
    }
  }
  // Gaussian elimination, partial pivoting.
  std::vector<double> sol(aty);
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(ata[r * m + col]) > std::abs(ata[pivot * m + col])) pivot = r;
    for (int c = 0; c < m; ++c) std::swap(ata[col * m + c], ata[pivot * m + c]);
    std::swap(sol[col], sol[pivot]);
    for (int r = col + 1; r < m; ++r) {
      const double f = ata[r * m + col] / ata[col * m + col];
      for (int c = col; c < m; ++c) ata[r * m + c] -= f * ata[col * m + c];
      sol[r] -= f * sol[col];
    }
  }
  std::vector<double> out(m);
  for (int r = m - 1; r >= 0; --r) {
    double s = sol[r];
    for (int c = r + 1; c < m; ++c) s -= ata[r * m + c] * out[c];
    out[r] = s / ata[r * m + r];
  }
  return out;
}

inline double slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const auto c = polyfit(lx, ly, 1);
  return c[1];
}

}  // namespace testkit
