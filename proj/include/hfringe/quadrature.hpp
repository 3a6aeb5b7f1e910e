#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include "hfringe/core.hpp"
#include "hfringe/errors.hpp"

namespace hfringe {

// Controls for the adaptive kernel quadrature. max_chunk caps the initial
// panel length so the unit-frequency oscillation is always resolved by
// well over 16 nodes per period.
struct QuadratureOptions {
  double rel_tol = 1e-11;
  double abs_tol = 0.0;
  int max_segments = 40000;
  double max_chunk = std::numbers::pi;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (nodes on [0,1] side).
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kronrod_weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Segment {
  double a, b;
  Complex integral;
  double error;
};

struct SegmentOrder {
  bool operator()(const Segment& lhs, const Segment& rhs) const { return lhs.error < rhs.error; }
};

// One Gauss-Kronrod panel of g(x) = exp[(beta - i)x] * phi(x).
template <class F>
Segment gk15_kernel(F&& phi, double a, double b, double beta) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const Complex exponent(beta, -1.0);

  auto g = [&](double x) -> Complex { return std::exp(exponent * x) * phi(x); };

  Complex kronrod(0.0, 0.0), gauss(0.0, 0.0);
  const Complex g_mid = g(mid);
  kronrod += kronrod_weights[7] * g_mid;
  gauss += gauss_weights[3] * g_mid;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * gk_nodes[j];
    const Complex sum = g(mid - dx) + g(mid + dx);
    kronrod += kronrod_weights[j] * sum;
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return Segment{a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

// Integral of exp[(beta - i)x] * phi(x) over [lower, upper]. `cuts` lists
// interior points where phi kinks or jumps; panels never straddle them.
// Globally adaptive: the worst panel is bisected until the summed error
// estimate meets max(abs_tol, rel_tol * |integral|).
template <class F>
Complex kernel_integral(F&& phi, double lower, double upper, double beta,
                        std::span<const double> cuts = {},
                        const QuadratureOptions& opt = {}) {
  if (!(lower <= upper)) throw ValidationError("kernel_integral: lower > upper");
  if (lower == upper) return Complex(0.0, 0.0);

  std::vector<double> edges{lower, upper};
  for (double c : cuts)
    if (c > lower && c < upper) edges.push_back(c);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<detail::Segment, std::vector<detail::Segment>, detail::SegmentOrder> queue;
  Complex total(0.0, 0.0);
  double total_error = 0.0;
  int segments = 0;

  auto push = [&](double a, double b) {
    detail::Segment s = detail::gk15_kernel(phi, a, b, beta);
    total += s.integral;
    total_error += s.error;
    queue.push(s);
    ++segments;
  };

  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const int chunks = std::max(1, static_cast<int>(std::ceil((b - a) / opt.max_chunk)));
    for (int k = 0; k < chunks; ++k)
      push(a + (b - a) * k / chunks, a + (b - a) * (k + 1) / chunks);
  }

  auto tolerance = [&]() { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };

  while (total_error > tolerance() && !queue.empty()) {
    if (segments >= opt.max_segments) {
      std::ostringstream msg;
      msg << "kernel_integral: no convergence after " << segments
          << " panels; achieved error " << total_error << ", requested " << tolerance();
      throw ConvergenceError(msg.str());
    }
    detail::Segment worst = queue.top();
    queue.pop();
    total -= worst.integral;
    total_error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Panel collapsed to rounding width; keep its estimate and move on.
      total += worst.integral;
      continue;
    }
    push(worst.a, mid);
    push(mid, worst.b);
  }
  return total;
}

}  // namespace hfringe
