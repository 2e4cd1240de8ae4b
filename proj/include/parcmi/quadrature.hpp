#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace parcmi::quadrature {

struct Controls {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_subdivisions = 2000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::fabs(resk);
  std::array<double, 7> fv1{}, fv2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::fabs(f1) + std::fabs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::fabs(fc - reskh);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
  const double ahalf = std::fabs(half);
  resk *= half;
  resabs *= ahalf;
  resasc *= ahalf;
  double err = std::fabs((resk - resg * half));
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  if (resabs > uflow / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
/// The panel with the largest error estimate is bisected until the summed
/// error meets max(abs_tol, rel_tol * |value|). Interior breakpoints (kinks
/// or discontinuities of f) seed the initial partition. Endpoints are never
/// evaluated, so integrable endpoint singularities are tolerated.
template <class F>
Result integrate(F&& f, double a, double b, const Controls& controls = {},
                 std::span<const double> breakpoints = {}) {
  Result out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::size_t evals = 0;
  auto counted = [&](double x) {
    ++evals;
    return f(x);
  };
  std::vector<double> edges{a};
  for (double p : breakpoints)
    if (p > std::min(a, b) && p < std::max(a, b)) edges.push_back(p);
  edges.push_back(b);
  if (a < b) std::sort(edges.begin() + 1, edges.end() - 1);
  else std::sort(edges.begin() + 1, edges.end() - 1, std::greater<>());

  std::vector<detail::Panel> panels;  // max-heap on error
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto p = detail::gauss_kronrod15(counted, edges[i], edges[i + 1]);
    total += p.value;
    total_err += p.error;
    panels.push_back(p);
  }
  std::make_heap(panels.begin(), panels.end());
  int subdivisions = 0;
  while (total_err > std::max(controls.abs_tol, controls.rel_tol * std::fabs(total))) {
    if (subdivisions >= controls.max_subdivisions) break;
    std::pop_heap(panels.begin(), panels.end());
    const auto worst = panels.back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {  // exhausted at machine precision
      std::push_heap(panels.begin(), panels.end());
      break;
    }
    panels.pop_back();
    const auto left = detail::gauss_kronrod15(counted, worst.a, mid);
    const auto right = detail::gauss_kronrod15(counted, mid, worst.b);
    ++subdivisions;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push_back(left);
    std::push_heap(panels.begin(), panels.end());
    panels.push_back(right);
    std::push_heap(panels.begin(), panels.end());
  }
  total = 0.0;
  total_err = 0.0;
  for (const auto& p : panels) {
    total += p.value;
    total_err += p.error;
  }
  out.value = total;
  out.abs_error = total_err;
  out.evaluations = evals;
  out.subdivisions = subdivisions;
  out.converged =
      total_err <= std::max(controls.abs_tol, controls.rel_tol * std::fabs(total));
  return out;
}

}  // namespace parcmi::quadrature
