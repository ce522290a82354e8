#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "yamabe/numerics.hpp"

namespace ymb {

enum class FaceKind { physical, artificial };

/// A coordinate chart: an axis-aligned box in R^n carrying metric components.
/// Conformally flat charts (g_ab = c(x) delta_ab) additionally expose the factor
/// as w with g = w^{4/(n-2)} delta, which is what the elliptic machinery assembles.
struct Chart {
  int n = 3;
  std::string name;
  std::vector<double> lo, hi;
  std::vector<std::array<FaceKind, 2>> face;  // per axis {low, high}

  // general metric evaluator, row-major n*n, always available
  std::function<void(const double*, double*)> metric;

  // conformally flat data (empty if not conformally flat)
  bool conf_flat = false;
  std::function<double(const double*)> w;        // g = w^{4/(n-2)} delta
  std::function<void(const double*, double*)> w_grad;
  std::function<double(const double*)> w_lap;

  // Fermi property: g_an = delta_an on the physical boundary face
  bool fermi = false;

  double h_fd = 1e-3;  // step for metric finite differences

  bool has_physical() const;
  bool physical_face(int axis, int side) const { return face[axis][side] == FaceKind::physical; }

  double cfac(const double* x) const;              // c = w^{4/(n-2)} (requires conf_flat)
  double scalar_curv_conf(const double* x) const;  // exact R for conformally flat charts
  double mean_curv_boundary(const double* x, int axis, int side) const;  // H of a physical face

  /// log-metric tensor h = log(g) and its first derivatives (conformally flat only:
  /// h_ab = tau(x) delta_ab with tau = (4/(n-2)) log w).
  double logmetric_tau(const double* x) const;
  void logmetric_tau_grad(const double* x, double* grad) const;

  bool inside(const double* x, double margin = 0.0) const;
};

// ---- catalog ----

/// Flat unit box [0,1]^n; every face is physical boundary (H = 0 everywhere).
Chart flat_box(int n);

/// Flat half-box [-L,L]^{n-1} x [0,L]; the face x_n = 0 is the physical boundary,
/// all other faces are artificial chart edges.
Chart flat_half_box(int n, double L);

/// Stereographic chart of the round unit sphere: g = (2/(1+|x|^2))^2 delta on
/// [-L,L]^n, all faces artificial. R = n(n-1).
Chart sphere_chart(int n, double L);

/// Stereographic chart of the round unit hemisphere: same factor on the half-box,
/// x_n = 0 physical (the equator, totally geodesic).
Chart hemisphere_chart(int n, double L);

/// Conformally flat Schwarzschild-type chart: g = (1 + (m/2) r^{2-n})^{4/(n-2)} delta.
/// Valid away from r = 0; R = 0. `half` marks x_n = 0 as physical boundary.
Chart schwarzschild_chart(int n, double m, double L, bool half);

/// Flat half-box with an interior conformal bump: w = 1 + A * bump centered at
/// `center` with radius `rad` (compact support, C^2). H = 0 on the boundary.
Chart bump_half_box(int n, double L, double A, const std::vector<double>& center, double rad);

/// Flat box with an interior conformal bump (all faces physical).
Chart bump_box(int n, double A, const std::vector<double>& center, double rad);

/// Hemisphere chart multiplied by an interior conformal bump: positive-curvature
/// background with a localized perturbation (coercive operator fixture).
Chart bump_hemisphere(int n, double L, double A, const std::vector<double>& center, double rad);

/// Asymptotically flat chart with a decaying g_ni tail (for mass-term ablations):
/// g = delta + beta * y_i y_n-symmetrized tail of order |y|^{-1}. Metric evaluator only.
Chart gni_tail_chart(int n, double beta, double L);

/// Rotate a chart: pulls the metric back by the orthogonal matrix Q (row-major).
/// Only the metric evaluator survives; used for coordinate-invariance checks.
Chart rotated_chart(const Chart& base, const std::vector<double>& Q);

/// Look up a catalog chart by name with parameters; throws NumericsError on unknown names.
Chart chart_by_name(const std::string& name, int n, const std::vector<double>& params);

}  // namespace ymb
