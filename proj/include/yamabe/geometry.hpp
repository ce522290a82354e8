#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "yamabe/grid.hpp"

namespace ymb {

class SingularMetricError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

// ---- pointwise curvature from metric components ----

void metric_at(const Chart& ch, const double* x, Eigen::MatrixXd& g);

/// dg[c](a,b) = d_c g_ab by 4th-order central differences (one-sided near box edges).
void metric_deriv(const Chart& ch, const double* x, std::vector<Eigen::MatrixXd>& dg);

/// Christoffel symbols of the second kind, gamma[a](b,c) = Gamma^a_{bc}.
std::vector<Eigen::MatrixXd> christoffel(const Chart& ch, const double* x);

/// Riemann tensor with first index raised, riem[a][b](c,d) = R^a_{bcd}.
std::vector<std::vector<Eigen::MatrixXd>> riemann(const Chart& ch, const double* x);

Eigen::MatrixXd ricci(const Chart& ch, const double* x);
double scalar_curvature(const Chart& ch, const double* x);

/// Weyl tensor (all indices lowered) and its pointwise metric norm |W|.
/// In dimension 3 the result is identically zero.
struct WeylResult {
  std::vector<std::vector<Eigen::MatrixXd>> W;  // W[a][b](c,d)
  double norm = 0;
};
WeylResult weyl_tensor(const Chart& ch, const double* x);

/// Second fundamental form data of a physical boundary face, inward normal convention
/// (H > 0 for a face bounding a convex region).
struct BoundaryForms {
  Eigen::MatrixXd II;   // (n-1)x(n-1), tangential coordinates of the face
  double H = 0;         // trace with respect to the induced metric
  Eigen::MatrixXd pi;   // trace-free part
  double pi_norm = 0;   // |pi| in the induced metric
};
BoundaryForms boundary_forms(const Chart& ch, const double* x, int axis, int side);
/// Convenience: locates the physical face the point lies on.
BoundaryForms boundary_forms(const Chart& ch, const double* x);

/// Vanishing-order scan around x0: for each radius, sup over sampled directions of
/// d^{2-deg}|W| (and, for boundary centers, d^{1-deg}|pi| over boundary directions),
/// deg = floor((n-2)/2). For n = 3 the raw |W| is reported.
struct ZScanRow {
  double r = 0;
  double weyl_term = 0;
  std::optional<double> pi_term;
};
std::vector<ZScanRow> z_set_scan(const Chart& ch, const std::vector<double>& x0,
                                 const std::vector<double>& radii);

// ---- quadrature ----

enum class Region { volume, boundary };

/// Composite trapezoid of a nodal field against the metric volume (or induced
/// boundary) element. Boundary integrals run over physical faces only.
double integrate(const Field& f, Region region = Region::volume);

/// Gauss-Legendre panel quadrature of a callable over the chart box (metric volume weight).
double integrate_fn(const Chart& ch, const std::function<double(const double*)>& f,
                    int panels_per_axis, int k = 6);

/// Radial integral of f(r) over the full ball of radius R in R^n (measure sigma_{n-1} r^{n-1} dr),
/// graded panels resolving `inner` near 0.
double ball_radial_integral(int n, double R, double inner, const std::function<double(double)>& f);

/// Integral of f(y) over {|y| <= R} in R^n around 0: graded radial x product-sphere rule.
double ball_integral(int n, double R, double inner, const std::function<double(const double*)>& f,
                     int npolar = 12, int nazim = 16);

/// Integral of f(y) over {|y| <= R, y_n >= -depth} around 0 (the center sits at height
/// `depth` above the cut plane). Axis-aligned spherical cap handling: polar angle from +e_n.
double cap_integral(int n, double R, double inner, double depth,
                    const std::function<double(const double*)>& f, int ntheta = 24,
                    int nazim = 16);

/// Visit the quadrature points of cap_integral with their weights (sum of w * f(y)
/// over the visits equals the integral).
void cap_visit(int n, double R, double inner, double depth,
               const std::function<void(const double*, double)>& visit, int ntheta = 24,
               int nazim = 16);

/// Integral over the sphere {|y-center| = R} (optionally only its upper half
/// {y_n > center_n}) of f(point, unit_normal); flat surface measure.
double sphere_surface_integral(int n, const std::vector<double>& center, double R, bool upper_half,
                               const std::function<double(const double*, const double*)>& f,
                               int npolar = 24, int nazim = 32);

}  // namespace ymb
