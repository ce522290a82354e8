#pragma once

#include "yamabe/conformal.hpp"

namespace ymb {

/// Green function data for the conformal Laplacian with pole x0: a singular
/// analytic part (image-doubled kernel near the boundary, single kernel in the
/// interior, with cutoffs) plus a smooth grid remainder. The normalization tag is
/// the leading coefficient of |y-x0|^{2-n}: 1 for boundary and interior-far
/// centers, 1/2 for tubular centers.
struct GreenTable {
  const Chart* chart = nullptr;
  std::vector<double> x0;
  double tag = 1.0;
  bool boundary_center = false;

  std::function<double(const double*)> sing;
  std::function<void(const double*, double*)> sing_grad;
  Field remainder;  // sampled smooth part; empty grid pointer when absent
  bool has_remainder = false;

  // diagnostics attached by assemble_green
  double positivity_min = std::numeric_limits<double>::quiet_NaN();
  double boundary_residual_sup = std::numeric_limits<double>::quiet_NaN();
  bool correction_solved = false;

  double eval(const double* y) const;
  void grad(const double* y, double* g) const;

  /// Constant in  -int G L phi - int_bdry G B phi = const * phi(x0): the tag times
  /// the solid fraction of the pole times (n-2) sigma_{n-1}.
  double reproducing_constant() const;
};

/// Analytic tables on flat charts: |y|^{2-n} for boundary centers, the halved
/// image pair for interior centers of half-space charts, a single kernel when no
/// physical boundary is near. `mass_shift` adds a constant to the kernel
/// (engineered fixtures whose flux integral carries a prescribed mass).
GreenTable flat_green_table(const Chart& chart, const std::vector<double>& x0,
                            double mass_shift = 0.0);

/// Parametrix kernel K(x, .) per the near-boundary image pair / interior kernel
/// gluing, in chart coordinates. Exact Neumann property on the physical face.
struct ParametrixKernel {
  const Chart* chart;
  double rho0;
  int n;
  /// weight of the K1 (image-pair) branch for a center with boundary distance d
  double branch_weight(const double* x) const;
  double value(const double* x, const double* y) const;
  void grad_y(const double* x, const double* y, double* g) const;
  double lap_flat_y(const double* x, const double* y) const;  // flat Laplacian in y
  /// L_{g,y} K(x,y) for the conformally flat chart metric, appendix convention.
  double Lg_y(const double* x, const double* y) const;
};
ParametrixKernel parametrix_kernel(const Chart& chart, double rho0);

struct GiraudChain {
  std::vector<Field> gamma;  // gamma[k](y) = Gamma_{k+1}(x0, y), k = 0..kmax-1
  std::vector<double> slope; // near-center slope fits (first two levels)
};

/// Sampled Giraud iterates Gamma_1..Gamma_kmax with singularity-subtracted
/// convolutions.
GiraudChain giraud_chain(const ParametrixKernel& K, const Grid& grid,
                         const std::vector<double>& x0, int kmax);

/// Direct (grid-free) convolution probe of the second iterate at a point.
double giraud_second_probe(const ParametrixKernel& K, const std::vector<double>& x0,
                           const double* y);

struct AssembleOptions {
  double rho0 = 0;          // 0: choose from the chart margins
  double cg_tol = 1e-11;
  int kmax = 0;             // 0: n terms as in the chain construction
};

/// Full construction: K + sum_k int Gamma_k K + correction solve; positivity and
/// boundary-condition diagnostics attached. Throws SolvabilityError when the
/// correction problem is not coercive.
GreenTable assemble_green(const Chart& chart, const Grid& grid, const std::vector<double>& x0,
                          const AssembleOptions& opt = {});

struct ExpansionRow {
  double r;
  double err;       // |G - |y-x0|^{2-n}| sampled sup on the shell
  double envelope;  // fitted envelope value at r
};
/// Radial profile of G minus its leading kernel, with the log-corrected envelope
/// fit for n in {3,4} (plain power fit otherwise).
std::vector<ExpansionRow> expansion_check(const GreenTable& table,
                                          const std::vector<double>& radii);

/// Relative defect of  -int G L_g phi - int_bdry G B_g phi = const * phi(x0)
/// for a smooth test function given with flat gradient and Laplacian closures.
/// Volume quadrature is the grid trapezoid with a polar patch around the pole.
double reproducing_residual(const GreenTable& table, const Grid& grid,
                            const std::function<double(const double*)>& phi,
                            const std::function<void(const double*, double*)>& phi_grad,
                            const std::function<double(const double*)>& phi_lap);

struct FluxSeries {
  std::vector<double> rho;
  std::vector<double> I;
  std::vector<double> cauchy;  // |I(rho_k) - I(rho_{k+1})|
  double extrapolated = 0;
};

/// The two-surface-integral flux of a boundary-center table over upper
/// half-spheres of the given radii, with a rho -> 0 extrapolation.
FluxSeries flux_I(const GreenTable& table, const std::vector<double>& rho_list);

}  // namespace ymb
