#pragma once

#include "yamabe/functionals.hpp"
#include "yamabe/green.hpp"
#include "yamabe/poly.hpp"

namespace ymb {

enum class BubbleKind { A, B, C };

/// Standard bubble profile and its closed-form derivatives.
struct Bubble {
  int n;
  double eps;
  double value(const double* y) const;
  void grad(const double* y, double* g) const;
  void hess(const double* y, double* h) const;  // n*n row-major
  double lap(const double* y) const;
  double dvalue_deps(const double* y) const;
};

/// Radial cutoff: 1 on [0, 4rho/3], 0 beyond 5rho/3, quintic in between.
double cutoff_radial(double r, double rho, int deriv = 0);

/// Auxiliary correction built from a polynomial vector field:
/// phi = dU.V + ((n-2)/(2n)) U div V.
class PhiEval {
 public:
  PhiEval(int n, double eps, std::vector<Poly> V);
  double value(const double* y) const;
  void grad(const double* y, double* g) const;
  double lap(const double* y) const;
  const std::vector<Poly>& V() const { return V_; }

 private:
  int n_;
  double eps_;
  std::vector<Poly> V_, dV_;  // dV_[a*n+b] = d_b V_a
  Poly div_;
  std::vector<Poly> ddiv_;  // gradient of div
  Poly lapdiv_;
  std::vector<Poly> lapV_;
};

/// Glued test-function evaluator on flat model charts, in center-relative
/// coordinates. The physical boundary (kinds A and B) is the plane y_n = -depth;
/// kind C carries no boundary. Scaled by (4n(n-1)/rbar_inf)^{(n-2)/4}.
struct TestFunction {
  int n = 3;
  BubbleKind kind = BubbleKind::C;
  double eps = 0.1, rho = 1.0;
  double depth = 0;  // 0 for A; >0 for B; ignored for C
  double pref = 1.0;
  const PhiEval* phi = nullptr;

  double green(const double* y) const;  // far field with its normalization tag
  void green_grad(const double* y, double* g) const;
  double tag() const { return kind == BubbleKind::B ? 0.5 : 1.0; }

  double value(const double* y) const;
  void grad(const double* y, double* g) const;
  double lap(const double* y) const;

  // parameter derivatives for the fitting machinery
  double dvalue_deps(const double* y) const;
  void dvalue_dcenter(const double* y, double* d) const;
};

TestFunction make_test_function(int n, BubbleKind kind, double eps, double rho, double depth = 0,
                                double rbar_inf = 0, const PhiEval* phi = nullptr);

struct BubbleSpec {
  BubbleKind kind = BubbleKind::C;
  std::vector<double> center;
  double eps = 0.1;
  double rho = 1.0;
  double rbar_inf = 0;  // 0: defaults to 4n(n-1)
  const GreenTable* green = nullptr;
  std::function<double(const double*)> fx0;  // conformal prefactor; identity if empty
  const PhiEval* phi = nullptr;

  void validate(const Chart& chart) const;  // 2 eps < rho, kind/center placement
};

/// Nodal samples of the glued test function on a chart grid (far field from the
/// attached table).
Field assemble_test_function(const BubbleSpec& spec, const Chart& chart, const Grid& grid);

/// Discrete interior residual a Lap u - R0 u + rbar_inf u^{(n+2)/(n-2)} on the grid.
Field interior_residual_field(const ConformalOperator& op, const Field& ubar, double rbar_inf);

/// L^{2n/(n+2)} norm of the analytic interior residual of a flat-model test
/// function over its domain ball of radius R.
double interior_residual_lp(const TestFunction& tf, double R);

struct BoundaryResidualReport {
  std::vector<double> s;    // tangential radius samples
  std::vector<double> val;  // boundary-operator values
  double sup_pos = 0, sup_neg = 0;
  double lq_norm = 0;  // L^{2(n-1)/n} norm over the patch
};
/// Boundary-operator residual of a flat-model test function on its boundary
/// plane; kind C returns the exact zero report.
BoundaryResidualReport boundary_residual(const TestFunction& tf, double patch_R,
                                         int nsamples = 64);

struct BubbleEnergy {
  EnergyReport report;
  double sharp = 0;  // Q(S+^n) for kind A, Y(S^n) for kinds B and C
  double gap = 0;    // E - sharp
};
/// Energy of a flat-model test function over {|y| <= R} (cut by the boundary
/// plane for kinds A and B), graded radial-angular quadrature.
BubbleEnergy energy_of_bubble(const TestFunction& tf, double R);

/// (4(n-1)/(n-2)) int_{graph patch} U_eps dU_eps/dnu over the graph boundary
/// x_n = -delta + kappa |xbar|^2, |xbar| <= rho. Requires 0 < eps < delta.
double bubble_boundary_flux(int n, double eps, double delta, double rho, double kappa);

struct AuxiliaryBounds {
  double integral = 0;        // int_{|xbar|<=rho} (eps^2+|xbar|^2+delta^2)^{2-n}
  double bound_ratio = 0;     // integral / (rho delta^{2-n})
  double ratio_min = 0, ratio_max = 0;  // graph-vs-flat denominators over samples
};
AuxiliaryBounds auxiliary_integral_bounds(int n, double eps, double delta, double rho,
                                          double kappa);

struct PhiSystem {
  PhiEval phi;
  // residual of the defining equation at a point
  std::function<double(const double*)> equation_residual;
  // normal derivative on the boundary plane x_n = 0
  std::function<double(const double*)> normal_derivative;
};
/// Build phi from a supplied polynomial vector field; throws when V violates the
/// boundary rows d_n V_i = V_n = 0.
PhiSystem phi_from_V(int n, double eps, const std::vector<Poly>& V, const PolyTensor& H);

/// Empirical coercivity constant of the quadratic-form comparison: the ratio of
/// (1/4) int_{B+_rho} |Q|^2 to the weighted coefficient sum; 0 when H = 0.
double coercivity_ratio(int n, double eps, double rho, const std::vector<Poly>& V,
                        const PolyTensor& H);

struct SweepRow {
  BubbleKind kind;
  double eps, rho, delta;
  double energy, gap, res_int_norm, res_bdry_pos, res_bdry_neg;
};
void write_bubble_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace ymb
