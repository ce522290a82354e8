#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "yamabe/geometry.hpp"

namespace ymb {

class SolvabilityError : public NumericsError {
 public:
  SolvabilityError(const std::string& msg, double probe) : NumericsError(msg), probe_eigenvalue(probe) {}
  double probe_eigenvalue;
};

class ConventionError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

class PositivityError : public NumericsError {
 public:
  PositivityError(const std::string& msg, size_t node) : NumericsError(msg), node(node) {}
  size_t node;
};

/// Operator conventions. `energy`: L = (4(n-1)/(n-2)) Lap - R,  B = (2(n-1)/(n-2)) d/deta - H.
/// `appendixB`: L = Lap - ((n-2)/(4(n-1))) R,  B = d/deta - ((n-2)/(2(n-1))) H.
/// The two differ exactly by the factor 4(n-1)/(n-2).
enum class LConvention { energy, appendixB };

/// Assembled discrete conformal Laplacian on a structured grid. Conformally flat
/// charts only; the Laplace-Beltrami part is a symmetric (volume-weighted)
/// divergence-form stencil with reflection closure at every face. Physical faces
/// receive genuine boundary-operator data only inside solve_bvp.
class ConformalOperator {
 public:
  ConformalOperator(const Chart& chart, const Grid& grid, LConvention conv,
                    const Field* conformal_u = nullptr);

  const Chart& chart() const { return *chart_; }
  const Grid& grid() const { return *grid_; }
  LConvention convention() const { return conv_; }
  /// Exact convention conversion factor 4(n-1)/(n-2).
  double convention_factor() const;

  int n() const { return grid_->n(); }
  size_t size() const { return grid_->size(); }

  /// Nodal quadrature weights including the metric volume element.
  const std::vector<double>& weights() const { return wq_; }
  const std::vector<double>& scalar_curv() const { return R0_; }
  const std::vector<double>& factor() const { return cnod_; }

  /// Discrete Laplace-Beltrami action (reflection closure).
  void apply_lap(const double* u, double* out) const;
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& lap_matrix() const { return lap_; }

  /// L u per the instance convention.
  Field apply_L(const Field& u, LConvention expected) const;

  /// B u on physical boundary nodes (zero elsewhere), one-sided second order.
  Field apply_B(const Field& u, LConvention expected) const;

  /// Solve L u = f in M, B u = fbar on the physical boundary. Throws
  /// SolvabilityError when the coercivity probe fails.
  Field solve_bvp(const Field& f, const Field& fbar, double tol = 1e-10) const;

  /// Smallest eigenvalue of -L with natural boundary conditions in the
  /// volume-weighted inner product (the coercivity probe value).
  double smallest_eigenvalue() const;

  /// Quadratic form  u^T W (-L) v  = int ( aL |du|^2 + cR R0 u v ) + H-terms.
  double energy_product(const Field& u, const Field& v) const;

  // coefficients of the convention
  double aL() const { return aL_; }
  double cR() const { return cR_; }
  double bB() const { return bB_; }
  double cH() const { return cH_; }

  struct BoundaryEntry {
    size_t node;
    int axis, side;
    double flux;  // aL * c^{-n/2} * kappa_face * 2 h   (multiplies the ghost substitution)
    double sqc;   // sqrt(c) at the node
    double H;     // mean curvature of the face at the node
  };
  const std::vector<BoundaryEntry>& boundary_entries() const { return bentries_; }

  /// PCG solve of  W(-L + diag(extra)) u = W rhs  (+ boundary H fold when `bvp`).
  /// `extra` may be empty (no extra diagonal).
  Field solve_general(const std::vector<double>& extra_diag, const std::vector<double>& rhs,
                      double tol, bool bvp, const std::vector<double>* rhs_boundary = nullptr,
                      size_t* iterations = nullptr) const;

  /// Replace the nodal scalar curvature (test fixtures with a prescribed R term).
  void override_scalar_curv(const std::vector<double>& R);

 private:
  const Chart* chart_;
  const Grid* grid_;
  LConvention conv_;
  double aL_, cR_, bB_, cH_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> lap_;
  std::vector<double> R0_, wq_, cnod_;
  std::vector<BoundaryEntry> bentries_;
  mutable double lambda_min_ = std::numeric_limits<double>::quiet_NaN();

  void check_convention(LConvention expected) const;
};

/// Scalar curvature of u^{4/(n-2)} g0 by the pointwise conformal-change formula
/// with the discrete Laplacian. Throws PositivityError if u <= 0 anywhere.
Field conformal_scalar(const ConformalOperator& base_op, const Field& u);

/// Mean curvature of the physical boundary under u^{4/(n-2)} g0 (boundary field).
Field conformal_mean(const ConformalOperator& base_op, const Field& u);

// ---- generic symmetric eigensolver (block inverse power + Rayleigh-Ritz) ----

struct EigenPair {
  double lambda;
  std::vector<double> vec;
};

/// Smallest k eigenpairs of  A x = lambda B x  with A given through its action
/// (must be symmetric w.r.t. the standard inner product after the caller's
/// weighting) and B diagonal positive. Vectors returned B-orthonormal.
std::vector<EigenPair> smallest_eigenpairs(
    const std::function<void(const double*, double*)>& applyA, const std::vector<double>& Bdiag,
    size_t dim, int k, int max_iter = 200, double tol = 1e-10, std::uint64_t seed = 1234);

}  // namespace ymb
