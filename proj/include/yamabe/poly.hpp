#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "yamabe/numerics.hpp"

namespace ymb {

using MultiIndex = std::vector<int>;

int mi_degree(const MultiIndex& a);

/// Sparse multivariate polynomial with exact coefficient arithmetic on doubles.
class Poly {
 public:
  explicit Poly(int nvars = 0) : n_(nvars) {}
  int nvars() const { return n_; }

  Poly& add_term(const MultiIndex& a, double c);
  double coeff(const MultiIndex& a) const;
  const std::map<MultiIndex, double>& terms() const { return t_; }

  Poly diff(int axis) const;
  Poly mul_monomial(const MultiIndex& a, double c) const;
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly scaled(double c) const;

  double eval(const double* x) const;
  void grad(const double* x, double* g) const;
  double lap(const double* x) const;
  int degree() const;
  bool zero(double tol = 0.0) const;

  /// Drop terms with positive last-variable exponent (restriction to x_n = 0).
  Poly boundary_restrict() const;

 private:
  int n_;
  std::map<MultiIndex, double> t_;
};

/// Symmetric 2-tensor with polynomial coefficients h_{ab,alpha}; the admissible
/// family is trace-free with vanishing normal components and Taylor form of
/// degree between 1 and deg_bound (the |alpha| = 1 part proportional to x_n).
class PolyTensor {
 public:
  PolyTensor(int n, int deg_bound) : n_(n), deg_(deg_bound) {}
  int n() const { return n_; }
  int deg_bound() const { return deg_; }

  void set(int a, int b, const MultiIndex& alpha, double c);  // symmetrizes (a,b)
  double get(int a, int b, const MultiIndex& alpha) const;
  const std::map<std::tuple<int, int, MultiIndex>, double>& coeffs() const { return c_; }

  Poly component(int a, int b) const;
  double eval(int a, int b, const double* x) const;

  /// Checks symmetry/trace/normal-component/low-order structure; throws on failure.
  void validate() const;

  double coeff_sq_weighted(const std::vector<double>& weight_by_degree) const;

 private:
  int n_, deg_;
  std::map<std::tuple<int, int, MultiIndex>, double> c_;
};

struct AlgebraicCurvature {
  int n;
  std::vector<Poly> A;  // n*n, row-major
  std::vector<Poly> Z;  // n^4, index ((a*n+b)*n+c)*n+d
  const Poly& Zc(int a, int b, int c, int d) const { return Z[((a * n + b) * n + c) * n + d]; }
  const Poly& Ac(int a, int c) const { return A[a * n + c]; }
};

/// Algebraic Schouten and Weyl-type tensors of an admissible polynomial 2-tensor,
/// by exact polynomial differentiation.
AlgebraicCurvature algebraic_schouten_weyl(const PolyTensor& H);

struct KernelReport {
  int dim_admissible = 0;  // dimension of the admissible coefficient space
  int kernel_dim = 0;      // solutions of the vanishing system inside it
  double sigma_max = 0, sigma_cut = 0;
};

/// Dimension of { admissible H : Z(H) = 0 on the half-space, and (optionally)
/// d_n H_ij = 0 on the boundary }, by stabilized numerical rank.
KernelReport tensor_kernel_dimension(int n, int deg_bound, bool with_neumann_constraint = true);

}  // namespace ymb
