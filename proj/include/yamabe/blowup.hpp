#pragma once

#include "yamabe/bubbles.hpp"

namespace ymb {

struct PeakCandidate {
  std::vector<double> x;
  double eps = 0;
  double height = 0;
};

/// Grid local maxima above a noise floor, with the concentration scale estimated
/// from the half-height radius of the standard profile.
std::vector<PeakCandidate> detect_peaks(const Field& u, double floor_factor = 1.5);

struct BubbleParams {
  BubbleKind kind = BubbleKind::C;
  std::vector<double> x;
  double eps = 0;
  double alpha = 1;
};

struct BubbleFit {
  std::vector<BubbleParams> bubbles;
  Field w;             // nodewise residual u - sum alpha_k ubar_k
  double w_energy = 0; // quadratic-form energy of w
  double cnu_boundary = 0, cnu_interior = 0;
  double separation = 0;  // min over pairs of the mutual-separation functional
  double fit_energy = 0, init_energy = 0;
  bool projected = false;
  bool rank_deficient = false;
};

struct FitOptions {
  double rho = 0.25;
  double delta0 = 0.05;  // boundary-zone width for kind assignment
  int max_iter = 80;
  double rbar_inf = 0;
};

/// Gauss-Newton fit of m glued bubbles to u in the energy inner product, with the
/// scale/center box constraints of the admissible set and exact per-iteration
/// amplitude solves.
BubbleFit fit_bubbles(const ConformalOperator& op, const Field& u, int m,
                      const std::vector<PeakCandidate>& init, const FitOptions& opt = {});

struct SplitReport {
  Field v, w;
  double Ev = 0;
  double bound = 0;  // (sum_k E(ubar_k)^{n/2})^{2/n}
  bool within_bound = false;
  double cnu_boundary = 0, cnu_interior = 0;
};
SplitReport split_vw(const ConformalOperator& op, const BubbleFit& fit, const Field& u,
                     const FitOptions& opt = {});

/// Weighted eigenpairs of the linearized operator: (-a Lap + R0) psi = lambda
/// u_inf^{4/(n-2)} psi with the natural boundary condition, orthonormal in the
/// weighted product, eigenvalues ascending.
std::vector<EigenPair> linearized_eigenbasis(const ConformalOperator& op, const Field& u_inf,
                                             int count, double tol = 1e-11);

struct UzOptions {
  double trust_radius = 0.5;
  double rbar_inf = 0;  // 0: 4n(n-1)
  int max_newton = 40;
  double tol_eq = 1e-9;
  double tol_constraint = 1e-10;
};

struct UzResult {
  Field u;
  std::vector<double> multipliers;
  double eq_residual_sup = 0;       // projected stationary equation
  double constraint_residual = 0;   // low-mode constraints
  bool converged = false;
};

/// Constrained stationary solve: the projected equation vanishes while the
/// low-mode components of u - u_inf are pinned to z. Newton with a sparse KKT
/// factorization; throws on divergence inside the trust radius.
UzResult solve_uz(const ConformalOperator& op, const Field& u_inf,
                  const std::vector<EigenPair>& modes, const std::vector<int>& low_set,
                  const std::vector<double>& z, const UzOptions& opt = {});

/// Low-mode set selection: indices with lambda_a <= (n+2)/(n-2) rbar_inf
/// (strict inequality excludes).
std::vector<int> low_mode_set(const std::vector<EigenPair>& modes, int n, double rbar_inf);

void write_fit_csv(const std::string& path, const BubbleFit& fit);

}  // namespace ymb
