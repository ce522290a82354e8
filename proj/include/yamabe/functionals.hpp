#pragma once

#include "yamabe/conformal.hpp"

namespace ymb {

struct EnergyReport {
  double numerator = 0;   // int (a|du|^2 + R0 u^2) dv + int 2 H0 u^2 dsigma
  double den_scaled = 0;  // (int |u|^{2n/(n-2)} dv)^{(n-2)/n}
  double den_raw = 0;     // int |u|^{2n/(n-2)} dv
  double E = 0, F = 0;
};

/// Grid-quadrature energy of a nodal field (boundary term included when the
/// chart has a physical boundary).
EnergyReport energy(const ConformalOperator& op, const Field& u);

struct QBracket {
  double lower = 0, upper = 0;
  bool stagnation = false;
  std::vector<double> trace;  // best upper bound per accepted iteration
};

/// Two-sided bracket for the conformal invariant: upper bound from projected
/// gradient descent over the normalized constraint (constant start plus seeded
/// random restarts), lower bound min(lambda_1, 0) vol^{2/n} from the smallest
/// eigenvalue of the linear operator.
QBracket estimate_Q(const ConformalOperator& op, int restarts = 5, std::uint64_t seed = 1,
                    int max_iter = 400);

/// Sharp constant of the hemisphere quotient via radial quadrature of the
/// standard bubble with analytic tail change of variables; independent of eps.
double q_hemisphere(int n, double eps = 1.0);

/// Sharp constant of the sphere quotient (twice the half-space bubble mass).
double y_sphere(int n, double eps = 1.0);

}  // namespace ymb
