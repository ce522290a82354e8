#pragma once

#include "yamabe/geometry.hpp"

namespace ymb {

struct MassResult {
  std::vector<double> R;
  std::vector<double> flux;
  double extrapolated = 0;
  double order_estimate = 0;
  double decay_order = 0;      // fitted decay p of |g - delta|
  bool ill_posed_warning = false;  // decay order <= (n-2)/2
};

/// Raw flux sum (g_ab,b - g_bb,a) y_a/|y| over full coordinate spheres |y| = R,
/// with a free-order extrapolated limit. No normalizing prefactor is applied;
/// the conformally flat point-mass chart carries the 16 pi m relation in n = 3.
MassResult adm_mass(const Chart& chart, const std::vector<double>& R_list);

/// Half-space variant: upper half-sphere flux plus the boundary-plane correction
/// integral of g_ni y_i/|y|.
MassResult boundary_mass(const Chart& chart, const std::vector<double>& R_list,
                         bool drop_boundary_term = false);

void write_mass_csv(const std::string& path, const MassResult& m);

}  // namespace ymb
