#pragma once

#include "yamabe/conformal.hpp"

namespace ymb {

class StepRejected : public NumericsError {
 public:
  StepRejected(const std::string& msg, size_t node) : NumericsError(msg), node(node) {}
  size_t node;
};

struct FlowState {
  Field u;
  double t = 0;
  double rbar = 0, volume = 0;
  double minR = 0, maxR = 0, minU = 0, maxU = 0;
};

struct StepRecord {
  double t = 0, dt = 0;
  double rbar = 0, volume = 0, minR = 0, maxR = 0, minU = 0, maxU = 0;
  double rhs_sq = 0;    // int (R - rbar)^2 dv_g
  double lp_dev = 0;    // int |R - rbar|^p dv_g at the monitor exponent
  double neumannR = 0;  // max_bdry |dR/deta|
};

struct RunResult {
  std::vector<StepRecord> steps;
  FlowState final_state;
  bool dt_underflow = false;  // nonconvergence report: stepped below dt_min
  double rbar_inf = 0;        // trailing average over the last 10% of steps
  int rejects = 0;
};

struct FlowControl {
  double dt_min = 1e-9;
  double dt_max = 0.05;
  double grow = 1.2;
  int grow_every = 5;
  double mono_tol = 1e-8;  // relative R-bar monotonicity tolerance
  double cg_tol = 1e-13;
  double lp_exponent = 2.0;
  bool adapt = true;
};

/// Volume-normalized conformal flow driver on a conformally flat chart.
/// The conformal-factor update treats the linear part implicitly and the
/// rbar-term explicitly in the u^{(n+2)/(n-2)} formulation; every accepted step is
/// followed by exact volume renormalization.
class FlowDriver {
 public:
  FlowDriver(const Chart& chart, const Grid& grid);

  const ConformalOperator& op() const { return op_; }

  /// Normalize the volume of u to 1 and fill diagnostics.
  FlowState make_state(Field u, double t = 0) const;

  /// One semi-implicit step. Throws StepRejected when positivity fails.
  FlowState step(const FlowState& s, double dt, double cg_tol = 1e-13) const;

  RunResult run(const Field& u0, double T, double dt0, const FlowControl& ctl = {}) const;

  /// Scalar curvature field of u^{4/(n-2)} g0.
  Field scalar_field(const Field& u) const { return conformal_scalar(op_, u); }

  double volume_of(const Field& u) const;
  double rbar_of(const Field& u) const;

  /// int |R - rbar_ref|^p dv_g; requires 1 < p < n/2 + 1.
  double lp_deviation(const FlowState& s, double p, double rbar_ref) const;

  /// max over the physical boundary of |dR/deta| (one-sided stencil).
  double neumann_R(const FlowState& s) const;

 private:
  ConformalOperator op_;
  double Nexp_;  // (n+2)/(n-2)
  StepRecord record_of(const FlowState& s, double dt, double lp_exponent) const;
  friend struct FlowProbe;
};

/// Per-step relative error of d(rbar)/dt against -((n-2)/2) int (R-rbar)^2 dv
/// (centered differences on the recorded series; endpoints get 0).
std::vector<double> monitor_rbar_identity(int n, const std::vector<StepRecord>& steps);

/// Snapshot CSV per the run series; one row per accepted step.
void write_flow_csv(const std::string& path, int n, const std::vector<StepRecord>& steps);

}  // namespace ymb
