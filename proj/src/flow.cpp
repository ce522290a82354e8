#include "yamabe/flow.hpp"

namespace ymb {

FlowDriver::FlowDriver(const Chart& chart, const Grid& grid)
    : op_(chart, grid, LConvention::energy) {
  int n = grid.n();
  Nexp_ = (n + 2.0) / (n - 2.0);
}

double FlowDriver::volume_of(const Field& u) const {
  const auto& w = op_.weights();
  double s = 0;
  for (size_t i = 0; i < u.v.size(); ++i) s += w[i] * std::pow(u.v[i], Nexp_ + 1.0);
  return s;
}

double FlowDriver::rbar_of(const Field& u) const {
  // rbar = int u (-a Lap u + R0 u) dv0 when the volume is normalized to 1
  size_t N = op_.size();
  std::vector<double> lap(N);
  op_.apply_lap(u.v.data(), lap.data());
  const auto& w = op_.weights();
  const auto& R0 = op_.scalar_curv();
  double a = op_.convention_factor();
  double s = 0;
  for (size_t i = 0; i < N; ++i) s += w[i] * u.v[i] * (-a * lap[i] + R0[i] * u.v[i]);
  return s / volume_of(u);
}

FlowState FlowDriver::make_state(Field u, double t) const {
  for (size_t i = 0; i < u.v.size(); ++i)
    if (!(u.v[i] > 0)) throw PositivityError("flow state: u must be positive", i);
  double vol = volume_of(u);
  double scale = std::pow(vol, -1.0 / (Nexp_ + 1.0));
  for (auto& v : u.v) v *= scale;
  FlowState s;
  s.u = std::move(u);
  s.t = t;
  s.volume = volume_of(s.u);
  Field R = conformal_scalar(op_, s.u);
  const auto& w = op_.weights();
  double rb = 0;
  for (size_t i = 0; i < R.v.size(); ++i)
    rb += w[i] * std::pow(s.u.v[i], Nexp_ + 1.0) * R.v[i];
  s.rbar = rb / s.volume;
  s.minR = field_min(R);
  s.maxR = field_max(R);
  s.minU = field_min(s.u);
  s.maxU = field_max(s.u);
  return s;
}

FlowState FlowDriver::step(const FlowState& st, double dt, double cg_tol) const {
  if (!(dt > 0)) throw NumericsError("flow step: dt must be positive");
  size_t N = op_.size();
  const auto& u = st.u.v;
  double s = dt * Nexp_ * (op_.n() - 2.0) / 4.0;  // dt (n+2)/4
  std::vector<double> extra(N), rhs(N);
  for (size_t i = 0; i < N; ++i) {
    double um = std::pow(u[i], Nexp_ - 1.0);
    extra[i] = Nexp_ * um / s;
    rhs[i] = Nexp_ * um * u[i] / s + st.rbar * um * u[i];
  }
  Field v = op_.solve_general(extra, rhs, cg_tol, false);
  // conformal density update and nodewise root
  Field unew(op_.grid());
  for (size_t i = 0; i < N; ++i) {
    double w = std::pow(u[i], Nexp_) + Nexp_ * std::pow(u[i], Nexp_ - 1.0) * (v.v[i] - u[i]);
    if (!(w > 0)) throw StepRejected("flow step: positivity lost", i);
    unew.v[i] = std::pow(w, 1.0 / Nexp_);
  }
  FlowState out = make_state(std::move(unew), st.t + dt);
  return out;
}

StepRecord FlowDriver::record_of(const FlowState& s, double dt, double lp_exponent) const {
  StepRecord r;
  r.t = s.t;
  r.dt = dt;
  r.rbar = s.rbar;
  r.volume = s.volume;
  r.minR = s.minR;
  r.maxR = s.maxR;
  r.minU = s.minU;
  r.maxU = s.maxU;
  Field R = conformal_scalar(op_, s.u);
  const auto& w = op_.weights();
  double q = 0, lp = 0;
  for (size_t i = 0; i < R.v.size(); ++i) {
    double dvg = w[i] * std::pow(s.u.v[i], Nexp_ + 1.0);
    q += dvg * (R.v[i] - s.rbar) * (R.v[i] - s.rbar);
    lp += dvg * std::pow(std::abs(R.v[i] - s.rbar), lp_exponent);
  }
  r.rhs_sq = q;
  r.lp_dev = lp;
  r.neumannR = neumann_R(s);
  return r;
}

double FlowDriver::lp_deviation(const FlowState& s, double p, double rbar_ref) const {
  int n = op_.n();
  if (!(p > 1.0) || !(p < 0.5 * n + 1.0))
    throw NumericsError("lp_deviation: exponent outside (1, n/2+1)");
  Field R = conformal_scalar(op_, s.u);
  const auto& w = op_.weights();
  double lp = 0;
  for (size_t i = 0; i < R.v.size(); ++i)
    lp += w[i] * std::pow(s.u.v[i], Nexp_ + 1.0) * std::pow(std::abs(R.v[i] - rbar_ref), p);
  return lp;
}

double FlowDriver::neumann_R(const FlowState& s) const {
  Field R = conformal_scalar(op_, s.u);
  const Grid& g = op_.grid();
  double m = 0;
  for (auto& be : op_.boundary_entries()) {
    long stn = static_cast<long>(g.stride[be.axis]);
    long sgn = be.side == 0 ? stn : -stn;
    double r0 = R.v[be.node], r1 = R.v[be.node + sgn], r2 = R.v[be.node + 2 * sgn];
    double dn = (-3.0 * r0 + 4.0 * r1 - r2) / (2.0 * g.h[be.axis]);
    m = std::max(m, std::abs(dn / be.sqc));
  }
  return m;
}

RunResult FlowDriver::run(const Field& u0, double T, double dt0, const FlowControl& ctl) const {
  RunResult out;
  FlowState cur = make_state(u0, 0.0);
  out.steps.push_back(record_of(cur, 0.0, ctl.lp_exponent));
  double dt = dt0;
  int accepted_in_row = 0;
  while (cur.t < T - 1e-14) {
    dt = std::min(dt, T - cur.t);
    bool ok = true;
    FlowState next;
    try {
      next = step(cur, dt, ctl.cg_tol);
    } catch (const StepRejected&) {
      ok = false;
    }
    if (ok && next.rbar > cur.rbar + ctl.mono_tol * std::max(1.0, std::abs(cur.rbar))) ok = false;
    if (!ok) {
      ++out.rejects;
      accepted_in_row = 0;
      dt *= 0.5;
      if (dt < ctl.dt_min) {
        out.dt_underflow = true;
        break;
      }
      continue;
    }
    cur = std::move(next);
    out.steps.push_back(record_of(cur, dt, ctl.lp_exponent));
    if (ctl.adapt && ++accepted_in_row >= ctl.grow_every) {
      accepted_in_row = 0;
      dt = std::min(dt * ctl.grow, ctl.dt_max);
    }
  }
  out.final_state = cur;
  // trailing average of rbar over the last 10% of steps
  size_t m = out.steps.size();
  size_t k0 = m - std::max<size_t>(1, m / 10);
  double acc = 0;
  for (size_t k = k0; k < m; ++k) acc += out.steps[k].rbar;
  out.rbar_inf = acc / (m - k0);
  return out;
}

std::vector<double> monitor_rbar_identity(int n, const std::vector<StepRecord>& steps) {
  std::vector<double> err(steps.size(), 0.0);
  for (size_t k = 1; k + 1 < steps.size(); ++k) {
    double dtp = steps[k + 1].t - steps[k].t;
    double dtm = steps[k].t - steps[k - 1].t;
    // nonuniform centered difference
    double drdt = (steps[k + 1].rbar * dtm * dtm - steps[k - 1].rbar * dtp * dtp +
                   steps[k].rbar * (dtp * dtp - dtm * dtm)) /
                  (dtp * dtm * (dtp + dtm));
    double rhs = -0.5 * (n - 2.0) * steps[k].rhs_sq;
    double denom = std::max(std::abs(rhs), 1e-300);
    err[k] = std::abs(drdt - rhs) / denom;
  }
  return err;
}

void write_flow_csv(const std::string& path, int n, const std::vector<StepRecord>& steps) {
  CsvWriter csv(path, {"t(1/R)", "rbar(R-units)", "volume(vol-units)", "minR(R-units)",
                       "maxR(R-units)", "minU(dimensionless)", "maxU(dimensionless)",
                       "lp_dev(R^p)", "neumannR(R-units/length)", "rbar_identity_err(rel)"});
  auto err = monitor_rbar_identity(n, steps);
  for (size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    csv.row({s.t, s.rbar, s.volume, s.minR, s.maxR, s.minU, s.maxU, s.lp_dev, s.neumannR, err[k]});
  }
}

}  // namespace ymb
