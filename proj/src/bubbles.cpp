#include "yamabe/bubbles.hpp"

namespace ymb {

double Bubble::value(const double* y) const {
  double r2 = dot_n(y, y, n);
  return std::pow(eps / (eps * eps + r2), 0.5 * (n - 2));
}

void Bubble::grad(const double* y, double* g) const {
  double s = eps * eps + dot_n(y, y, n);
  double u = std::pow(eps / s, 0.5 * (n - 2));
  for (int d = 0; d < n; ++d) g[d] = -(n - 2.0) * u * y[d] / s;
}

void Bubble::hess(const double* y, double* h) const {
  double s = eps * eps + dot_n(y, y, n);
  double u = std::pow(eps / s, 0.5 * (n - 2));
  std::vector<double> g(n);
  grad(y, g.data());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double v = g[a] * (-(n - 2.0)) * y[b] / s;  // d_b of the prefactor times grad dir
      v += -(n - 2.0) * u * ((a == b ? 1.0 : 0.0) / s - 2.0 * y[a] * y[b] / (s * s));
      h[a * n + b] = v;
    }
}

double Bubble::lap(const double* y) const {
  double u = value(y);
  return -n * (n - 2.0) * std::pow(u, (n + 2.0) / (n - 2.0));
}

double Bubble::dvalue_deps(const double* y) const {
  // d/deps (eps/(eps^2+r^2))^{(n-2)/2} = ((n-2)/2) U * (1/eps - 2 eps/(eps^2+r^2))
  double s = eps * eps + dot_n(y, y, n);
  double u = std::pow(eps / s, 0.5 * (n - 2));
  return 0.5 * (n - 2.0) * u * (1.0 / eps - 2.0 * eps / s);
}

double cutoff_radial(double r, double rho, int deriv) {
  double v = plateau_cutoff(r / rho, 4.0 / 3.0, 5.0 / 3.0, deriv);
  return v / std::pow(rho, deriv);
}

// ---- PhiEval ----

PhiEval::PhiEval(int n, double eps, std::vector<Poly> V) : n_(n), eps_(eps), V_(std::move(V)) {
  if (static_cast<int>(V_.size()) != n) throw NumericsError("PhiEval: V needs n components");
  dV_.assign(n * n, Poly(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) dV_[a * n + b] = V_[a].diff(b);
  div_ = Poly(n);
  for (int a = 0; a < n; ++a) div_ = div_ + dV_[a * n + a];
  ddiv_.assign(n, Poly(n));
  for (int b = 0; b < n; ++b) ddiv_[b] = div_.diff(b);
  lapdiv_ = Poly(n);
  lapV_.assign(n, Poly(n));
  for (int b = 0; b < n; ++b) lapdiv_ = lapdiv_ + ddiv_[b].diff(b);
  for (int a = 0; a < n; ++a) {
    Poly s(n);
    for (int b = 0; b < n; ++b) s = s + dV_[a * n + b].diff(b);
    lapV_[a] = s;
  }
}

double PhiEval::value(const double* y) const {
  Bubble U{n_, eps_};
  std::vector<double> g(n_);
  U.grad(y, g.data());
  double s = 0;
  for (int a = 0; a < n_; ++a) s += g[a] * V_[a].eval(y);
  return s + (n_ - 2.0) / (2.0 * n_) * U.value(y) * div_.eval(y);
}

void PhiEval::grad(const double* y, double* out) const {
  Bubble U{n_, eps_};
  std::vector<double> g(n_), h(n_ * n_);
  U.grad(y, g.data());
  U.hess(y, h.data());
  double c0 = (n_ - 2.0) / (2.0 * n_);
  double uval = U.value(y);
  double dv = div_.eval(y);
  for (int b = 0; b < n_; ++b) {
    double s = 0;
    for (int a = 0; a < n_; ++a)
      s += h[a * n_ + b] * V_[a].eval(y) + g[a] * dV_[a * n_ + b].eval(y);
    s += c0 * (g[b] * dv + uval * ddiv_[b].eval(y));
    out[b] = s;
  }
}

double PhiEval::lap(const double* y) const {
  Bubble U{n_, eps_};
  std::vector<double> g(n_), h(n_ * n_);
  U.grad(y, g.data());
  U.hess(y, h.data());
  double uval = U.value(y);
  double c0 = (n_ - 2.0) / (2.0 * n_);
  double Nx = (n_ + 2.0) / (n_ - 2.0);
  // Lap dU_a = d_a Lap U = -n(n-2) N U^{N-1} dU_a
  double lapU = -n_ * (n_ - 2.0) * std::pow(uval, Nx);
  double s = 0;
  for (int a = 0; a < n_; ++a) {
    double lap_dUa = -n_ * (n_ - 2.0) * Nx * std::pow(uval, Nx - 1.0) * g[a];
    s += lap_dUa * V_[a].eval(y);
    for (int b = 0; b < n_; ++b) s += 2.0 * h[a * n_ + b] * dV_[a * n_ + b].eval(y);
    s += g[a] * lapV_[a].eval(y);
  }
  double dv = div_.eval(y);
  std::vector<double> gd(n_);
  for (int b = 0; b < n_; ++b) gd[b] = ddiv_[b].eval(y);
  s += c0 * (lapU * dv + 2.0 * dot_n(g.data(), gd.data(), n_) + uval * lapdiv_.eval(y));
  return s;
}

// ---- TestFunction ----

TestFunction make_test_function(int n, BubbleKind kind, double eps, double rho, double depth,
                                double rbar_inf, const PhiEval* phi) {
  TestFunction tf;
  tf.n = n;
  tf.kind = kind;
  tf.eps = eps;
  tf.rho = rho;
  tf.depth = (kind == BubbleKind::A) ? 0.0 : depth;
  if (rbar_inf <= 0) rbar_inf = 4.0 * n * (n - 1.0);
  tf.pref = std::pow(4.0 * n * (n - 1.0) / rbar_inf, 0.25 * (n - 2.0));
  tf.phi = (n == 3) ? nullptr : phi;  // d = 0 forces the trivial correction in n = 3
  if (!(2.0 * eps < rho)) throw NumericsError("test function: 2 eps < rho required");
  return tf;
}

double TestFunction::green(const double* y) const {
  double r2 = dot_n(y, y, n);
  double direct = std::pow(r2, 0.5 * (2 - n));
  if (kind != BubbleKind::B) return direct;
  double zi = y[n - 1] + 2.0 * depth;
  double r2i = r2 - y[n - 1] * y[n - 1] + zi * zi;
  return 0.5 * (direct + std::pow(r2i, 0.5 * (2 - n)));
}

void TestFunction::green_grad(const double* y, double* g) const {
  double r2 = dot_n(y, y, n);
  double f = (2.0 - n) * std::pow(r2, 0.5 * (2 - n) - 1.0);
  for (int d = 0; d < n; ++d) g[d] = f * y[d];
  if (kind != BubbleKind::B) return;
  double zi = y[n - 1] + 2.0 * depth;
  double r2i = r2 - y[n - 1] * y[n - 1] + zi * zi;
  double fi = (2.0 - n) * std::pow(r2i, 0.5 * (2 - n) - 1.0);
  for (int d = 0; d + 1 < n; ++d) g[d] = 0.5 * (g[d] + fi * y[d]);
  g[n - 1] = 0.5 * (g[n - 1] + fi * zi);
}

double TestFunction::value(const double* y) const {
  Bubble U{n, eps};
  double r = norm_n(y, n);
  double chi = cutoff_radial(r, rho);
  double inner = (chi > 0) ? U.value(y) + (phi ? phi->value(y) : 0.0) : 0.0;
  double outer = (chi < 1) ? std::pow(eps, 0.5 * (n - 2)) * green(y) : 0.0;
  return pref * (chi * inner + (1.0 - chi) * outer);
}

void TestFunction::grad(const double* y, double* out) const {
  Bubble U{n, eps};
  double r = norm_n(y, n);
  double chi = cutoff_radial(r, rho);
  double dchi = cutoff_radial(r, rho, 1);
  bool need_outer = chi < 1.0;
  double inner = (chi > 0) ? U.value(y) + (phi ? phi->value(y) : 0.0) : 0.0;
  double ee = std::pow(eps, 0.5 * (n - 2));
  double outer = need_outer ? ee * green(y) : 0.0;
  std::vector<double> gu(n, 0.0), gg(n, 0.0), gp(n, 0.0);
  if (chi > 0) U.grad(y, gu.data());
  if (need_outer) green_grad(y, gg.data());
  if (phi && chi > 0) phi->grad(y, gp.data());
  for (int d = 0; d < n; ++d) {
    double rd = (r > 1e-300) ? y[d] / r : 0.0;
    out[d] = pref * (dchi * rd * (inner - outer) + chi * (gu[d] + gp[d]) +
                     (1.0 - chi) * ee * gg[d]);
  }
}

double TestFunction::lap(const double* y) const {
  Bubble U{n, eps};
  double r = norm_n(y, n);
  double chi = cutoff_radial(r, rho);
  double dchi = cutoff_radial(r, rho, 1);
  double d2chi = cutoff_radial(r, rho, 2);
  bool need_outer = chi < 1.0;
  double inner = (chi > 0) ? U.value(y) + (phi ? phi->value(y) : 0.0) : 0.0;
  double ee = std::pow(eps, 0.5 * (n - 2));
  double outer = need_outer ? ee * green(y) : 0.0;
  std::vector<double> gu(n, 0.0), gg(n, 0.0), gp(n, 0.0);
  if (chi > 0) U.grad(y, gu.data());
  if (need_outer) green_grad(y, gg.data());
  if (phi && chi > 0) phi->grad(y, gp.data());
  double lap_chi = (r > 1e-300) ? d2chi + (n - 1.0) / r * dchi : n * d2chi;
  double grad_chi_dot = 0;
  for (int d = 0; d < n; ++d) {
    double rd = (r > 1e-300) ? y[d] / r : 0.0;
    grad_chi_dot += dchi * rd * (gu[d] + gp[d] - ee * gg[d]);
  }
  double lap_inner = (chi > 0) ? U.lap(y) + (phi ? phi->lap(y) : 0.0) : 0.0;
  // the far field is flat-harmonic away from its poles
  return pref * (lap_chi * (inner - outer) + 2.0 * grad_chi_dot + chi * lap_inner);
}

double TestFunction::dvalue_deps(const double* y) const {
  Bubble U{n, eps};
  double r = norm_n(y, n);
  double chi = cutoff_radial(r, rho);
  double dd = std::pow(eps, 0.5 * (n - 2) - 1.0) * 0.5 * (n - 2);
  double gv = (chi < 1.0) ? green(y) : 0.0;
  return pref * (chi * U.dvalue_deps(y) + (1.0 - chi) * dd * gv);
}

void TestFunction::dvalue_dcenter(const double* y, double* d) const {
  // moving the center by delta shifts the relative coordinate by -delta
  grad(y, d);
  for (int i = 0; i < n; ++i) d[i] = -d[i];
}

// ---- BubbleSpec / grid assembly ----

void BubbleSpec::validate(const Chart& chart) const {
  int n = chart.n;
  if (!(eps > 0) || !(rho > 0) || !(2.0 * eps < rho))
    throw NumericsError("bubble spec: require 0 < 2 eps < rho");
  if (static_cast<int>(center.size()) != n) throw NumericsError("bubble spec: center size");
  bool on_bdry = chart.has_physical() && std::abs(center[n - 1] - chart.lo[n - 1]) < 1e-12;
  double depth = chart.has_physical() ? center[n - 1] - chart.lo[n - 1]
                                      : std::numeric_limits<double>::infinity();
  switch (kind) {
    case BubbleKind::A:
      if (!on_bdry) throw NumericsError("kind A: center must lie on the physical boundary");
      break;
    case BubbleKind::B:
      if (on_bdry || depth > rho * rho + 1e-12)
        throw NumericsError("kind B: center depth must satisfy 0 < depth <= rho^2");
      break;
    case BubbleKind::C:
      if (depth < rho)
        throw NumericsError("kind C: center must stay away from the physical boundary");
      break;
  }
  // the glue annulus must fit inside the chart (tangentially and upward)
  for (int d = 0; d < n; ++d) {
    bool low_ok = center[d] - 2.0 * rho >= chart.lo[d] - 1e-12 ||
                  (d == n - 1 && chart.has_physical());
    if (!low_ok || center[d] + 2.0 * rho > chart.hi[d] + 1e-12)
      throw NumericsError("bubble spec: glue radius 2 rho exceeds the chart");
  }
}

Field assemble_test_function(const BubbleSpec& spec, const Chart& chart, const Grid& grid) {
  spec.validate(chart);
  if (!spec.green) throw NumericsError("assemble_test_function: missing attached GreenTable");
  int n = chart.n;
  double rbar = spec.rbar_inf > 0 ? spec.rbar_inf : 4.0 * n * (n - 1.0);
  double pref = std::pow(4.0 * n * (n - 1.0) / rbar, 0.25 * (n - 2.0));
  Bubble U{n, spec.eps};
  const PhiEval* phi = (n == 3) ? nullptr : spec.phi;
  Field out(grid);
  std::vector<double> x(n), y(n);
  for (size_t id = 0; id < grid.size(); ++id) {
    grid.coords(id, x.data());
    for (int d = 0; d < n; ++d) y[d] = x[d] - spec.center[d];
    double r = norm_n(y.data(), n);
    double chi = cutoff_radial(r, spec.rho);
    double inner = (chi > 0) ? U.value(y.data()) + (phi ? phi->value(y.data()) : 0.0) : 0.0;
    double outer = (chi < 1) ? std::pow(spec.eps, 0.5 * (n - 2)) * spec.green->eval(x.data()) : 0.0;
    double f = spec.fx0 ? spec.fx0(x.data()) : 1.0;
    out.v[id] = f * pref * (chi * inner + (1.0 - chi) * outer);
  }
  return out;
}

Field interior_residual_field(const ConformalOperator& op, const Field& ubar, double rbar_inf) {
  size_t N = op.size();
  int n = op.n();
  double a = op.convention_factor();
  double Nx = (n + 2.0) / (n - 2.0);
  Field out(op.grid());
  std::vector<double> lap(N);
  op.apply_lap(ubar.v.data(), lap.data());
  const auto& R0 = op.scalar_curv();
  for (size_t i = 0; i < N; ++i)
    out.v[i] = a * lap[i] - R0[i] * ubar.v[i] + rbar_inf * std::pow(std::abs(ubar.v[i]), Nx) *
                                                    (ubar.v[i] >= 0 ? 1.0 : -1.0);
  return out;
}

double interior_residual_lp(const TestFunction& tf, double R) {
  int n = tf.n;
  double a = 4.0 * (n - 1.0) / (n - 2.0);
  double rbar = 4.0 * n * (n - 1.0) * std::pow(tf.pref, -4.0 / (n - 2.0));
  double Nx = (n + 2.0) / (n - 2.0);
  double p = 2.0 * n / (n + 2.0);
  auto res_p = [&](const double* y) {
    double r = std::abs(a * tf.lap(y) + rbar * std::pow(tf.value(y), Nx));
    return std::pow(r, p);
  };
  double depth = (tf.kind == BubbleKind::C) ? R : tf.depth;
  double I = cap_integral(n, R, tf.eps, depth, res_p);
  return std::pow(I, 1.0 / p);
}

BoundaryResidualReport boundary_residual(const TestFunction& tf, double patch_R, int nsamples) {
  int n = tf.n;
  BoundaryResidualReport rep;
  if (tf.kind == BubbleKind::C) return rep;  // exact zero by construction
  double b = 2.0 * (n - 1.0) / (n - 2.0);
  std::vector<double> y(n, 0.0), g(n);
  auto bval = [&](double s) {
    y.assign(n, 0.0);
    y[0] = s;
    y[n - 1] = -tf.depth;
    tf.grad(y.data(), g.data());
    return b * g[n - 1];  // inward unit normal +e_n, H = 0 on flat models
  };
  double s0 = tf.eps / 10;
  for (int k = 0; k < nsamples; ++k) {
    double s = s0 * std::pow(patch_R / s0, k / (nsamples - 1.0));
    double v = bval(s);
    rep.s.push_back(s);
    rep.val.push_back(v);
    rep.sup_pos = std::max(rep.sup_pos, v);
    rep.sup_neg = std::max(rep.sup_neg, -v);
  }
  // L^{2(n-1)/n} over the patch disk
  double q = 2.0 * (n - 1.0) / n;
  double I = graded_radial(tf.eps, patch_R, 12, [&](double s) {
    return sphere_area(n - 1) * std::pow(s, n - 2) * std::pow(std::abs(bval(s)), q);
  });
  rep.lq_norm = std::pow(I, 1.0 / q);
  return rep;
}

BubbleEnergy energy_of_bubble(const TestFunction& tf, double R) {
  int n = tf.n;
  double a = 4.0 * (n - 1.0) / (n - 2.0);
  double p = 2.0 * n / (n - 2.0);
  double depth = (tf.kind == BubbleKind::C) ? R : tf.depth;
  std::vector<double> g(n);
  double num = cap_integral(n, R, tf.eps, depth, [&](const double* y) {
    tf.grad(y, g.data());
    return a * dot_n(g.data(), g.data(), n);
  });
  double den = cap_integral(n, R, tf.eps, depth,
                            [&](const double* y) { return std::pow(tf.value(y), p); });
  BubbleEnergy out;
  out.report.numerator = num;
  out.report.den_raw = den;
  out.report.den_scaled = std::pow(den, (n - 2.0) / n);
  out.report.E = num / out.report.den_scaled;
  out.report.F = num / den;
  out.sharp = (tf.kind == BubbleKind::A) ? q_hemisphere(n) : y_sphere(n);
  out.gap = out.report.E - out.sharp;
  return out;
}

double bubble_boundary_flux(int n, double eps, double delta, double rho, double kappa) {
  if (!(eps < delta)) throw NumericsError("bubble_boundary_flux: require eps < delta");
  double cn = 4.0 * (n - 1.0) / (n - 2.0);
  double sn2 = sphere_area(n - 1);
  double I = graded_radial(eps, rho, 16, [&](double s) {
    double gam = -delta + kappa * s * s;
    double denom = eps * eps + s * s + gam * gam;
    return std::pow(s, n - 2) * (n - 2.0) * std::pow(eps, n - 2.0) *
           std::pow(denom, 1.0 - n) * (delta + kappa * s * s);
  });
  return cn * sn2 * I;
}

AuxiliaryBounds auxiliary_integral_bounds(int n, double eps, double delta, double rho,
                                          double kappa) {
  if (!(delta <= rho)) throw NumericsError("auxiliary_integral_bounds: require delta <= rho");
  AuxiliaryBounds out;
  double sn2 = sphere_area(n - 1);
  out.integral = graded_radial(std::max(eps, delta / 8), rho, 16, [&](double s) {
    return sn2 * std::pow(s, n - 2) *
           std::pow(eps * eps + s * s + delta * delta, 2.0 - n);
  });
  out.bound_ratio = out.integral / (rho * std::pow(delta, 2.0 - n));
  double C0 = std::max(2.0, std::abs(kappa));
  double smax = std::min(rho, 0.5 / C0);
  out.ratio_min = std::numeric_limits<double>::infinity();
  out.ratio_max = 0;
  for (int k = 0; k <= 64; ++k) {
    double s = smax * k / 64.0;
    double gam = -delta + kappa * s * s;
    double ratio = (eps * eps + s * s + gam * gam) / (eps * eps + s * s + delta * delta);
    out.ratio_min = std::min(out.ratio_min, ratio);
    out.ratio_max = std::max(out.ratio_max, ratio);
  }
  return out;
}

PhiSystem phi_from_V(int n, double eps, const std::vector<Poly>& V, const PolyTensor& H) {
  if (static_cast<int>(V.size()) != n) throw NumericsError("phi_from_V: V needs n components");
  // boundary rows: V_n = 0 and d_n V_i = 0 on x_n = 0
  for (auto& [a, c] : V[n - 1].terms())
    if (a[n - 1] == 0 && c != 0.0)
      throw NumericsError("phi_from_V: V_n must vanish on the boundary plane");
  for (int i = 0; i + 1 < n; ++i)
    for (auto& [a, c] : V[i].terms())
      if (a[n - 1] == 1 && c != 0.0)
        throw NumericsError("phi_from_V: d_n V_i must vanish on the boundary plane");

  PhiSystem sys{PhiEval(n, eps, V), {}, {}};
  // right side of the defining equation
  std::vector<Poly> Hc(n * n, Poly(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) Hc[a * n + b] = H.component(a, b);
  Poly div2(n);
  std::vector<Poly> divH(n, Poly(n));  // d_b H_ab per a
  for (int a = 0; a < n; ++a) {
    Poly s(n);
    for (int b = 0; b < n; ++b) s = s + Hc[a * n + b].diff(b);
    divH[a] = s;
    div2 = div2 + s.diff(a);
  }
  double cR2 = (n - 2.0) / (4.0 * (n - 1.0));
  PhiEval phi = sys.phi;
  sys.equation_residual = [n, eps, phi, Hc, divH, div2, cR2](const double* y) {
    Bubble U{n, eps};
    double uval = U.value(y);
    std::vector<double> g(n), h(n * n);
    U.grad(y, g.data());
    U.hess(y, h.data());
    double lhs = phi.lap(y) + n * (n + 2.0) * std::pow(uval, 4.0 / (n - 2.0)) * phi.value(y);
    double rhs = cR2 * uval * div2.eval(y);
    for (int a = 0; a < n; ++a) {
      rhs += g[a] * divH[a].eval(y);
      for (int b = 0; b < n; ++b) rhs += h[a * n + b] * Hc[a * n + b].eval(y);
    }
    return lhs - rhs;
  };
  sys.normal_derivative = [n, phi](const double* xbar) {
    std::vector<double> y(n, 0.0), g(n);
    for (int d = 0; d + 1 < n; ++d) y[d] = xbar[d];
    phi.grad(y.data(), g.data());
    return g[n - 1];
  };
  return sys;
}

double coercivity_ratio(int n, double eps, double rho, const std::vector<Poly>& V,
                        const PolyTensor& H) {
  if (!(rho >= 2.0 * eps)) throw NumericsError("coercivity_ratio: require rho >= 2 eps");
  // T = H - S(V), S_ab = d_a V_b + d_b V_a - (2/n) div V delta
  std::vector<Poly> T(n * n, Poly(n));
  Poly divV(n);
  for (int a = 0; a < n; ++a) divV = divV + V[a].diff(a);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Poly s = V[b].diff(a) + V[a].diff(b);
      if (a == b) s = s - divV.scaled(2.0 / n);
      T[a * n + b] = H.component(a, b) - s;
    }
  std::vector<Poly> dT(n * n * n, Poly(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) dT[(a * n + b) * n + c] = T[a * n + b].diff(c);

  double c2 = 2.0 / (n - 2.0);
  auto Q2 = [&](const double* y) {
    Bubble U{n, eps};
    double uval = U.value(y);
    std::vector<double> g(n);
    U.grad(y, g.data());
    std::vector<double> Tv(n * n), dTv(n * n * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Tv[a * n + b] = T[a * n + b].eval(y);
        for (int c = 0; c < n; ++c) dTv[(a * n + b) * n + c] = dT[(a * n + b) * n + c].eval(y);
      }
    std::vector<double> gT(n);  // d_d U T_ad contracted
    for (int a = 0; a < n; ++a) {
      double s = 0;
      for (int d = 0; d < n; ++d) s += g[d] * Tv[a * n + d];
      gT[a] = s;
    }
    double sum = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double q = uval * dTv[(a * n + b) * n + c] - c2 * (g[a] * Tv[b * n + c] + g[b] * Tv[a * n + c]);
          if (b == c) q += c2 * gT[a];
          if (a == c) q += c2 * gT[b];
          sum += q * q;
        }
    return sum;
  };
  double qint = cap_integral(n, rho, eps, 0.0, Q2);

  int dmax = H.deg_bound();
  std::vector<double> wints(dmax + 1, 0.0);
  for (int k = 1; k <= dmax; ++k)
    wints[k] = 0.5 * sphere_area(n) *
               graded_radial(eps, rho, 16, [&](double r) {
                 return std::pow(r, n - 1.0) * std::pow(eps + r, 2.0 * k + 2.0 - 2.0 * n);
               });
  double wsum = std::pow(eps, n - 2.0) * H.coeff_sq_weighted(wints);
  if (wsum == 0 && qint < 1e-28) return 0.0;
  if (wsum == 0) throw NumericsError("coercivity_ratio: degenerate weight sum");
  return 0.25 * qint / wsum;
}

void write_bubble_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvWriter csv(path, {"kind(A|B|C)", "eps(length)", "rho(length)", "delta(length)",
                       "energy(R-units)", "gap(R-units)", "res_int_norm(L-2n/(n+2))",
                       "res_bdry_pos(B-units)", "res_bdry_neg(B-units)"});
  for (auto& r : rows) {
    const char* k = r.kind == BubbleKind::A ? "A" : (r.kind == BubbleKind::B ? "B" : "C");
    csv.row_mixed({k, format_g17(r.eps), format_g17(r.rho), format_g17(r.delta),
                   format_g17(r.energy), format_g17(r.gap), format_g17(r.res_int_norm),
                   format_g17(r.res_bdry_pos), format_g17(r.res_bdry_neg)});
  }
}

}  // namespace ymb
