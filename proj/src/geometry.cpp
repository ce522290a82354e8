#include "yamabe/geometry.hpp"

#include <cmath>

namespace ymb {

void metric_at(const Chart& ch, const double* x, Eigen::MatrixXd& g) {
  int n = ch.n;
  g.resize(n, n);
  std::vector<double> buf(n * n);
  ch.metric(x, buf.data());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g(a, b) = buf[a * n + b];
}

// 4th-order 5-point first-derivative stencils; `shift` selects how far the
// stencil is pushed off-center (0 = central, +-1, +-2 = fully one-sided).
static const double kD1[5][5] = {
    // offsets -2..2 relative to the evaluation point after shifting
    {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12},                 // central
    {-3.0 / 12, -10.0 / 12, 18.0 / 12, -6.0 / 12, 1.0 / 12},         // shift +1
    {-25.0 / 12, 48.0 / 12, -36.0 / 12, 16.0 / 12, -3.0 / 12},       // shift +2
    {-1.0 / 12, 6.0 / 12, -18.0 / 12, 10.0 / 12, 3.0 / 12},          // shift -1
    {3.0 / 12, -16.0 / 12, 36.0 / 12, -48.0 / 12, 25.0 / 12},        // shift -2
};

// Returns stencil row and the offset of its first sample.
static void stencil_for(const Chart& ch, const double* x, int axis, double h, const double** row,
                        int* first) {
  double room_lo = x[axis] - ch.lo[axis];
  double room_hi = ch.hi[axis] - x[axis];
  int shift = 0;
  if (room_lo < 2 * h) shift = (room_lo < h) ? 2 : 1;
  if (room_hi < 2 * h) shift = (room_hi < h) ? -2 : -1;
  switch (shift) {
    case 0:
      *row = kD1[0];
      *first = -2;
      break;
    case 1:
      *row = kD1[1];
      *first = -1;
      break;
    case 2:
      *row = kD1[2];
      *first = 0;
      break;
    case -1:
      *row = kD1[3];
      *first = -3;
      break;
    default:
      *row = kD1[4];
      *first = -4;
      break;
  }
}

void metric_deriv(const Chart& ch, const double* x, std::vector<Eigen::MatrixXd>& dg) {
  int n = ch.n;
  double h = ch.h_fd;
  dg.assign(n, Eigen::MatrixXd::Zero(n, n));
  std::vector<double> buf(n * n), xx(x, x + n);
  for (int c = 0; c < n; ++c) {
    const double* row;
    int first;
    stencil_for(ch, x, c, h, &row, &first);
    for (int s = 0; s < 5; ++s) {
      if (row[s] == 0.0) continue;
      xx[c] = x[c] + (first + s) * h;
      ch.metric(xx.data(), buf.data());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) dg[c](a, b) += row[s] * buf[a * n + b] / h;
    }
    xx[c] = x[c];
  }
}

std::vector<Eigen::MatrixXd> christoffel(const Chart& ch, const double* x) {
  int n = ch.n;
  Eigen::MatrixXd g;
  metric_at(ch, x, g);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  if (!lu.isInvertible()) throw SingularMetricError("christoffel: metric not invertible");
  Eigen::MatrixXd gi = lu.inverse();
  std::vector<Eigen::MatrixXd> dg;
  metric_deriv(ch, x, dg);
  std::vector<Eigen::MatrixXd> gam(n, Eigen::MatrixXd::Zero(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double s = 0;
        for (int d = 0; d < n; ++d)
          s += gi(a, d) * (dg[c](d, b) + dg[b](d, c) - dg[d](b, c));
        gam[a](b, c) = 0.5 * s;
        gam[a](c, b) = 0.5 * s;
      }
  return gam;
}

std::vector<std::vector<Eigen::MatrixXd>> riemann(const Chart& ch, const double* x) {
  int n = ch.n;
  double h = ch.h_fd;
  // dGam[c][a](d,b) = d_c Gamma^a_{db}
  std::vector<std::vector<Eigen::MatrixXd>> dgam(n,
      std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n)));
  std::vector<double> xx(x, x + n);
  for (int c = 0; c < n; ++c) {
    const double* row;
    int first;
    stencil_for(ch, x, c, 2 * h, &row, &first);  // margin for the inner stencils too
    for (int s = 0; s < 5; ++s) {
      if (row[s] == 0.0) continue;
      xx[c] = x[c] + (first + s) * h;
      auto gam = christoffel(ch, xx.data());
      for (int a = 0; a < n; ++a) dgam[c][a] += (row[s] / h) * gam[a];
    }
    xx[c] = x[c];
  }
  auto gam = christoffel(ch, x);
  std::vector<std::vector<Eigen::MatrixXd>> riem(n,
      std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = dgam[c][a](d, b) - dgam[d][a](c, b);
          for (int e = 0; e < n; ++e)
            s += gam[a](c, e) * gam[e](d, b) - gam[a](d, e) * gam[e](c, b);
          riem[a][b](c, d) = s;
        }
  return riem;
}

Eigen::MatrixXd ricci(const Chart& ch, const double* x) {
  int n = ch.n;
  auto riem = riemann(ch, x);
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0;
      for (int a = 0; a < n; ++a) s += riem[a][b](a, d);
      ric(b, d) = s;
    }
  return ric;
}

double scalar_curvature(const Chart& ch, const double* x) {
  Eigen::MatrixXd g;
  metric_at(ch, x, g);
  Eigen::MatrixXd gi = g.inverse();
  Eigen::MatrixXd ric = ricci(ch, x);
  return (gi * ric).trace();
}

WeylResult weyl_tensor(const Chart& ch, const double* x) {
  int n = ch.n;
  WeylResult out;
  out.W.assign(n, std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n)));
  if (n == 3) return out;  // Weyl vanishes identically in dimension 3

  Eigen::MatrixXd g;
  metric_at(ch, x, g);
  Eigen::MatrixXd gi = g.inverse();
  auto riem = riemann(ch, x);
  // lower the first index
  std::vector<std::vector<Eigen::MatrixXd>> rl(n,
      std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0;
          for (int e = 0; e < n; ++e) s += g(a, e) * riem[e][b](c, d);
          rl[a][b](c, d) = s;
        }
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0;
      for (int a = 0; a < n; ++a) s += riem[a][b](a, d);
      ric(b, d) = s;
    }
  double R = (gi * ric).trace();
  Eigen::MatrixXd P = (ric - R / (2.0 * (n - 1)) * g) / (n - 2);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          out.W[a][b](c, d) = rl[a][b](c, d) -
                              (g(a, c) * P(b, d) - g(a, d) * P(b, c) + g(b, d) * P(a, c) -
                               g(b, c) * P(a, d));
  double norm2 = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double up = 0;
          for (int e = 0; e < n; ++e)
            for (int f = 0; f < n; ++f)
              for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                  up += gi(a, e) * gi(b, f) * gi(c, p) * gi(d, q) * out.W[e][f](p, q);
          norm2 += out.W[a][b](c, d) * up;
        }
  out.norm = std::sqrt(std::max(0.0, norm2));
  return out;
}

BoundaryForms boundary_forms(const Chart& ch, const double* x, int axis, int side) {
  if (!ch.physical_face(axis, side)) throw NumericsError("boundary_forms: face is not physical");
  double coord = side == 0 ? ch.lo[axis] : ch.hi[axis];
  if (std::abs(x[axis] - coord) > 1e-9)
    throw NumericsError("boundary_forms: point not on the requested face");
  int n = ch.n;
  Eigen::MatrixXd g;
  metric_at(ch, x, g);
  Eigen::MatrixXd gi = g.inverse();
  auto gam = christoffel(ch, x);
  double s = side == 0 ? 1.0 : -1.0;  // inward coordinate direction
  double nn = gi(axis, axis);
  if (nn <= 0) throw SingularMetricError("boundary_forms: degenerate normal");
  double scale = s / std::sqrt(nn);

  std::vector<int> tang;
  for (int d = 0; d < n; ++d)
    if (d != axis) tang.push_back(d);
  int m = n - 1;
  BoundaryForms out;
  out.II.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out.II(i, j) = scale * gam[axis](tang[i], tang[j]);
  Eigen::MatrixXd gt(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gt(i, j) = g(tang[i], tang[j]);
  Eigen::MatrixXd gti = gt.inverse();
  out.H = (gti * out.II).trace();
  out.pi = out.II - out.H / (n - 1) * gt;
  double p2 = (gti * out.pi * gti * out.pi.transpose()).trace();
  out.pi_norm = std::sqrt(std::max(0.0, p2));
  return out;
}

BoundaryForms boundary_forms(const Chart& ch, const double* x) {
  for (int axis = 0; axis < ch.n; ++axis)
    for (int side = 0; side < 2; ++side) {
      if (!ch.physical_face(axis, side)) continue;
      double coord = side == 0 ? ch.lo[axis] : ch.hi[axis];
      if (std::abs(x[axis] - coord) < 1e-9) return boundary_forms(ch, x, axis, side);
    }
  throw NumericsError("boundary_forms: point is not on a physical boundary face");
}

// distance along the straight chart ray x0 + t*dir, measured in the metric
static double ray_arclength(const Chart& ch, const double* x0, const double* dir, double t) {
  int n = ch.n;
  Eigen::MatrixXd g;
  return gl_panel(0.0, t, 8, [&](double s) {
    std::vector<double> x(n);
    for (int d = 0; d < n; ++d) x[d] = x0[d] + s * dir[d];
    metric_at(ch, x.data(), g);
    double q = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) q += g(a, b) * dir[a] * dir[b];
    return std::sqrt(std::max(0.0, q));
  });
}

std::vector<ZScanRow> z_set_scan(const Chart& ch, const std::vector<double>& x0,
                                 const std::vector<double>& radii) {
  if (radii.empty()) throw NumericsError("z_set_scan: empty radius list");
  int n = ch.n;
  int deg = (n - 2) / 2;
  bool on_boundary = false;
  int baxis = -1, bside = 0;
  for (int axis = 0; axis < n && !on_boundary; ++axis)
    for (int side = 0; side < 2; ++side) {
      if (!ch.physical_face(axis, side)) continue;
      double coord = side == 0 ? ch.lo[axis] : ch.hi[axis];
      if (std::abs(x0[axis] - coord) < 1e-9) {
        on_boundary = true;
        baxis = axis;
        bside = side;
        break;
      }
    }

  std::vector<std::vector<double>> dirs;
  sphere_rule(n, 6, 8, -1, [&](const double* u, double) {
    dirs.emplace_back(u, u + n);
  });

  std::vector<ZScanRow> table;
  for (double r : radii) {
    ZScanRow row;
    row.r = r;
    for (auto& dir : dirs) {
      // solve arclength(t) = r along the ray (monotone; bisection)
      double tlo = 0, thi = r;
      while (ray_arclength(ch, x0.data(), dir.data(), thi) < r && thi < 64 * r) thi *= 2;
      for (int it = 0; it < 40; ++it) {
        double tm = 0.5 * (tlo + thi);
        (ray_arclength(ch, x0.data(), dir.data(), tm) < r ? tlo : thi) = tm;
      }
      double t = 0.5 * (tlo + thi);
      std::vector<double> x(n);
      for (int d = 0; d < n; ++d) x[d] = x0[d] + t * dir[d];
      if (!ch.inside(x.data(), 2.5 * ch.h_fd)) continue;
      double wn = weyl_tensor(ch, x.data()).norm;
      double term = (n == 3) ? wn : std::pow(r, 2.0 - deg) * wn;
      row.weyl_term = std::max(row.weyl_term, term);
      if (on_boundary && std::abs(x[baxis] - x0[baxis]) < 1e-12) {
        auto bf = boundary_forms(ch, x.data(), baxis, bside);
        double pterm = (n == 3) ? bf.pi_norm : std::pow(r, 1.0 - deg) * bf.pi_norm;
        row.pi_term = std::max(row.pi_term.value_or(0.0), pterm);
      }
    }
    if (on_boundary && !row.pi_term) {
      // sample boundary directions explicitly
      std::vector<double> x(n);
      int m = 16;
      for (int j = 0; j < m; ++j) {
        for (int d = 0; d < n; ++d) x[d] = x0[d];
        // walk within the face along a tangential circle direction
        int t1 = (baxis + 1) % n, t2 = (baxis + 2) % n;
        double ang = 2 * kPi * j / m;
        x[t1] += r * std::cos(ang);
        if (n > 2) x[t2] += r * std::sin(ang);
        if (!ch.inside(x.data(), 2.5 * ch.h_fd)) continue;
        auto bf = boundary_forms(ch, x.data(), baxis, bside);
        double pterm = (n == 3) ? bf.pi_norm : std::pow(r, 1.0 - deg) * bf.pi_norm;
        row.pi_term = std::max(row.pi_term.value_or(0.0), pterm);
      }
    }
    table.push_back(row);
  }
  return table;
}

// ---- quadrature ----

static double trapw(int i, int m, double h) { return (i == 0 || i == m - 1) ? 0.5 * h : h; }

double integrate(const Field& f, Region region) {
  const Grid& g = *f.grid;
  const Chart& ch = *g.chart;
  int n = g.n();
  std::vector<double> x(n);
  Eigen::MatrixXd gm;
  if (region == Region::volume) {
    double sum = 0;
    std::vector<int> I(n);
    for (size_t id = 0; id < g.size(); ++id) {
      g.unpack(id, I);
      double w = 1;
      for (int d = 0; d < n; ++d) w *= trapw(I[d], g.dims[d], g.h[d]);
      g.coords_of(I, x.data());
      double det;
      if (ch.conf_flat) {
        det = std::pow(ch.cfac(x.data()), 0.5 * n);
      } else {
        metric_at(ch, x.data(), gm);
        det = std::sqrt(gm.determinant());
      }
      sum += w * det * f.v[id];
    }
    return sum;
  }
  // boundary: iterate physical faces
  double sum = 0;
  std::vector<int> I(n);
  for (int axis = 0; axis < n; ++axis)
    for (int side = 0; side < 2; ++side) {
      if (!ch.physical_face(axis, side)) continue;
      for (size_t id = 0; id < g.size(); ++id) {
        g.unpack(id, I);
        if (I[axis] != (side == 0 ? 0 : g.dims[axis] - 1)) continue;
        double w = 1;
        for (int d = 0; d < n; ++d)
          if (d != axis) w *= trapw(I[d], g.dims[d], g.h[d]);
        g.coords_of(I, x.data());
        double det;
        if (ch.conf_flat) {
          det = std::pow(ch.cfac(x.data()), 0.5 * (n - 1));
        } else {
          metric_at(ch, x.data(), gm);
          Eigen::MatrixXd sub(n - 1, n - 1);
          int ii = 0;
          for (int a = 0; a < n; ++a) {
            if (a == axis) continue;
            int jj = 0;
            for (int b = 0; b < n; ++b) {
              if (b == axis) continue;
              sub(ii, jj++) = gm(a, b);
            }
            ++ii;
          }
          det = std::sqrt(sub.determinant());
        }
        sum += w * det * f.v[id];
      }
    }
  return sum;
}

double integrate_fn(const Chart& ch, const std::function<double(const double*)>& f,
                    int panels_per_axis, int k) {
  int n = ch.n;
  const Quad1D& q = gauss_legendre(k);
  std::vector<int> pidx(n, 0), qidx(n, 0);
  std::vector<double> x(n);
  Eigen::MatrixXd gm;
  double sum = 0;
  while (true) {
    // one panel: iterate GL nodes
    std::fill(qidx.begin(), qidx.end(), 0);
    while (true) {
      double w = 1;
      for (int d = 0; d < n; ++d) {
        double plen = (ch.hi[d] - ch.lo[d]) / panels_per_axis;
        double a = ch.lo[d] + pidx[d] * plen;
        x[d] = a + 0.5 * plen * (1.0 + q.x[qidx[d]]);
        w *= 0.5 * plen * q.w[qidx[d]];
      }
      double det;
      if (ch.conf_flat) {
        det = std::pow(ch.cfac(x.data()), 0.5 * n);
      } else {
        metric_at(ch, x.data(), gm);
        det = std::sqrt(gm.determinant());
      }
      sum += w * det * f(x.data());
      int d = n - 1;
      while (d >= 0 && ++qidx[d] == k) qidx[d--] = 0;
      if (d < 0) break;
    }
    int d = n - 1;
    while (d >= 0 && ++pidx[d] == panels_per_axis) pidx[d--] = 0;
    if (d < 0) break;
  }
  return sum;
}

double ball_radial_integral(int n, double R, double inner, const std::function<double(double)>& f) {
  double sig = sphere_area(n);
  return graded_radial(inner, R, 16,
                       [&](double r) { return sig * std::pow(r, n - 1) * f(r); });
}

double ball_integral(int n, double R, double inner, const std::function<double(const double*)>& f,
                     int npolar, int nazim) {
  std::vector<double> y(n);
  return graded_radial(inner, R, 12, [&](double r) {
    double s = 0;
    sphere_rule(n, npolar, nazim, -1, [&](const double* u, double w) {
      for (int d = 0; d < n; ++d) y[d] = r * u[d];
      s += w * f(y.data());
    });
    return std::pow(r, n - 1) * s;
  });
}

void cap_visit(int n, double R, double inner, double depth,
               const std::function<void(const double*, double)>& visit, int ntheta, int nazim) {
  // polar angle theta measured from +e_n; admissible when cos(theta) >= -depth/r
  std::vector<double> y(n);
  auto bp = graded_breakpoints(inner, R);
  const Quad1D& qr = gauss_legendre(12);
  const Quad1D& qt = gauss_legendre(8);
  int mtheta = std::max(1, ntheta / 8);
  for (size_t p = 0; p + 1 < bp.size(); ++p) {
    double rmid = 0.5 * (bp[p] + bp[p + 1]), rhalf = 0.5 * (bp[p + 1] - bp[p]);
    for (size_t ir = 0; ir < qr.x.size(); ++ir) {
      double r = rmid + rhalf * qr.x[ir];
      double wr = rhalf * qr.w[ir] * std::pow(r, n - 1);
      double cmin = (depth >= r) ? -1.0 : -depth / r;
      double thetamax = std::acos(std::max(-1.0, cmin));
      double tpanel = thetamax / mtheta;
      for (int pt = 0; pt < mtheta; ++pt) {
        double tmid = (pt + 0.5) * tpanel, thalf = 0.5 * tpanel;
        for (size_t it = 0; it < qt.x.size(); ++it) {
          double th = tmid + thalf * qt.x[it];
          double ct = std::cos(th), st = std::sin(th);
          double wt = thalf * qt.w[it] * std::pow(st, n - 2);
          if (n == 2) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
              y[0] = r * st * sgn;
              y[1] = r * ct;
              visit(y.data(), wr * wt);
            }
            continue;
          }
          sphere_rule(n - 1, 8, nazim, -1, [&](const double* u, double w) {
            for (int d = 0; d + 1 < n; ++d) y[d] = r * st * u[d];
            y[n - 1] = r * ct;
            visit(y.data(), wr * wt * w);
          });
        }
      }
    }
  }
}

double cap_integral(int n, double R, double inner, double depth,
                    const std::function<double(const double*)>& f, int ntheta, int nazim) {
  double s = 0;
  cap_visit(n, R, inner, depth, [&](const double* y, double w) { s += w * f(y); }, ntheta, nazim);
  return s;
}

double sphere_surface_integral(int n, const std::vector<double>& center, double R, bool upper_half,
                               const std::function<double(const double*, const double*)>& f,
                               int npolar, int nazim) {
  std::vector<double> y(n);
  double sum = 0;
  sphere_rule(n, npolar, nazim, upper_half ? n - 1 : -1, [&](const double* u, double w) {
    for (int d = 0; d < n; ++d) y[d] = center[d] + R * u[d];
    sum += w * f(y.data(), u);
  });
  return sum * std::pow(R, n - 1);
}

}  // namespace ymb
