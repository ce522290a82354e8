#include "yamabe/chart.hpp"

#include <cstring>

namespace ymb {

bool Chart::has_physical() const {
  for (auto& f : face)
    if (f[0] == FaceKind::physical || f[1] == FaceKind::physical) return true;
  return false;
}

double Chart::cfac(const double* x) const {
  if (!conf_flat) throw NumericsError("chart '" + name + "' is not conformally flat");
  return std::pow(w(x), 4.0 / (n - 2));
}

double Chart::scalar_curv_conf(const double* x) const {
  if (!conf_flat) throw NumericsError("chart '" + name + "' is not conformally flat");
  // R = -(4(n-1)/(n-2)) w^{-(n+2)/(n-2)} Lap(w) over the flat background
  double a = 4.0 * (n - 1) / (n - 2);
  double wv = w(x);
  return -a * std::pow(wv, -(n + 2.0) / (n - 2.0)) * w_lap(x);
}

double Chart::mean_curv_boundary(const double* x, int axis, int side) const {
  if (!conf_flat) throw NumericsError("mean_curv_boundary: conformally flat charts only");
  // H = w^{-n/(n-2)} ( -(2(n-1)/(n-2)) dw/deta ); the face of the flat background is
  // minimal, eta its inward flat unit normal.
  std::vector<double> g(n);
  w_grad(x, g.data());
  double dn = (side == 0 ? 1.0 : -1.0) * g[axis];  // inward coordinate derivative
  double wv = w(x);
  double b = 2.0 * (n - 1) / (n - 2);
  return std::pow(wv, -static_cast<double>(n) / (n - 2)) * (-b * dn);
}

double Chart::logmetric_tau(const double* x) const {
  if (!conf_flat) throw NumericsError("logmetric_tau: conformally flat charts only");
  return (4.0 / (n - 2)) * std::log(w(x));
}

void Chart::logmetric_tau_grad(const double* x, double* grad) const {
  if (!conf_flat) throw NumericsError("logmetric_tau_grad: conformally flat charts only");
  std::vector<double> gw(n);
  w_grad(x, gw.data());
  double wv = w(x);
  for (int i = 0; i < n; ++i) grad[i] = (4.0 / (n - 2)) * gw[i] / wv;
}

bool Chart::inside(const double* x, double margin) const {
  for (int d = 0; d < n; ++d)
    if (x[d] < lo[d] - 1e-12 + margin || x[d] > hi[d] + 1e-12 - margin) return false;
  return true;
}

static Chart make_conf(int n, std::string name, std::vector<double> lo, std::vector<double> hi,
                       std::function<double(const double*)> w,
                       std::function<void(const double*, double*)> wg,
                       std::function<double(const double*)> wl) {
  Chart ch;
  ch.n = n;
  ch.name = std::move(name);
  ch.lo = std::move(lo);
  ch.hi = std::move(hi);
  ch.face.assign(n, {FaceKind::artificial, FaceKind::artificial});
  ch.conf_flat = true;
  ch.w = std::move(w);
  ch.w_grad = std::move(wg);
  ch.w_lap = std::move(wl);
  ch.metric = [chn = ch.n, wf = ch.w](const double* x, double* g) {
    double c = std::pow(wf(x), 4.0 / (chn - 2));
    std::memset(g, 0, sizeof(double) * chn * chn);
    for (int a = 0; a < chn; ++a) g[a * chn + a] = c;
  };
  return ch;
}

Chart flat_box(int n) {
  auto one = [](const double*) { return 1.0; };
  auto zg = [n](const double*, double* g) { std::fill(g, g + n, 0.0); };
  auto zl = [](const double*) { return 0.0; };
  Chart ch = make_conf(n, "flat_box", std::vector<double>(n, 0.0), std::vector<double>(n, 1.0),
                       one, zg, zl);
  for (auto& f : ch.face) f = {FaceKind::physical, FaceKind::physical};
  ch.fermi = true;
  return ch;
}

Chart flat_half_box(int n, double L) {
  auto one = [](const double*) { return 1.0; };
  auto zg = [n](const double*, double* g) { std::fill(g, g + n, 0.0); };
  auto zl = [](const double*) { return 0.0; };
  std::vector<double> lo(n, -L), hi(n, L);
  lo[n - 1] = 0.0;
  Chart ch = make_conf(n, "flat_half_box", lo, hi, one, zg, zl);
  ch.face[n - 1][0] = FaceKind::physical;
  ch.fermi = true;
  return ch;
}

// w for the round sphere factor: g = (2/(1+r^2))^2 delta = w^{4/(n-2)} delta
// w = (2/(1+r^2))^{(n-2)/2}
static Chart round_chart(int n, double L, bool half) {
  double p = 0.5 * (n - 2);
  auto wv = [n, p](const double* x) {
    double r2 = dot_n(x, x, n);
    return std::pow(2.0 / (1.0 + r2), p);
  };
  auto wg = [n, p](const double* x, double* g) {
    double r2 = dot_n(x, x, n);
    double base = std::pow(2.0 / (1.0 + r2), p);
    for (int i = 0; i < n; ++i) g[i] = base * (-p) * 2.0 * x[i] / (1.0 + r2);
  };
  auto wl = [n, p](const double* x) {
    // Lap w = w * (|grad log w|^2 + Lap log w)
    double r2 = dot_n(x, x, n);
    double base = std::pow(2.0 / (1.0 + r2), p);
    double a = 1.0 + r2;
    double gl2 = 4.0 * p * p * r2 / (a * a);
    double lapl = -2.0 * p * (n * a - 2.0 * r2) / (a * a);
    return base * (gl2 + lapl);
  };
  std::vector<double> lo(n, -L), hi(n, L);
  if (half) lo[n - 1] = 0.0;
  Chart ch = make_conf(n, half ? "hemisphere" : "sphere", lo, hi, wv, wg, wl);
  if (half) ch.face[n - 1][0] = FaceKind::physical;
  return ch;
}

Chart sphere_chart(int n, double L) { return round_chart(n, L, false); }
Chart hemisphere_chart(int n, double L) { return round_chart(n, L, true); }

Chart schwarzschild_chart(int n, double m, double L, bool half) {
  auto wv = [n, m](const double* x) {
    double r = norm_n(x, n);
    return 1.0 + 0.5 * m * std::pow(r, 2.0 - n);
  };
  auto wg = [n, m](const double* x, double* g) {
    double r = norm_n(x, n);
    double d = 0.5 * m * (2.0 - n) * std::pow(r, -static_cast<double>(n));
    for (int i = 0; i < n; ++i) g[i] = d * x[i];
  };
  auto wl = [](const double*) { return 0.0; };  // r^{2-n} harmonic away from 0
  std::vector<double> lo(n, -L), hi(n, L);
  if (half) lo[n - 1] = 0.0;
  Chart ch = make_conf(n, half ? "schwarzschild_half" : "schwarzschild", lo, hi, wv, wg, wl);
  if (half) ch.face[n - 1][0] = FaceKind::physical;
  return ch;
}

// compactly supported C^4 radial bump: q(t) = (1-t^2)^5 on |t| < 1
static double bump_q(double t, int d) {
  double a = 1.0 - t * t;
  if (a <= 0) return 0;
  double a3 = a * a * a, a4 = a3 * a, a5 = a4 * a;
  switch (d) {
    case 0:
      return a5;
    case 1:
      return -10.0 * t * a4;
    case 2:
      return -10.0 * a4 + 80.0 * t * t * a3;
  }
  return 0;
}

static Chart bump_chart(int n, std::vector<double> lo, std::vector<double> hi, double A,
                        std::vector<double> center, double rad, const char* name) {
  auto wv = [n, A, center, rad](const double* x) {
    double t2 = 0;
    for (int i = 0; i < n; ++i) {
      double t = (x[i] - center[i]) / rad;
      t2 += t * t;
    }
    return 1.0 + A * bump_q(std::sqrt(t2), 0);
  };
  auto wg = [n, A, center, rad](const double* x, double* g) {
    double t2 = 0;
    for (int i = 0; i < n; ++i) {
      double t = (x[i] - center[i]) / rad;
      t2 += t * t;
    }
    double t = std::sqrt(t2);
    if (t < 1e-14 || t >= 1.0) {
      std::fill(g, g + n, 0.0);
      return;
    }
    double dq = A * bump_q(t, 1);
    for (int i = 0; i < n; ++i) g[i] = dq * (x[i] - center[i]) / (rad * rad * t);
  };
  auto wl = [n, A, center, rad](const double* x) {
    double t2 = 0;
    for (int i = 0; i < n; ++i) {
      double t = (x[i] - center[i]) / rad;
      t2 += t * t;
    }
    double t = std::sqrt(t2);
    if (t >= 1.0) return 0.0;
    if (t < 1e-10) return A * (-10.0) * n / (rad * rad);  // q''(0) = -10, radial limit
    return A * (bump_q(t, 2) + (n - 1) / t * bump_q(t, 1)) / (rad * rad);
  };
  Chart ch = make_conf(n, name, std::move(lo), std::move(hi), wv, wg, wl);
  return ch;
}

Chart bump_half_box(int n, double L, double A, const std::vector<double>& center, double rad) {
  std::vector<double> lo(n, -L), hi(n, L);
  lo[n - 1] = 0.0;
  Chart ch = bump_chart(n, lo, hi, A, center, rad, "bump_half_box");
  ch.face[n - 1][0] = FaceKind::physical;
  ch.fermi = true;  // the bump has compact support away from the boundary
  return ch;
}

Chart bump_box(int n, double A, const std::vector<double>& center, double rad) {
  std::vector<double> lo(n, 0.0), hi(n, 1.0);
  Chart ch = bump_chart(n, lo, hi, A, center, rad, "bump_box");
  for (auto& f : ch.face) f = {FaceKind::physical, FaceKind::physical};
  ch.fermi = true;
  return ch;
}

Chart bump_hemisphere(int n, double L, double A, const std::vector<double>& center, double rad) {
  Chart hemi = hemisphere_chart(n, L);
  std::vector<double> lo(n, -L), hi(n, L);
  lo[n - 1] = 0.0;
  Chart bump = bump_chart(n, lo, hi, A, center, rad, "bump_hemisphere");
  Chart ch;
  ch.n = n;
  ch.name = "bump_hemisphere";
  ch.lo = lo;
  ch.hi = hi;
  ch.face.assign(n, {FaceKind::artificial, FaceKind::artificial});
  ch.face[n - 1][0] = FaceKind::physical;
  ch.conf_flat = true;
  // the factor is normalized to 1 at the origin, so the chart metric equals the
  // flat one at the pole of the shipped flux fixtures
  double norm = 1.0 / std::pow(2.0, 0.5 * (n - 2));
  auto w1 = hemi.w, w2 = bump.w;
  auto g1 = hemi.w_grad, g2 = bump.w_grad;
  auto l1 = hemi.w_lap, l2 = bump.w_lap;
  ch.w = [w1, w2, norm](const double* x) { return norm * w1(x) * w2(x); };
  ch.w_grad = [n, w1, w2, g1, g2, norm](const double* x, double* g) {
    std::vector<double> a(n), b(n);
    g1(x, a.data());
    g2(x, b.data());
    double v1 = w1(x), v2 = w2(x);
    for (int i = 0; i < n; ++i) g[i] = norm * (a[i] * v2 + v1 * b[i]);
  };
  ch.w_lap = [n, w1, w2, g1, g2, l1, l2, norm](const double* x) {
    std::vector<double> a(n), b(n);
    g1(x, a.data());
    g2(x, b.data());
    return norm * (l1(x) * w2(x) + 2.0 * dot_n(a.data(), b.data(), n) + w1(x) * l2(x));
  };
  ch.metric = [n, wf = ch.w](const double* x, double* g) {
    double c = std::pow(wf(x), 4.0 / (n - 2));
    std::memset(g, 0, sizeof(double) * n * n);
    for (int a = 0; a < n; ++a) g[a * n + a] = c;
  };
  return ch;
}

Chart gni_tail_chart(int n, double beta, double L) {
  Chart ch;
  ch.n = n;
  ch.name = "gni_tail";
  ch.lo.assign(n, -L);
  ch.hi.assign(n, L);
  ch.lo[n - 1] = 0.0;
  ch.face.assign(n, {FaceKind::artificial, FaceKind::artificial});
  ch.face[n - 1][0] = FaceKind::physical;
  ch.metric = [n, beta](const double* x, double* g) {
    std::memset(g, 0, sizeof(double) * n * n);
    double r2 = dot_n(x, x, n);
    double r = std::sqrt(r2);
    for (int a = 0; a < n; ++a) g[a * n + a] = 1.0;
    if (r < 1e-10) return;
    for (int i = 0; i + 1 < n; ++i) {
      double v = beta * x[i] / (r2);  // O(r^{-1}) tail, nonzero on the boundary plane
      g[i * n + (n - 1)] += v;
      g[(n - 1) * n + i] += v;
    }
  };
  return ch;
}

Chart rotated_chart(const Chart& base, const std::vector<double>& Q) {
  int n = base.n;
  if (static_cast<int>(Q.size()) != n * n) throw NumericsError("rotated_chart: Q size");
  Chart ch;
  ch.n = n;
  ch.name = base.name + "_rot";
  ch.lo = base.lo;
  ch.hi = base.hi;
  ch.face = base.face;
  ch.h_fd = base.h_fd;
  auto bm = base.metric;
  ch.metric = [n, Q, bm](const double* x, double* g) {
    std::vector<double> y(n), gb(n * n);
    for (int a = 0; a < n; ++a) {
      y[a] = 0;
      for (int b = 0; b < n; ++b) y[a] += Q[a * n + b] * x[b];
    }
    bm(y.data(), gb.data());
    // g'(x) = Q^T g(Qx) Q
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0;
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) s += Q[c * n + a] * gb[c * n + d] * Q[d * n + b];
        g[a * n + b] = s;
      }
  };
  return ch;
}

Chart chart_by_name(const std::string& name, int n, const std::vector<double>& params) {
  auto p = [&](size_t i, double dflt) { return i < params.size() ? params[i] : dflt; };
  if (name == "flat_box") return flat_box(n);
  if (name == "flat_half_box") return flat_half_box(n, p(0, 1.0));
  if (name == "sphere") return sphere_chart(n, p(0, 2.0));
  if (name == "hemisphere") return hemisphere_chart(n, p(0, 2.0));
  if (name == "schwarzschild") return schwarzschild_chart(n, p(0, 1.0), p(1, 64.0), false);
  if (name == "schwarzschild_half") return schwarzschild_chart(n, p(0, 1.0), p(1, 64.0), true);
  if (name == "bump_half_box") {
    std::vector<double> c(n, 0.0);
    c[0] = p(1, 0.3);
    c[n - 1] = p(2, 0.35);
    return bump_half_box(n, 1.0, p(0, 0.15), c, p(3, 0.25));
  }
  if (name == "bump_box") {
    std::vector<double> c(n, p(1, 0.5));
    return bump_box(n, p(0, 0.15), c, p(2, 0.25));
  }
  throw NumericsError("unknown chart '" + name + "'");
}

}  // namespace ymb
