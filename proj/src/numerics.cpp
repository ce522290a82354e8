#include "yamabe/numerics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>

namespace ymb {

double sphere_area(int n) {
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

static Quad1D compute_gl(int k) {
  Quad1D q;
  q.x.resize(k);
  q.w.resize(k);
  for (int i = 0; i < k; ++i) {
    // Newton from Chebyshev initial guess.
    double x = std::cos(kPi * (i + 0.75) / (k + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= k; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = k * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= k; ++j) {
      double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = k * (x * p1 - p0) / (x * x - 1.0);
    q.x[k - 1 - i] = x;
    q.w[k - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

const Quad1D& gauss_legendre(int k) {
  static std::map<int, Quad1D> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, compute_gl(k)).first;
  return it->second;
}

double gl_panel(double a, double b, int k, const std::function<double(double)>& f) {
  const Quad1D& q = gauss_legendre(k);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < k; ++i) s += q.w[i] * f(mid + half * q.x[i]);
  return s * half;
}

double gl_composite(double a, double b, int m, int k, const std::function<double(double)>& f) {
  double s = 0, h = (b - a) / m;
  for (int i = 0; i < m; ++i) s += gl_panel(a + i * h, a + (i + 1) * h, k, f);
  return s;
}

std::vector<double> graded_breakpoints(double inner, double outer) {
  std::vector<double> b;
  b.push_back(0.0);
  double r = std::min(inner / 4.0, outer / 4.0);
  while (r < outer) {
    b.push_back(r);
    r *= 2.0;
  }
  b.push_back(outer);
  return b;
}

double graded_radial(double inner, double outer, int k, const std::function<double(double)>& f) {
  auto bp = graded_breakpoints(inner, outer);
  double s = 0;
  for (size_t i = 0; i + 1 < bp.size(); ++i) s += gl_panel(bp[i], bp[i + 1], k, f);
  return s;
}

void sphere_rule(int n, int npolar, int nazim, int upper_axis,
                 const std::function<void(const double*, double)>& visit) {
  if (n < 2) throw NumericsError("sphere_rule: n >= 2 required");
  // Coordinates built as x1 = cos t1, x2 = sin t1 cos t2, ..., with the first slot
  // swapped into `upper_axis` when a hemisphere is requested.
  int npol_angles = n - 2;  // polar angles in [0,pi]; last angle is azimuthal in [0,2pi)
  std::vector<double> x(n), ang(std::max(npol_angles, 0));
  const Quad1D& gq = gauss_legendre(npolar);

  // recursive loop over polar angles
  std::function<void(int, double, double)> rec = [&](int level, double sinprod, double wacc) {
    if (level == npol_angles) {
      // azimuth: trapezoid on the periodic circle (spectrally accurate)
      double dphi = 2.0 * kPi / nazim;
      for (int j = 0; j < nazim; ++j) {
        double phi = (j + 0.5) * dphi;
        // fill coordinates
        double sp = 1.0;
        for (int l = 0; l < npol_angles; ++l) {
          x[l] = sp * std::cos(ang[l]);
          sp *= std::sin(ang[l]);
        }
        x[n - 2] = sp * std::cos(phi);
        x[n - 1] = sp * std::sin(phi);
        (void)sinprod;
        if (upper_axis >= 0 && upper_axis != 0) std::swap(x[0], x[upper_axis]);
        visit(x.data(), wacc * dphi);
        if (upper_axis >= 0 && upper_axis != 0) std::swap(x[0], x[upper_axis]);  // restore
      }
      return;
    }
    double lo = 0.0, hi = kPi;
    if (level == 0 && upper_axis >= 0) hi = 0.5 * kPi;  // hemisphere in the first slot
    double midw = 0.5 * (hi - lo);
    for (int i = 0; i < npolar; ++i) {
      double t = 0.5 * (lo + hi) + midw * gq.x[i];
      ang[level] = t;
      double smeas = std::pow(std::sin(t), n - 2 - level);
      rec(level + 1, sinprod * std::sin(t), wacc * gq.w[i] * midw * smeas);
    }
  };

  if (n == 2) {
    // circle only: azimuth in [0, 2pi) or half circle
    double span = (upper_axis >= 0) ? kPi : 2.0 * kPi;
    int m = nazim;
    double dphi = span / m;
    for (int j = 0; j < m; ++j) {
      double phi = (j + 0.5) * dphi - ((upper_axis >= 0) ? 0.5 * kPi : 0.0);
      x[0] = std::cos(phi);
      x[1] = std::sin(phi);
      if (upper_axis == 1) std::swap(x[0], x[1]);
      visit(x.data(), dphi);
    }
    return;
  }
  rec(0, 1.0, 1.0);
}

double smoothstep5(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
double smoothstep5_d1(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}
double smoothstep5_d2(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
}

double plateau_cutoff(double t, double t0, double t1, int d) {
  double s = (t - t0) / (t1 - t0);
  switch (d) {
    case 0:
      return 1.0 - smoothstep5(s);
    case 1:
      return -smoothstep5_d1(s) / (t1 - t0);
    case 2:
      return -smoothstep5_d2(s) / ((t1 - t0) * (t1 - t0));
  }
  throw NumericsError("plateau_cutoff: derivative order must be 0,1,2");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw NumericsError("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw NumericsError("loglog_slope: positive data required");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LimitFit fit_power_limit(const std::vector<double>& R, const std::vector<double>& m) {
  if (R.size() != m.size() || R.size() < 3)
    throw NumericsError("fit_power_limit: need >= 3 radii");
  auto solve_q = [&](double q, LimitFit& out) {
    // linear LS in (m_inf, a) for fixed q
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (size_t i = 0; i < R.size(); ++i) {
      double f = std::pow(R[i], -q);
      s11 += 1.0;
      s12 += f;
      s22 += f * f;
      b1 += m[i];
      b2 += m[i] * f;
    }
    double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) {
      out.rms = 1e300;
      return;
    }
    double minf = (b1 * s22 - b2 * s12) / det;
    double a = (s11 * b2 - s12 * b1) / det;
    double rss = 0;
    for (size_t i = 0; i < R.size(); ++i) {
      double e = m[i] - (minf + a * std::pow(R[i], -q));
      rss += e * e;
    }
    out.limit = minf;
    out.coefficient = a;
    out.order = q;
    out.rms = std::sqrt(rss / R.size());
  };
  LimitFit best;
  best.rms = 1e300;
  for (double q = 0.25; q <= 6.0 + 1e-9; q += 0.05) {
    LimitFit cand;
    solve_q(q, cand);
    if (cand.rms < best.rms) best = cand;
  }
  // local refinement
  double lo = std::max(0.05, best.order - 0.06), hi = best.order + 0.06;
  for (int it = 0; it < 40; ++it) {
    double q1 = lo + (hi - lo) / 3, q2 = hi - (hi - lo) / 3;
    LimitFit f1, f2;
    solve_q(q1, f1);
    solve_q(q2, f2);
    if (f1.rms < f2.rms)
      hi = q2;
    else
      lo = q1;
  }
  LimitFit refined;
  solve_q(0.5 * (lo + hi), refined);
  if (refined.rms <= best.rms) best = refined;
  return best;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

struct CsvWriter::Impl {
  std::ofstream out;
  size_t ncols = 0;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) throw NumericsError("CsvWriter: cannot open " + path);
  impl_->ncols = header.size();
  for (size_t i = 0; i < header.size(); ++i) {
    impl_->out << header[i];
    if (i + 1 < header.size()) impl_->out << ",";
  }
  impl_->out << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != impl_->ncols) throw NumericsError("CsvWriter: column count mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    impl_->out << format_g17(values[i]);
    if (i + 1 < values.size()) impl_->out << ",";
  }
  impl_->out << "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  if (cells.size() != impl_->ncols) throw NumericsError("CsvWriter: column count mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    impl_->out << cells[i];
    if (i + 1 < cells.size()) impl_->out << ",";
  }
  impl_->out << "\n";
}

CsvWriter::~CsvWriter() {
  impl_->out.flush();
  delete impl_;
}

}  // namespace ymb
