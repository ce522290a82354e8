#include "yamabe/mass.hpp"

namespace ymb {

namespace {

// flux integrand sum_{ab} (g_ab,b - g_bb,a) u_a at a point, metric derivatives by
// the chart finite-difference stencils
double adm_integrand(const Chart& ch, const double* y, const double* u) {
  int n = ch.n;
  std::vector<Eigen::MatrixXd> dg;
  metric_deriv(ch, y, dg);
  double s = 0;
  for (int a = 0; a < n; ++a) {
    double term = 0;
    for (int b = 0; b < n; ++b) term += dg[b](a, b) - dg[a](b, b);
    s += term * u[a];
  }
  return s;
}

void finish(const Chart& ch, MassResult& m) {
  int n = ch.n;
  if (m.R.size() >= 3) {
    auto fit = fit_power_limit(m.R, m.flux);
    m.extrapolated = fit.limit;
    m.order_estimate = fit.order;
  } else if (!m.flux.empty()) {
    m.extrapolated = m.flux.back();
  }
  // decay order of |g - delta| along a probe ray
  std::vector<double> rs, vs;
  Eigen::MatrixXd g;
  std::vector<double> y(n, 0.0);
  for (double R : m.R) {
    y.assign(n, 0.0);
    y[0] = R / std::sqrt(2.0);
    y[n - 1] = R / std::sqrt(2.0);
    metric_at(ch, y.data(), g);
    double dev = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dev = std::max(dev, std::abs(g(a, b) - (a == b ? 1.0 : 0.0)));
    if (dev > 1e-15) {
      rs.push_back(R);
      vs.push_back(dev);
    }
  }
  if (rs.size() >= 2) {
    m.decay_order = -loglog_slope(rs, vs);
    m.ill_posed_warning = m.decay_order <= 0.5 * (n - 2) + 1e-9;
  } else {
    m.decay_order = std::numeric_limits<double>::infinity();  // exactly flat samples
  }
}

}  // namespace

MassResult adm_mass(const Chart& chart, const std::vector<double>& R_list) {
  int n = chart.n;
  MassResult m;
  std::vector<double> center(n, 0.0);
  for (double R : R_list) {
    double f = sphere_surface_integral(
        n, center, R, false,
        [&](const double* y, const double* u) { return adm_integrand(chart, y, u); }, 16, 24);
    m.R.push_back(R);
    m.flux.push_back(f);
  }
  finish(chart, m);
  return m;
}

MassResult boundary_mass(const Chart& chart, const std::vector<double>& R_list,
                         bool drop_boundary_term) {
  int n = chart.n;
  MassResult m;
  std::vector<double> center(n, 0.0);
  center[n - 1] = chart.lo[n - 1];
  for (double R : R_list) {
    double f = sphere_surface_integral(
        n, center, R, true,
        [&](const double* y, const double* u) { return adm_integrand(chart, y, u); }, 16, 24);
    if (!drop_boundary_term) {
      // (n-2)-sphere {|ybar| = R} in the boundary plane: integrand g_ni y_i/|y|
      double corr = 0;
      std::vector<double> y(n), gy(n * n);
      if (n == 3) {
        int mphi = 64;
        for (int j = 0; j < mphi; ++j) {
          double phi = 2.0 * kPi * (j + 0.5) / mphi;
          y[0] = R * std::cos(phi);
          y[1] = R * std::sin(phi);
          y[2] = chart.lo[2];
          chart.metric(y.data(), gy.data());
          double s = 0;
          for (int i = 0; i + 1 < n; ++i) s += gy[i * n + (n - 1)] * y[i] / R;
          corr += s * (2.0 * kPi * R / mphi);
        }
      } else {
        sphere_rule(n - 1, 12, 24, -1, [&](const double* u, double w) {
          for (int i = 0; i + 1 < n; ++i) y[i] = R * u[i];
          y[n - 1] = chart.lo[n - 1];
          chart.metric(y.data(), gy.data());
          double s = 0;
          for (int i = 0; i + 1 < n; ++i) s += gy[i * n + (n - 1)] * u[i];
          corr += w * s * std::pow(R, n - 2);
        });
      }
      f += corr;
    }
    m.R.push_back(R);
    m.flux.push_back(f);
  }
  finish(chart, m);
  return m;
}

void write_mass_csv(const std::string& path, const MassResult& m) {
  CsvWriter csv(path, {"R(length)", "flux(mass-units)", "extrapolated(mass-units)",
                       "order_estimate(dimensionless)"});
  for (size_t i = 0; i < m.R.size(); ++i)
    csv.row({m.R[i], m.flux[i], m.extrapolated, m.order_estimate});
}

}  // namespace ymb
