#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ymb {

constexpr double kPi = 3.14159265358979323846;

/// Surface area of the unit (n-1)-sphere in R^n.
double sphere_area(int n);

// ---- 1D Gauss-Legendre ----

struct Quad1D {
  std::vector<double> x;  // nodes on [-1,1]
  std::vector<double> w;
};

const Quad1D& gauss_legendre(int k);

/// Integrate f over [a,b] with a single k-point panel.
double gl_panel(double a, double b, int k, const std::function<double(double)>& f);

/// Integrate f over [a,b] splitting into m equal panels of k points.
double gl_composite(double a, double b, int m, int k, const std::function<double(double)>& f);

/// Geometric breakpoints resolving an inner scale: 0, inner/4, inner/2, inner, 2*inner, ... , outer.
std::vector<double> graded_breakpoints(double inner, double outer);

/// Integrate f over [0,outer] on graded panels (k-point each), resolving scale `inner` near 0.
double graded_radial(double inner, double outer, int k, const std::function<double(double)>& f);

// ---- product quadrature on the unit sphere S^{n-1} ----

/// Visit quadrature points of S^{n-1} with weights summing to sphere_area(n).
/// If `upper_axis` >= 0 only the open hemisphere {x[upper_axis] > 0} is covered
/// (weights then sum to sphere_area(n)/2).
void sphere_rule(int n, int npolar, int nazim, int upper_axis,
                 const std::function<void(const double* unit, double w)>& visit);

// ---- C^2 cutoffs ----

/// Quintic smoothstep: 0 at 0, 1 at 1, C^2 at both knots.
double smoothstep5(double t);
double smoothstep5_d1(double t);
double smoothstep5_d2(double t);

/// Profile equal to 1 for t <= t0, 0 for t >= t1, quintic in between. d in {0,1,2} selects derivative.
double plateau_cutoff(double t, double t0, double t1, int d = 0);

// ---- fits / extrapolation ----

/// Least-squares slope of log(y) vs log(x). Requires positive data.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct LimitFit {
  double limit = 0;       // fitted m_inf
  double coefficient = 0; // fitted a in m(R) = m_inf + a R^{-q}
  double order = 0;       // fitted q
  double rms = 0;         // residual of the fit
};

/// Fit m(R) = m_inf + a R^{-q} with q free (grid + refinement search).
LimitFit fit_power_limit(const std::vector<double>& R, const std::vector<double>& m);

// ---- CSV ----

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);
  ~CsvWriter();

 private:
  struct Impl;
  Impl* impl_;
};

std::string format_g17(double v);

// ---- misc ----

inline double dot_n(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm_n(const double* a, int n) { return std::sqrt(dot_n(a, a, n)); }

struct Rng {
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  }
  std::mt19937_64 eng;
};

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ymb
