#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "yamabe/conformal.hpp"
#include "yamabe/geometry.hpp"

using namespace ymb;

namespace {

// n=4 diagonal test metric with nonzero Weyl part, checked against values computed
// once with a computer-algebra system at the point (0.3, 0.2, 0.1, 0.4).
Chart cas_metric_chart() {
  Chart ch;
  ch.n = 4;
  ch.name = "cas_diag";
  ch.lo.assign(4, -1.0);
  ch.hi.assign(4, 1.0);
  ch.face.assign(4, {FaceKind::artificial, FaceKind::artificial});
  ch.metric = [](const double* x, double* g) {
    for (int i = 0; i < 16; ++i) g[i] = 0;
    g[0] = 1 + x[1] * x[1];
    g[5] = 1 + x[2] * x[2];
    g[10] = 1 + x[0] * x[0];
    g[15] = 1.0;
  };
  return ch;
}

}  // namespace

TEST_CASE("christoffel: flat chart vanishes, diagonal metric by hand") {
  Chart flat = flat_box(3);
  double x[3] = {0.4, 0.3, 0.2};
  auto gam = christoffel(flat, x);
  for (int a = 0; a < 3; ++a) CHECK(gam[a].norm() < 1e-11);

  // g = diag(1+x1^2, 1, 1): Gamma^1_{11} = x1/(1+x1^2)
  Chart diag;
  diag.n = 3;
  diag.name = "diag";
  diag.lo.assign(3, -2.0);
  diag.hi.assign(3, 2.0);
  diag.face.assign(3, {FaceKind::artificial, FaceKind::artificial});
  diag.metric = [](const double* x, double* g) {
    for (int i = 0; i < 9; ++i) g[i] = 0;
    g[0] = 1 + x[0] * x[0];
    g[4] = 1;
    g[8] = 1;
  };
  double p[3] = {1.0, 0.0, 0.0};
  auto gam2 = christoffel(diag, p);
  CHECK(gam2[0](0, 0) == doctest::Approx(0.5).epsilon(1e-8));

  // symmetry in the lower pair holds exactly for every stencil
  Chart cas = cas_metric_chart();
  double q[4] = {0.31, -0.17, 0.9, 0.05};
  auto gam3 = christoffel(cas, q);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) CHECK(gam3[a](b, c) == gam3[a](c, b));
}

TEST_CASE("christoffel: stereographic sphere chart vanishes at the origin") {
  Chart sph = sphere_chart(3, 2.0);
  double x[3] = {0.0, 0.0, 0.0};
  auto gam = christoffel(sph, x);
  for (int a = 0; a < 3; ++a) CHECK(gam[a].norm() < 1e-9);
}

TEST_CASE("scalar curvature: flat, round sphere, CAS metric") {
  Chart flat = flat_box(3);
  double x[3] = {0.5, 0.5, 0.5};
  CHECK(std::abs(scalar_curvature(flat, x)) < 1e-10);

  Chart sph = sphere_chart(3, 2.0);
  double y[3] = {0.2, -0.1, 0.3};
  CHECK(scalar_curvature(sph, y) == doctest::Approx(6.0).epsilon(1e-6));
  // analytic factor route agrees
  CHECK(sph.scalar_curv_conf(y) == doctest::Approx(6.0).epsilon(1e-10));

  Chart sph4 = sphere_chart(4, 2.0);
  double y4[4] = {0.2, -0.1, 0.3, 0.0};
  CHECK(scalar_curvature(sph4, y4) == doctest::Approx(12.0).epsilon(1e-6));

  Chart cas = cas_metric_chart();
  double p[4] = {0.3, 0.2, 0.1, 0.4};
  CHECK(scalar_curvature(cas, p) == doctest::Approx(-5.248128101415466).epsilon(1e-7));
}

TEST_CASE("scalar curvature: convergence under h_fd refinement") {
  Chart sph = sphere_chart(3, 2.0);
  double x[3] = {0.25, 0.15, -0.2};
  sph.h_fd = 4e-2;
  double e1 = std::abs(scalar_curvature(sph, x) - 6.0);
  sph.h_fd = 2e-2;
  double e2 = std::abs(scalar_curvature(sph, x) - 6.0);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("weyl tensor: flat n=4, any n=3, and the CAS oracle value") {
  Chart flat4 = flat_box(4);
  double x4[4] = {0.5, 0.5, 0.5, 0.5};
  CHECK(weyl_tensor(flat4, x4).norm < 1e-9);

  Chart sph = sphere_chart(3, 2.0);
  double x3[3] = {0.3, 0.1, -0.2};
  CHECK(weyl_tensor(sph, x3).norm == 0.0);  // identically zero in 3d

  // round sphere is conformally flat: Weyl vanishes in n=4 too
  Chart sph4 = sphere_chart(4, 2.0);
  double y4[4] = {0.2, -0.1, 0.3, 0.1};
  CHECK(weyl_tensor(sph4, y4).norm < 1e-6);

  Chart cas = cas_metric_chart();
  double p[4] = {0.3, 0.2, 0.1, 0.4};
  auto W = weyl_tensor(cas, p);
  CHECK(W.norm == doctest::Approx(std::sqrt(0.02768693568117049)).epsilon(1e-6));
  CHECK(W.W[0][1](0, 1) == doctest::Approx(-0.021383084291997017).epsilon(1e-6));
}

TEST_CASE("boundary forms: flat face, hemisphere equator, graded face") {
  Chart half = flat_half_box(3, 1.0);
  double x[3] = {0.2, -0.3, 0.0};
  auto bf = boundary_forms(half, x);
  CHECK(std::abs(bf.H) < 1e-10);
  CHECK(bf.pi_norm < 1e-10);

  Chart hemi = hemisphere_chart(3, 2.0);
  double e[3] = {0.4, -0.2, 0.0};
  auto bfe = boundary_forms(hemi, e);
  CHECK(std::abs(bfe.H) < 1e-8);  // equator is totally geodesic
  CHECK(bfe.pi_norm < 1e-8);

  // g_ij = delta_ij (1 + 2 kappa x_n), g_nn = 1: H = -(n-1) kappa at x_n = 0
  double kappa = 0.7;
  Chart graded;
  graded.n = 3;
  graded.name = "graded";
  graded.lo = {-1, -1, 0};
  graded.hi = {1, 1, 1};
  graded.face.assign(3, {FaceKind::artificial, FaceKind::artificial});
  graded.face[2][0] = FaceKind::physical;
  graded.metric = [kappa](const double* x, double* g) {
    for (int i = 0; i < 9; ++i) g[i] = 0;
    g[0] = 1 + 2 * kappa * x[2];
    g[4] = 1 + 2 * kappa * x[2];
    g[8] = 1.0;
  };
  double p[3] = {0.1, 0.2, 0.0};
  auto bfg = boundary_forms(graded, p);
  CHECK(bfg.H == doctest::Approx(-2.0 * kappa).epsilon(1e-8));

  CHECK_THROWS_AS(boundary_forms(half, std::array<double, 3>{0.1, 0.1, 0.5}.data()),
                  NumericsError);
}

TEST_CASE("z-set scan: flat zero, n=3 degenerate, CAS metric bounded away from zero") {
  Chart flat = flat_box(4);
  std::vector<double> x0 = {0.5, 0.5, 0.5, 0.5};
  auto rows = z_set_scan(flat, x0, {0.2, 0.1, 0.05});
  for (auto& r : rows) CHECK(r.weyl_term < 1e-8);

  Chart sph = sphere_chart(3, 2.0);
  std::vector<double> y0 = {0.0, 0.0, 0.0};
  auto rows3 = z_set_scan(sph, y0, {0.3, 0.15});
  for (auto& r : rows3) CHECK(r.weyl_term < 1e-7);  // raw |W| = 0 report in n=3

  Chart cas = cas_metric_chart();
  std::vector<double> p0 = {0.3, 0.2, 0.1, 0.4};
  auto rowsc = z_set_scan(cas, p0, {0.2, 0.1, 0.05});
  // d = 1 in n = 4: the scan reports r |W|, and |W| stays bounded away from zero
  for (auto& r : rowsc) CHECK(r.weyl_term / r.r > 0.1);

  CHECK_THROWS_AS(z_set_scan(flat, x0, {}), NumericsError);
}

TEST_CASE("integrate: constants on flat charts, boundary area, linearity") {
  Chart flat = flat_box(3);
  Grid g(flat, 9);
  Field one(g);
  for (auto& v : one.v) v = 1.0;
  CHECK(integrate(one) == doctest::Approx(1.0).epsilon(1e-12));
  // total boundary area of the unit cube = 6
  CHECK(integrate(one, Region::boundary) == doctest::Approx(6.0).epsilon(1e-12));

  Chart half = flat_half_box(3, 0.5);
  Grid gh(half, 9);
  Field oneh(gh);
  for (auto& v : oneh.v) v = 1.0;
  CHECK(integrate(oneh, Region::boundary) == doctest::Approx(1.0).epsilon(1e-12));

  // linearity
  Field f1 = make_field(g, [](const double* x) { return x[0] + 0.2 * x[1]; });
  Field f2 = make_field(g, [](const double* x) { return std::sin(x[0]); });
  Field sum(g);
  for (size_t i = 0; i < sum.v.size(); ++i) sum.v[i] = 2.0 * f1.v[i] - 3.0 * f2.v[i];
  CHECK(integrate(sum) ==
        doctest::Approx(2.0 * integrate(f1) - 3.0 * integrate(f2)).epsilon(1e-13));
}

TEST_CASE("integrate: half-ball bubble integral against the 1D radial oracle") {
  // int over the half-ball of radius 40 of U_1^6 in n=3
  int n = 3;
  auto U6 = [n](double r) { return std::pow(1.0 / (1.0 + r * r), n); };
  double oracle = 0.5 * ball_radial_integral(n, 40.0, 1.0, U6);
  double full = cap_integral(n, 40.0, 1.0, 0.0, [&](const double* y) {
    double r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    return std::pow(1.0 / (1.0 + r2), n);
  });
  CHECK(full == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("sphere rule: areas, full and hemisphere") {
  for (int n : {3, 4, 5}) {
    double area = 0;
    sphere_rule(n, 16, 24, -1, [&](const double*, double w) { area += w; });
    CHECK(area == doctest::Approx(sphere_area(n)).epsilon(1e-10));
    double half_area = 0;
    sphere_rule(n, 16, 24, n - 1, [&](const double*, double w) { half_area += w; });
    CHECK(half_area == doctest::Approx(0.5 * sphere_area(n)).epsilon(1e-10));
  }
}

TEST_CASE("gauss-legendre exactness") {
  auto f = [](double x) { return 5 * std::pow(x, 7) - 3 * std::pow(x, 4) + x; };
  double v = gl_panel(-1.0, 1.0, 4, f);
  CHECK(v == doctest::Approx(-6.0 / 5.0).epsilon(1e-13));
}

TEST_CASE("integrate_fn GL panels agree with trapezoid on a curved chart") {
  Chart sph = sphere_chart(3, 1.0);
  double v_gl = integrate_fn(
      sph, [](const double*) { return 1.0; }, 6, 6);
  Grid g(sph, 17);
  Field one(g);
  for (auto& v : one.v) v = 1.0;
  double v_trap = integrate(one);
  CHECK(v_gl == doctest::Approx(v_trap).epsilon(5e-3));
}

TEST_CASE("cubic interpolation reproduces smooth fields and their gradients") {
  Chart flat = flat_box(3);
  Grid g(flat, 33);
  Field f = make_field(g, [](const double* x) {
    return std::sin(2 * x[0]) * std::cos(x[1]) + x[2] * x[2];
  });
  double p[3] = {0.412, 0.333, 0.271};
  double exact = std::sin(2 * p[0]) * std::cos(p[1]) + p[2] * p[2];
  CHECK(interp_cubic(f, p) == doctest::Approx(exact).epsilon(1e-5));
  double gr[3];
  interp_cubic_grad(f, p, gr);
  CHECK(gr[0] == doctest::Approx(2 * std::cos(2 * p[0]) * std::cos(p[1])).epsilon(1e-3));
  CHECK(gr[2] == doctest::Approx(2 * p[2]).epsilon(1e-3));
}
