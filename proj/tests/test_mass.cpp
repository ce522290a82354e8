#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "yamabe/mass.hpp"

using namespace ymb;

TEST_CASE("adm mass: flat zero, point-mass chart, linearity, rotation invariance") {
  int n = 3;
  Chart flat;
  {
    Chart base = flat_box(n);
    flat = base;
    flat.lo.assign(n, -256.0);
    flat.hi.assign(n, 256.0);
    flat.face.assign(n, {FaceKind::artificial, FaceKind::artificial});
  }
  std::vector<double> radii = {30.0, 45.0, 68.0, 100.0, 150.0};
  auto mflat = adm_mass(flat, radii);
  for (double f : mflat.flux) CHECK(std::abs(f) < 1e-8);
  CHECK(std::abs(mflat.extrapolated) < 1e-8);

  Chart sch = schwarzschild_chart(n, 1.0, 256.0, false);
  auto m1 = adm_mass(sch, radii);
  CHECK(m1.extrapolated == doctest::Approx(16.0 * kPi).epsilon(0.02));
  CHECK_FALSE(m1.ill_posed_warning);

  Chart sch2 = schwarzschild_chart(n, 2.0, 256.0, false);
  auto m2 = adm_mass(sch2, radii);
  CHECK(m2.extrapolated == doctest::Approx(2.0 * m1.extrapolated).epsilon(0.005));

  // rotation of the asymptotic chart
  double c = std::cos(0.7), s = std::sin(0.7);
  std::vector<double> Q = {c, -s, 0, s, c, 0, 0, 0, 1};
  Chart rot = rotated_chart(sch, Q);
  auto mr = adm_mass(rot, radii);
  CHECK(mr.extrapolated == doctest::Approx(m1.extrapolated).epsilon(0.005));
}

TEST_CASE("adm mass: slow decay triggers the ill-posed warning") {
  int n = 3;
  Chart slow;
  slow.n = n;
  slow.name = "slow";
  slow.lo.assign(n, -64.0);
  slow.hi.assign(n, 64.0);
  slow.face.assign(n, {FaceKind::artificial, FaceKind::artificial});
  slow.metric = [n](const double* x, double* g) {
    double r = std::max(norm_n(x, n), 1e-6);
    for (int i = 0; i < n * n; ++i) g[i] = 0;
    for (int a = 0; a < n; ++a) g[a * n + a] = 1.0 + std::pow(r, -0.4);
  };
  auto m = adm_mass(slow, {8.0, 12.0, 18.0, 27.0});
  CHECK(m.ill_posed_warning);
}

TEST_CASE("boundary mass: flat zero, half point-mass, boundary term matters") {
  int n = 3;
  Chart halfflat = flat_half_box(n, 256.0);
  std::vector<double> radii = {30.0, 45.0, 68.0, 100.0, 150.0};
  auto mf = boundary_mass(halfflat, radii);
  for (double f : mf.flux) CHECK(std::abs(f) < 1e-8);

  // reflection-symmetric point mass: half of the full flux
  Chart sch = schwarzschild_chart(n, 1.0, 256.0, false);
  Chart sch_half = schwarzschild_chart(n, 1.0, 256.0, true);
  auto mfull = adm_mass(sch, radii);
  auto mhalf = boundary_mass(sch_half, radii);
  CHECK(mhalf.extrapolated == doctest::Approx(0.5 * mfull.extrapolated).epsilon(0.02));

  // nonzero g_ni tail: dropping the correction changes the limit
  Chart tail = gni_tail_chart(n, 0.4, 256.0);
  auto with = boundary_mass(tail, radii, false);
  auto without = boundary_mass(tail, radii, true);
  CHECK(std::abs(with.extrapolated - without.extrapolated) > 1e-3);
}

TEST_CASE("mass csv writer emits one row per radius") {
  Chart sch = schwarzschild_chart(3, 1.0, 64.0, false);
  auto m = adm_mass(sch, {8.0, 12.0, 18.0});
  write_mass_csv("/tmp/ymb_mass_test.csv", m);
  FILE* f = std::fopen("/tmp/ymb_mass_test.csv", "r");
  REQUIRE(f);
  int lines = 0;
  char buf[512];
  while (std::fgets(buf, sizeof(buf), f)) ++lines;
  std::fclose(f);
  CHECK(lines == 4);  // header + 3 radii
}
