#include "yamabe/functionals.hpp"

namespace ymb {

static double trapw(int i, int m, double h) { return (i == 0 || i == m - 1) ? 0.5 * h : h; }

// boundary quadrature weights (induced measure) for the H-term
static std::vector<double> boundary_weights(const ConformalOperator& op) {
  const Grid& g = op.grid();
  int n = g.n();
  std::vector<double> w(g.size(), 0.0);
  std::vector<int> I(n);
  std::vector<double> x(n);
  for (auto& be : op.boundary_entries()) {
    g.unpack(be.node, I);
    double s = 1;
    for (int d = 0; d < n; ++d)
      if (d != be.axis) s *= trapw(I[d], g.dims[d], g.h[d]);
    g.coords_of(I, x.data());
    w[be.node] += s * std::pow(op.chart().cfac(x.data()), 0.5 * (n - 1));
  }
  return w;
}

EnergyReport energy(const ConformalOperator& op, const Field& u) {
  int n = op.n();
  double p = 2.0 * n / (n - 2.0);
  EnergyReport r;
  r.numerator = op.energy_product(u, u);
  if (op.chart().has_physical()) {
    auto bw = boundary_weights(op);
    for (auto& be : op.boundary_entries())
      r.numerator += bw[be.node] * 2.0 * be.H * u.v[be.node] * u.v[be.node];
  }
  const auto& w = op.weights();
  for (size_t i = 0; i < u.v.size(); ++i) r.den_raw += w[i] * std::pow(std::abs(u.v[i]), p);
  if (r.den_raw <= 0) throw NumericsError("energy: zero denominator");
  r.den_scaled = std::pow(r.den_raw, (n - 2.0) / n);
  r.E = r.numerator / r.den_scaled;
  r.F = r.numerator / r.den_raw;
  return r;
}

QBracket estimate_Q(const ConformalOperator& op, int restarts, std::uint64_t seed, int max_iter) {
  int n = op.n();
  size_t N = op.size();
  double p = 2.0 * n / (n - 2.0);
  const auto& w = op.weights();
  auto bw = boundary_weights(op);
  std::vector<double> hterm(N, 0.0);
  for (auto& be : op.boundary_entries()) hterm[be.node] = 2.0 * be.H * bw[be.node];

  auto num_of = [&](const Field& u) {
    double s = op.energy_product(u, u);
    for (size_t i = 0; i < N; ++i) s += hterm[i] * u.v[i] * u.v[i];
    return s;
  };
  auto den_raw = [&](const Field& u) {
    double s = 0;
    for (size_t i = 0; i < N; ++i) s += w[i] * std::pow(std::abs(u.v[i]), p);
    return s;
  };
  auto normalize = [&](Field& u) {
    double s = std::pow(den_raw(u), 1.0 / p);
    for (auto& v : u.v) v /= s;
  };

  QBracket out;
  double best = std::numeric_limits<double>::infinity();
  Rng rng(seed);

  std::vector<double> grad(N), cons(N), lap(N);
  for (int attempt = 0; attempt <= restarts; ++attempt) {
    Field u(op.grid());
    if (attempt == 0) {
      for (auto& v : u.v) v = 1.0;
    } else {
      for (auto& v : u.v) v = 1.0 + rng.uniform(-0.6, 0.6);
    }
    normalize(u);
    double E = num_of(u);
    std::vector<double> trace_local;
    trace_local.push_back(E);
    double tau = 0.1;
    for (int it = 0; it < max_iter; ++it) {
      // gradient of the numerator and of the constraint
      op.apply_lap(u.v.data(), lap.data());
      const auto& R0 = op.scalar_curv();
      double a = op.aL(), cR = op.cR();
      for (size_t i = 0; i < N; ++i) {
        grad[i] = 2.0 * (w[i] * (-a * lap[i] + cR * R0[i] * u.v[i]) + hterm[i] * u.v[i]);
        double av = std::abs(u.v[i]);
        cons[i] = p * w[i] * std::pow(av, p - 1.0) * (u.v[i] >= 0 ? 1.0 : -1.0);
      }
      double gc = 0, cc = 0;
      for (size_t i = 0; i < N; ++i) {
        gc += grad[i] * cons[i];
        cc += cons[i] * cons[i];
      }
      for (size_t i = 0; i < N; ++i) grad[i] -= gc / cc * cons[i];
      double gn = 0;
      for (size_t i = 0; i < N; ++i) gn += grad[i] * grad[i];
      if (std::sqrt(gn) < 1e-12 * std::max(1.0, std::abs(E))) break;
      // Armijo backtracking on the normalized iterate
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Field cand(op.grid());
        for (size_t i = 0; i < N; ++i) cand.v[i] = u.v[i] - tau * grad[i];
        normalize(cand);
        double Ec = num_of(cand);
        if (Ec <= E - 1e-4 * tau * gn) {
          u = std::move(cand);
          E = Ec;
          moved = true;
          tau *= 1.5;
          break;
        }
        tau *= 0.5;
      }
      trace_local.push_back(E);
      if (!moved) break;
    }
    if (E < best) {
      best = E;
      out.trace = trace_local;
    }
    if (attempt == restarts && trace_local.size() >= static_cast<size_t>(max_iter)) {
      out.stagnation = true;
    }
  }
  out.upper = best;

  double vol = 0;
  for (size_t i = 0; i < N; ++i) vol += w[i];
  double l1 = op.smallest_eigenvalue();
  out.lower = std::min(l1, 0.0) * std::pow(vol, 2.0 / n);
  return out;
}

// int_{half space} U_eps^{2n/(n-2)} via graded quadrature on [0, 40 eps] plus the
// inverted-variable change of coordinates for the far tail (both smooth).
static double bubble_mass_halfspace(int n, double eps) {
  double R = 40.0 * eps;
  double core = graded_radial(eps, R, 16, [&](double r) {
    return std::pow(r, n - 1) * std::pow(eps * eps / (eps * eps + r * r), n) / std::pow(eps, n);
  });
  // r = eps/t:   int_R^inf r^{n-1}(eps^2+r^2)^{-n} dr = eps^{-n} int_0^{eps/R} t^{n-1}(1+t^2)^{-n} dt
  double tail = gl_composite(0.0, eps / R, 4, 16, [&](double t) {
    return std::pow(t, n - 1) * std::pow(1.0 + t * t, -static_cast<double>(n));
  });
  // core above used the substitution-free integrand eps^n (eps^2+r^2)^{-n} r^{n-1}
  return 0.5 * sphere_area(n) * (core + tail);
}

double q_hemisphere(int n, double eps) {
  if (n < 3) throw NumericsError("q_hemisphere: n >= 3");
  double mass = bubble_mass_halfspace(n, eps);
  return 4.0 * n * (n - 1.0) * std::pow(mass, 2.0 / n);
}

double y_sphere(int n, double eps) {
  if (n < 3) throw NumericsError("y_sphere: n >= 3");
  double mass = 2.0 * bubble_mass_halfspace(n, eps);
  return 4.0 * n * (n - 1.0) * std::pow(mass, 2.0 / n);
}

}  // namespace ymb
