#include "yamabe/conformal.hpp"

#include <Eigen/Eigenvalues>

namespace ymb {

static double trapw(int i, int m, double h) { return (i == 0 || i == m - 1) ? 0.5 * h : h; }

ConformalOperator::ConformalOperator(const Chart& chart, const Grid& grid, LConvention conv,
                                     const Field* conformal_u)
    : chart_(&chart), grid_(&grid), conv_(conv) {
  if (!chart.conf_flat)
    throw NumericsError("ConformalOperator: chart '" + chart.name + "' is not conformally flat");
  int n = chart.n;
  double a = 4.0 * (n - 1) / (n - 2), b = 2.0 * (n - 1) / (n - 2);
  if (conv == LConvention::energy) {
    aL_ = a;
    cR_ = 1.0;
    bB_ = b;
    cH_ = 1.0;
  } else {
    aL_ = 1.0;
    cR_ = 1.0 / a;
    bB_ = 1.0;
    cH_ = 1.0 / b;
  }

  size_t N = grid.size();
  const double pw = 4.0 / (n - 2);
  cnod_.resize(N);
  std::vector<double> x(n);
  for (size_t id = 0; id < N; ++id) {
    grid.coords(id, x.data());
    double c = chart.cfac(x.data());
    if (conformal_u) c *= std::pow(conformal_u->v[id], pw);
    cnod_[id] = c;
  }

  // quadrature weights with volume element
  wq_.resize(N);
  std::vector<int> I(n);
  for (size_t id = 0; id < N; ++id) {
    grid.unpack(id, I);
    double w = 1;
    for (int d = 0; d < n; ++d) w *= trapw(I[d], grid.dims[d], grid.h[d]);
    wq_[id] = w * std::pow(cnod_[id], 0.5 * n);
  }

  // Laplace-Beltrami stencil, divergence form with face-midpoint coefficients.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * (2 * n + 1));
  std::vector<double> xm(n);
  for (size_t id = 0; id < N; ++id) {
    grid.unpack(id, I);
    grid.coords_of(I, x.data());
    double diag = 0;
    double cin = std::pow(cnod_[id], -0.5 * n);
    for (int d = 0; d < n; ++d) {
      for (int side = 0; side < 2; ++side) {
        int nb = I[d] + (side == 0 ? -1 : 1);
        bool inside = nb >= 0 && nb < grid.dims[d];
        // face coefficient c^{n/2-1} at the face midpoint (reflected when outside)
        int fb = inside ? nb : I[d] + (side == 0 ? 1 : -1);
        xm = x;
        xm[d] = 0.5 * (x[d] + (chart.lo[d] + fb * grid.h[d]));
        double cf = chart.cfac(xm.data());
        if (conformal_u) {
          size_t nbid = id + (fb - I[d]) * static_cast<long>(grid.stride[d]);
          double um = 0.5 * (conformal_u->v[id] + conformal_u->v[nbid]);
          cf *= std::pow(um, pw);
        }
        double kappa = cin * std::pow(cf, 0.5 * n - 1.0) / (grid.h[d] * grid.h[d]);
        size_t nbid = id + (fb - I[d]) * static_cast<long>(grid.stride[d]);
        trip.emplace_back(static_cast<int>(id), static_cast<int>(nbid), kappa);
        diag -= kappa;

        if (!inside && chart.physical_face(d, side)) {
          BoundaryEntry be;
          be.node = id;
          be.axis = d;
          be.side = side;
          be.sqc = std::sqrt(cnod_[id]);
          be.flux = kappa * 2.0 * grid.h[d];  // times c^{-n/2} already in kappa
          be.H = 0;
          bentries_.push_back(be);
        }
      }
    }
    trip.emplace_back(static_cast<int>(id), static_cast<int>(id), diag);
  }
  lap_.resize(static_cast<int>(N), static_cast<int>(N));
  lap_.setFromTriplets(trip.begin(), trip.end());

  // nodal scalar curvature of the (possibly conformally composed) metric
  R0_.resize(N);
  if (!conformal_u) {
    for (size_t id = 0; id < N; ++id) {
      grid.coords(id, x.data());
      R0_[id] = chart.scalar_curv_conf(x.data());
    }
  } else {
    // R of u^{4/(n-2)} g0 via the discrete conformal-change formula on the base op
    ConformalOperator base(chart, grid, LConvention::energy);
    Field Rg = conformal_scalar(base, *conformal_u);
    R0_ = Rg.v;
  }

  // mean curvature on physical boundary nodes
  if (!bentries_.empty()) {
    if (!conformal_u) {
      for (auto& be : bentries_) {
        grid.coords(be.node, x.data());
        be.H = chart.mean_curv_boundary(x.data(), be.axis, be.side);
      }
    } else {
      ConformalOperator base(chart, grid, LConvention::energy);
      Field Hg = conformal_mean(base, *conformal_u);
      for (auto& be : bentries_) be.H = Hg.v[be.node];
    }
  }
}

double ConformalOperator::convention_factor() const {
  return 4.0 * (n() - 1.0) / (n() - 2.0);
}

void ConformalOperator::check_convention(LConvention expected) const {
  if (expected != conv_)
    throw ConventionError(
        "operator convention mismatch: conversion by 4(n-1)/(n-2) must be explicit");
}

void ConformalOperator::apply_lap(const double* u, double* out) const {
  Eigen::Map<const Eigen::VectorXd> uv(u, lap_.rows());
  Eigen::Map<Eigen::VectorXd> ov(out, lap_.rows());
  ov = lap_ * uv;
}

Field ConformalOperator::apply_L(const Field& u, LConvention expected) const {
  check_convention(expected);
  Field out(*grid_);
  apply_lap(u.v.data(), out.v.data());
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = aL_ * out.v[i] - cR_ * R0_[i] * u.v[i];
  return out;
}

Field ConformalOperator::apply_B(const Field& u, LConvention expected) const {
  check_convention(expected);
  if (!chart_->has_physical()) throw NumericsError("apply_B: chart has no physical boundary");
  Field out(*grid_);
  const Grid& g = *grid_;
  for (auto& be : bentries_) {
    // one-sided second-order inward derivative
    long st = static_cast<long>(g.stride[be.axis]);
    long sgn = be.side == 0 ? st : -st;
    double u0 = u.v[be.node], u1 = u.v[be.node + sgn], u2 = u.v[be.node + 2 * sgn];
    double dn = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * g.h[be.axis]);
    double deta = dn / be.sqc;  // unit normal w.r.t. the metric
    out.v[be.node] = bB_ * deta - cH_ * be.H * u0;
  }
  return out;
}

void ConformalOperator::override_scalar_curv(const std::vector<double>& R) {
  if (R.size() != R0_.size()) throw NumericsError("override_scalar_curv: size mismatch");
  R0_ = R;
  lambda_min_ = std::numeric_limits<double>::quiet_NaN();
}

Field ConformalOperator::solve_general(const std::vector<double>& extra_diag,
                                       const std::vector<double>& rhs, double tol, bool bvp,
                                       const std::vector<double>* rhs_boundary,
                                       size_t* iterations) const {
  size_t N = size();
  // A u = W(-aL Lap u + (cR R0 + extra) u) (+ H fold); rhs is unweighted.
  std::vector<double> hfold(N, 0.0);
  if (bvp) {
    for (auto& be : bentries_) hfold[be.node] += aL_ * be.flux * be.sqc / bB_ * cH_ * be.H;
  }
  auto diag_extra = [&](size_t i) { return extra_diag.empty() ? 0.0 : extra_diag[i]; };
  auto applyA = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(N);
    apply_lap(v.data(), out.data());
    for (size_t i = 0; i < N; ++i)
      out[i] = wq_[i] * (-aL_ * out[i] + (cR_ * R0_[i] + diag_extra(i) + hfold[i]) * v[i]);
    return out;
  };
  Eigen::VectorXd b(N);
  for (size_t i = 0; i < N; ++i) b[i] = wq_[i] * rhs[i];
  if (rhs_boundary)
    for (auto& be : bentries_)
      b[be.node] += wq_[be.node] * aL_ * be.flux * be.sqc / bB_ * (-(*rhs_boundary)[be.node]);

  // Jacobi preconditioner diag(A)
  Eigen::VectorXd dia(N);
  for (size_t i = 0; i < N; ++i) {
    double diagL = lap_.coeff(static_cast<int>(i), static_cast<int>(i));
    dia[i] = wq_[i] * (-aL_ * diagL + cR_ * R0_[i] + diag_extra(i) + hfold[i]);
    if (dia[i] <= 0) dia[i] = 1.0;
  }

  Eigen::VectorXd xv = Eigen::VectorXd::Zero(N), r = b, z(N), p(N), Ap(N);
  double bnorm = b.norm();
  if (bnorm == 0) return Field(*grid_);
  z = r.cwiseQuotient(dia);
  p = z;
  double rz = r.dot(z);
  size_t maxit = static_cast<size_t>(50.0 * std::sqrt(static_cast<double>(N))) + 64;
  size_t used = maxit;
  for (size_t it = 0; it < maxit; ++it) {
    Ap = applyA(p);
    double alpha = rz / p.dot(Ap);
    xv += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= tol * bnorm) {
      used = it + 1;
      break;
    }
    z = r.cwiseQuotient(dia);
    double rz2 = r.dot(z);
    p = z + (rz2 / rz) * p;
    rz = rz2;
  }
  if (iterations) *iterations = used;
  Field out(*grid_);
  out.v.assign(xv.data(), xv.data() + N);
  return out;
}

double ConformalOperator::smallest_eigenvalue() const {
  if (!std::isnan(lambda_min_)) return lambda_min_;
  size_t N = size();
  auto applyA = [&](const double* v, double* out) {
    apply_lap(v, out);
    for (size_t i = 0; i < N; ++i) out[i] = wq_[i] * (-aL_ * out[i] + cR_ * R0_[i] * v[i]);
  };
  auto pairs = smallest_eigenpairs(applyA, wq_, N, 1, 120, 1e-9, 7771);
  lambda_min_ = pairs[0].lambda;
  return lambda_min_;
}

Field ConformalOperator::solve_bvp(const Field& f, const Field& fbar, double tol) const {
  double lmin = smallest_eigenvalue();
  if (lmin <= 1e-12)
    throw SolvabilityError("solve_bvp: operator not coercive (probe eigenvalue attached)", lmin);
  // L u = f  <=>  W(-L) u = -W f
  std::vector<double> rhs(size());
  for (size_t i = 0; i < size(); ++i) rhs[i] = -f.v[i];
  return solve_general({}, rhs, tol, true, &fbar.v);
}

double ConformalOperator::energy_product(const Field& u, const Field& v) const {
  size_t N = size();
  std::vector<double> Lv(N);
  apply_lap(v.v.data(), Lv.data());
  double s = 0;
  for (size_t i = 0; i < N; ++i) s += wq_[i] * u.v[i] * (-aL_ * Lv[i] + cR_ * R0_[i] * v.v[i]);
  return s;
}

Field conformal_scalar(const ConformalOperator& op, const Field& u) {
  size_t N = op.size();
  int n = op.n();
  for (size_t i = 0; i < N; ++i)
    if (!(u.v[i] > 0)) throw PositivityError("conformal_scalar: u must be positive", i);
  double a = 4.0 * (n - 1) / (n - 2);
  double expn = (n + 2.0) / (n - 2.0);
  Field out(op.grid());
  std::vector<double> lap(N);
  op.apply_lap(u.v.data(), lap.data());
  const auto& R0 = op.scalar_curv();
  for (size_t i = 0; i < N; ++i)
    out.v[i] = std::pow(u.v[i], -expn) * (-a * lap[i] + R0[i] * u.v[i]);
  return out;
}

Field conformal_mean(const ConformalOperator& op, const Field& u) {
  size_t N = op.size();
  int n = op.n();
  for (size_t i = 0; i < N; ++i)
    if (!(u.v[i] > 0)) throw PositivityError("conformal_mean: u must be positive", i);
  double b = 2.0 * (n - 1) / (n - 2);
  Field out(op.grid());
  const Grid& g = op.grid();
  for (auto& be : op.boundary_entries()) {
    long st = static_cast<long>(g.stride[be.axis]);
    long sgn = be.side == 0 ? st : -st;
    double u0 = u.v[be.node], u1 = u.v[be.node + sgn], u2 = u.v[be.node + 2 * sgn];
    double dn = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * g.h[be.axis]);
    double deta = dn / be.sqc;
    out.v[be.node] = std::pow(u0, -static_cast<double>(n) / (n - 2)) * (-b * deta + be.H * u0);
  }
  return out;
}

std::vector<EigenPair> smallest_eigenpairs(
    const std::function<void(const double*, double*)>& applyA, const std::vector<double>& Bdiag,
    size_t dim, int k, int max_iter, double tol, std::uint64_t seed) {
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;
  Eigen::Map<const Vec> B(Bdiag.data(), dim);

  // guard vectors protect truncated eigenvalue multiplets
  int kb = std::min<int>(k + 3, static_cast<int>(dim));

  // sigma shifts A positive definite; grown on CG breakdown
  double sigma = 1.0;

  Rng rng(seed);
  Mat X(dim, kb);
  for (size_t i = 0; i < dim; ++i)
    for (int j = 0; j < kb; ++j) X(i, j) = rng.uniform(-1.0, 1.0);

  auto b_orth = [&](Mat& Y) {
    for (int j = 0; j < Y.cols(); ++j) {
      for (int l = 0; l < j; ++l) {
        double pr = (Y.col(l).array() * B.array() * Y.col(j).array()).sum();
        Y.col(j) -= pr * Y.col(l);
      }
      double nb = std::sqrt((Y.col(j).array().square() * B.array()).sum());
      if (nb < 1e-300) nb = 1;
      Y.col(j) /= nb;
    }
  };
  b_orth(X);

  auto applyAv = [&](const Vec& v) {
    Vec out(dim);
    applyA(v.data(), out.data());
    return out;
  };

  // CG for (A + sigma B) x = rhs
  auto cg = [&](const Vec& rhs, bool& ok) {
    Vec x = Vec::Zero(dim), r = rhs, p = rhs, Ap(dim);
    double rr = r.squaredNorm(), rhs2 = rr;
    ok = true;
    size_t maxit = 4 * static_cast<size_t>(50.0 * std::sqrt(static_cast<double>(dim))) + 64;
    for (size_t it = 0; it < maxit; ++it) {
      Ap = applyAv(p) + sigma * (B.array() * p.array()).matrix();
      double pAp = p.dot(Ap);
      if (pAp <= 0) {
        ok = false;
        return x;
      }
      double alpha = rr / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      double rr2 = r.squaredNorm();
      if (rr2 <= 1e-26 * rhs2) break;
      p = r + (rr2 / rr) * p;
      rr = rr2;
    }
    return x;
  };

  std::vector<double> lambdas(kb, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    Mat Y(dim, kb);
    for (int j = 0; j < kb; ++j) {
      bool ok = true;
      Vec rhs = (B.array() * X.col(j).array()).matrix();
      Vec y = cg(rhs, ok);
      if (!ok) {
        sigma *= 4.0;
        --j;
        continue;
      }
      Y.col(j) = y;
    }
    b_orth(Y);
    // Rayleigh-Ritz
    Mat At(kb, kb);
    for (int j = 0; j < kb; ++j) {
      Vec Ay = applyAv(Y.col(j));
      for (int l = 0; l < kb; ++l) At(l, j) = Y.col(l).dot(Ay);
    }
    At = 0.5 * (At + At.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(At);
    X = Y * es.eigenvectors();
    for (int j = 0; j < kb; ++j) lambdas[j] = es.eigenvalues()[j];
    // residual-based convergence on the requested modes
    if (iter >= 3) {
      double worst = 0;
      for (int j = 0; j < k; ++j) {
        Vec r = applyAv(X.col(j)) - lambdas[j] * (B.array() * X.col(j).array()).matrix();
        worst = std::max(worst, r.norm() / std::max(1.0, std::abs(lambdas[j])));
      }
      if (worst <= tol) break;
    }
  }
  std::vector<EigenPair> out(k);
  for (int j = 0; j < k; ++j) {
    out[j].lambda = lambdas[j];
    out[j].vec.assign(X.col(j).data(), X.col(j).data() + dim);
  }
  return out;
}

}  // namespace ymb
