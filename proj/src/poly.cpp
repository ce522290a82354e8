#include "yamabe/poly.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace ymb {

int mi_degree(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

Poly& Poly::add_term(const MultiIndex& a, double c) {
  if (static_cast<int>(a.size()) != n_) throw NumericsError("Poly: index size mismatch");
  if (c != 0.0) {
    double& slot = t_[a];
    slot += c;
    if (slot == 0.0) t_.erase(a);
  }
  return *this;
}

double Poly::coeff(const MultiIndex& a) const {
  auto it = t_.find(a);
  return it == t_.end() ? 0.0 : it->second;
}

Poly Poly::diff(int axis) const {
  Poly out(n_);
  for (auto& [a, c] : t_) {
    if (a[axis] == 0) continue;
    MultiIndex b = a;
    b[axis] -= 1;
    out.add_term(b, c * a[axis]);
  }
  return out;
}

Poly Poly::mul_monomial(const MultiIndex& a, double c) const {
  Poly out(n_);
  for (auto& [b, cb] : t_) {
    MultiIndex s = b;
    for (int i = 0; i < n_; ++i) s[i] += a[i];
    out.add_term(s, cb * c);
  }
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  Poly out = *this;
  for (auto& [a, c] : o.t_) out.add_term(a, c);
  return out;
}

Poly Poly::operator-(const Poly& o) const {
  Poly out = *this;
  for (auto& [a, c] : o.t_) out.add_term(a, -c);
  return out;
}

Poly Poly::scaled(double c) const {
  Poly out(n_);
  for (auto& [a, cc] : t_) out.add_term(a, cc * c);
  return out;
}

double Poly::eval(const double* x) const {
  double s = 0;
  for (auto& [a, c] : t_) {
    double m = c;
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < a[i]; ++k) m *= x[i];
    s += m;
  }
  return s;
}

void Poly::grad(const double* x, double* g) const {
  for (int i = 0; i < n_; ++i) g[i] = diff(i).eval(x);
}

double Poly::lap(const double* x) const {
  double s = 0;
  for (int i = 0; i < n_; ++i) s += diff(i).diff(i).eval(x);
  return s;
}

int Poly::degree() const {
  int d = 0;
  for (auto& [a, c] : t_) {
    (void)c;
    d = std::max(d, mi_degree(a));
  }
  return d;
}

bool Poly::zero(double tol) const {
  for (auto& [a, c] : t_) {
    (void)a;
    if (std::abs(c) > tol) return false;
  }
  return true;
}

Poly Poly::boundary_restrict() const {
  Poly out(n_);
  for (auto& [a, c] : t_)
    if (a[n_ - 1] == 0) out.add_term(a, c);
  return out;
}

void PolyTensor::set(int a, int b, const MultiIndex& alpha, double c) {
  if (a > b) std::swap(a, b);
  auto key = std::make_tuple(a, b, alpha);
  if (c == 0.0)
    c_.erase(key);
  else
    c_[key] = c;
}

double PolyTensor::get(int a, int b, const MultiIndex& alpha) const {
  if (a > b) std::swap(a, b);
  auto it = c_.find(std::make_tuple(a, b, alpha));
  return it == c_.end() ? 0.0 : it->second;
}

Poly PolyTensor::component(int a, int b) const {
  if (a > b) std::swap(a, b);
  Poly out(n_);
  for (auto& [key, c] : c_)
    if (std::get<0>(key) == a && std::get<1>(key) == b) out.add_term(std::get<2>(key), c);
  return out;
}

double PolyTensor::eval(int a, int b, const double* x) const { return component(a, b).eval(x); }

void PolyTensor::validate() const {
  MultiIndex en(n_, 0);
  en[n_ - 1] = 1;
  for (auto& [key, c] : c_) {
    auto& [a, b, alpha] = key;
    int deg = mi_degree(alpha);
    if (deg < 1 || deg > deg_)
      throw NumericsError("PolyTensor: coefficient outside the degree window");
    if (b == n_ - 1 && c != 0.0)
      throw NumericsError("PolyTensor: normal components must vanish");
    if (deg == 1 && alpha != en)
      throw NumericsError("PolyTensor: first-order part must be proportional to x_n");
    (void)a;
  }
  // trace-free per multi-index
  std::map<MultiIndex, double> tr;
  for (auto& [key, c] : c_) {
    auto& [a, b, alpha] = key;
    if (a == b) tr[alpha] += c;
  }
  for (auto& [alpha, s] : tr) {
    (void)alpha;
    if (std::abs(s) > 1e-13) throw NumericsError("PolyTensor: trace does not vanish");
  }
  // tangential radiality on the boundary: sum_j x_j H_ij(xbar, 0) = 0
  for (int i = 0; i + 1 < n_; ++i) {
    Poly s(n_);
    for (int j = 0; j + 1 < n_; ++j) {
      MultiIndex ej(n_, 0);
      ej[j] = 1;
      s = s + component(i, j).boundary_restrict().mul_monomial(ej, 1.0);
    }
    if (!s.zero(1e-13))
      throw NumericsError("PolyTensor: tangential radiality fails on the boundary");
  }
}

double PolyTensor::coeff_sq_weighted(const std::vector<double>& weight_by_degree) const {
  double s = 0;
  for (auto& [key, c] : c_) {
    auto& [a, b, alpha] = key;
    double term = c * c * weight_by_degree[mi_degree(alpha)];
    s += (a == b) ? term : 2.0 * term;  // count the symmetric mirror
  }
  return s;
}

AlgebraicCurvature algebraic_schouten_weyl(const PolyTensor& H) {
  int n = H.n();
  AlgebraicCurvature out;
  out.n = n;
  std::vector<Poly> comp(n * n, Poly(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) comp[a * n + b] = H.component(a, b);
  auto d2 = [&](int a, int b, int i, int j) { return comp[a * n + b].diff(i).diff(j); };

  Poly div2(n);  // d_e d_f H_ef
  for (int e = 0; e < n; ++e)
    for (int f = 0; f < n; ++f) div2 = div2 + d2(e, f, e, f);

  out.A.assign(n * n, Poly(n));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      Poly s(n);
      for (int e = 0; e < n; ++e)
        s = s + d2(a, e, c, e) + d2(c, e, a, e) - d2(a, c, e, e);
      if (a == c) s = s - div2.scaled(1.0 / (n - 1));
      out.A[a * n + c] = s;
    }

  out.Z.assign(n * n * n * n, Poly(n));
  double inv = 1.0 / (n - 2);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Poly z = d2(a, c, b, d) - d2(a, d, b, c) + d2(d, b, a, c) - d2(b, c, a, d);
          if (b == d) z = z + out.Ac(a, c).scaled(inv);
          if (b == c) z = z - out.Ac(a, d).scaled(inv);
          if (a == c) z = z + out.Ac(b, d).scaled(inv);
          if (a == d) z = z - out.Ac(b, c).scaled(inv);
          out.Z[((a * n + b) * n + c) * n + d] = z;
        }
  return out;
}

// ---- kernel dimension of the vanishing system ----

namespace {

struct BasisEntry {
  int i, j;  // i <= j, tangential
  MultiIndex alpha;
};

std::vector<MultiIndex> multiindices(int n, int deg) {
  std::vector<MultiIndex> out;
  MultiIndex cur(n, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[pos] = k;
      rec(pos + 1, left - k);
    }
  };
  rec(0, deg);
  return out;
}

}  // namespace

KernelReport tensor_kernel_dimension(int n, int deg_bound, bool with_neumann_constraint) {
  if (n < 4) throw NumericsError("tensor_kernel_dimension: n >= 4 required");
  MultiIndex en(n, 0);
  en[n - 1] = 1;

  std::vector<BasisEntry> basis;
  for (int deg = 1; deg <= deg_bound; ++deg) {
    std::vector<MultiIndex> mis =
        (deg == 1) ? std::vector<MultiIndex>{en} : multiindices(n, deg);
    for (auto& alpha : mis)
      for (int i = 0; i + 1 < n; ++i)
        for (int j = i; j + 1 < n; ++j) basis.push_back({i, j, alpha});
  }
  int nb = static_cast<int>(basis.size());

  // rows: admissibility constraints + vanishing system
  std::vector<std::map<int, double>> rows;
  auto add_row = [&](std::map<int, double> r) {
    if (!r.empty()) rows.push_back(std::move(r));
  };

  // trace-free per alpha
  {
    std::map<MultiIndex, std::map<int, double>> tr;
    for (int k = 0; k < nb; ++k)
      if (basis[k].i == basis[k].j) tr[basis[k].alpha][k] += 1.0;
    for (auto& [alpha, r] : tr) {
      (void)alpha;
      add_row(r);
    }
  }
  // tangential radiality: coefficients of sum_j x_j H_ij(xbar, 0)
  {
    // coefficient of monomial gamma in x_j * x^alpha is delta_{gamma, alpha+e_j}
    std::map<std::pair<int, MultiIndex>, std::map<int, double>> rr;
    for (int k = 0; k < nb; ++k) {
      const auto& be = basis[k];
      if (be.alpha[n - 1] != 0) continue;  // boundary restriction
      for (int i = 0; i + 1 < n; ++i) {
        int j = -1;
        if (be.i == i)
          j = be.j;
        else if (be.j == i)
          j = be.i;
        else
          continue;
        MultiIndex gamma = be.alpha;
        gamma[j] += 1;
        rr[{i, gamma}][k] += 1.0;
        if (be.i == be.j && be.i == i) {
          // the (i,i) entry enters once only; already handled above
        }
      }
    }
    for (auto& [key, r] : rr) {
      (void)key;
      add_row(r);
    }
  }
  // Z coefficients: build per basis vector by linearity
  {
    std::map<std::tuple<int, int, int, int, MultiIndex>, std::map<int, double>> zr;
    for (int k = 0; k < nb; ++k) {
      PolyTensor Hk(n, deg_bound);
      Hk.set(basis[k].i, basis[k].j, basis[k].alpha, 1.0);
      auto alg = algebraic_schouten_weyl(Hk);
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = c + 1; d < n; ++d)
              for (auto& [mi, coef] : alg.Zc(a, b, c, d).terms())
                zr[{a, b, c, d, mi}][k] += coef;
    }
    for (auto& [key, r] : zr) {
      (void)key;
      add_row(r);
    }
  }
  // Neumann rows: coefficients of d_n H_ij on the boundary
  if (with_neumann_constraint) {
    std::map<std::tuple<int, int, MultiIndex>, std::map<int, double>> nr;
    for (int k = 0; k < nb; ++k) {
      const auto& be = basis[k];
      if (be.alpha[n - 1] != 1) continue;
      MultiIndex bar = be.alpha;
      bar[n - 1] = 0;
      nr[{be.i, be.j, bar}][k] += 1.0;
    }
    for (auto& [key, r] : nr) {
      (void)key;
      add_row(r);
    }
  }

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), nb);
  for (size_t r = 0; r < rows.size(); ++r)
    for (auto& [k, v] : rows[r]) M(static_cast<int>(r), k) = v;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  KernelReport rep;
  rep.sigma_max = sv.size() ? sv[0] : 0.0;
  rep.sigma_cut = 1e-8 * rep.sigma_max;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rep.sigma_cut) ++rank;

  // admissible dimension: same computation without the vanishing/Neumann rows is
  // implied by the constraint subset; recompute quickly
  {
    std::vector<std::map<int, double>> crows;
    std::map<MultiIndex, std::map<int, double>> tr;
    for (int k = 0; k < nb; ++k)
      if (basis[k].i == basis[k].j) tr[basis[k].alpha][k] += 1.0;
    for (auto& [alpha, r] : tr) {
      (void)alpha;
      crows.push_back(r);
    }
    std::map<std::pair<int, MultiIndex>, std::map<int, double>> rr;
    for (int k = 0; k < nb; ++k) {
      const auto& be = basis[k];
      if (be.alpha[n - 1] != 0) continue;
      for (int i = 0; i + 1 < n; ++i) {
        int j = -1;
        if (be.i == i)
          j = be.j;
        else if (be.j == i)
          j = be.i;
        else
          continue;
        MultiIndex gamma = be.alpha;
        gamma[j] += 1;
        rr[{i, gamma}][k] += 1.0;
      }
    }
    for (auto& [key, r] : rr) {
      (void)key;
      crows.push_back(r);
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<int>(crows.size()), nb);
    for (size_t r = 0; r < crows.size(); ++r)
      for (auto& [k, v] : crows[r]) C(static_cast<int>(r), k) = v;
    Eigen::JacobiSVD<Eigen::MatrixXd> csvd(C);
    int crank = 0;
    for (int i = 0; i < csvd.singularValues().size(); ++i)
      if (csvd.singularValues()[i] > 1e-10 * csvd.singularValues()[0]) ++crank;
    rep.dim_admissible = nb - crank;
  }

  rep.kernel_dim = nb - rank;
  return rep;
}

}  // namespace ymb
