#include "yamabe/blowup.hpp"

#include <Eigen/SparseLU>

namespace ymb {

std::vector<PeakCandidate> detect_peaks(const Field& u, double floor_factor) {
  const Grid& g = *u.grid;
  int n = g.n();
  std::vector<double> sorted = u.v;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  double median = sorted[sorted.size() / 2];
  double floor = floor_factor * std::max(median, 0.0) + 1e-12;

  std::vector<PeakCandidate> out;
  std::vector<int> I(n);
  for (size_t id = 0; id < g.size(); ++id) {
    if (u.v[id] <= floor) continue;
    g.unpack(id, I);
    bool is_max = true;
    for (int d = 0; d < n && is_max; ++d)
      for (int s = -1; s <= 1; s += 2) {
        int j = I[d] + s;
        if (j < 0 || j >= g.dims[d]) continue;
        size_t nb = id + s * static_cast<long>(g.stride[d]);
        if (u.v[nb] >= u.v[id]) is_max = false;
      }
    if (!is_max) continue;
    PeakCandidate c;
    c.x.resize(n);
    g.coords(id, c.x.data());
    c.height = u.v[id];
    // half-height radius along each axis, averaged
    double half = 0.5 * u.v[id];
    double racc = 0;
    int rcnt = 0;
    for (int d = 0; d < n; ++d)
      for (int s = -1; s <= 1; s += 2) {
        for (int j = 1;; ++j) {
          int k = I[d] + s * j;
          if (k < 0 || k >= g.dims[d]) break;
          size_t nb = id + s * j * static_cast<long>(g.stride[d]);
          if (u.v[nb] <= half) {
            racc += j * g.h[d];
            ++rcnt;
            break;
          }
        }
      }
    double rhalf = rcnt ? racc / rcnt : g.h[0];
    c.eps = rhalf / std::sqrt(std::pow(2.0, 2.0 / (n - 2.0)) - 1.0);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const PeakCandidate& a, const PeakCandidate& b) { return a.height > b.height; });
  return out;
}

namespace {

BubbleKind zone_kind(const Chart& ch, const std::vector<double>& x, double delta0) {
  int n = ch.n;
  if (!ch.has_physical()) return BubbleKind::C;
  double depth = x[n - 1] - ch.lo[n - 1];
  if (depth < 1e-12) return BubbleKind::A;
  if (depth <= 1.5 * delta0) return BubbleKind::B;  // boundary-aware tie-break
  return BubbleKind::C;
}

Field sample_tf(const Grid& g, const TestFunction& tf, const std::vector<double>& c,
                int mode /*0=value,1..n=dcenter,n+1=dlogeps*/) {
  int n = g.n();
  Field out(g);
  std::vector<double> x(n), y(n), buf(n);
  for (size_t id = 0; id < g.size(); ++id) {
    g.coords(id, x.data());
    for (int d = 0; d < n; ++d) y[d] = x[d] - c[d];
    if (mode == 0) {
      out.v[id] = tf.value(y.data());
    } else if (mode <= n) {
      tf.dvalue_dcenter(y.data(), buf.data());
      out.v[id] = buf[mode - 1];
    } else {
      out.v[id] = tf.eps * tf.dvalue_deps(y.data());
    }
  }
  return out;
}

double form(const ConformalOperator& op, const Field& a, const Field& b) {
  return op.energy_product(a, b);
}

}  // namespace

BubbleFit fit_bubbles(const ConformalOperator& op, const Field& u, int m,
                      const std::vector<PeakCandidate>& init, const FitOptions& opt) {
  if (m < 1 || static_cast<int>(init.size()) < m)
    throw NumericsError("fit_bubbles: need m >= 1 initial candidates");
  const Grid& g = op.grid();
  const Chart& ch = op.chart();
  int n = g.n();

  std::vector<BubbleParams> prm(m);
  std::vector<PeakCandidate> box(m);
  for (int k = 0; k < m; ++k) {
    prm[k].x = init[k].x;
    // the admissible scale window [eps/2, 2 eps] must respect the glue constraint
    prm[k].eps = std::min(init[k].eps, 0.2 * opt.rho);
    prm[k].alpha = 1.0;
    prm[k].kind = zone_kind(ch, prm[k].x, opt.delta0);
    box[k] = init[k];
    box[k].eps = prm[k].eps;
  }

  BubbleFit out;
  auto model_fields = [&](std::vector<Field>& vals) {
    vals.clear();
    for (int k = 0; k < m; ++k) {
      TestFunction tf = make_test_function(n, prm[k].kind, prm[k].eps, opt.rho,
                                           prm[k].x[n - 1] - ch.lo[n - 1], opt.rbar_inf);
      vals.push_back(sample_tf(g, tf, prm[k].x, 0));
    }
  };

  auto objective = [&](const std::vector<Field>& vals, const std::vector<double>& alpha) {
    Field w(g);
    for (size_t i = 0; i < g.size(); ++i) {
      double s = u.v[i];
      for (int k = 0; k < m; ++k) s -= alpha[k] * vals[k].v[i];
      w.v[i] = s;
    }
    return std::make_pair(form(op, w, w), std::move(w));
  };

  auto solve_alpha = [&](const std::vector<Field>& vals, bool* projected) {
    Eigen::MatrixXd G(m, m);
    Eigen::VectorXd rhs(m);
    for (int k = 0; k < m; ++k) {
      rhs[k] = form(op, vals[k], u);
      for (int l = k; l < m; ++l) {
        G(k, l) = form(op, vals[k], vals[l]);
        G(l, k) = G(k, l);
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    out.rank_deficient = out.rank_deficient || lu.rank() < m;
    Eigen::VectorXd a = lu.solve(rhs);
    std::vector<double> alpha(m);
    for (int k = 0; k < m; ++k) {
      alpha[k] = a[k];
      if (alpha[k] < 0.5 || alpha[k] > 2.0) {
        alpha[k] = std::clamp(alpha[k], 0.5, 2.0);
        *projected = true;
      }
    }
    return alpha;
  };

  std::vector<Field> vals;
  model_fields(vals);
  bool proj = false;
  std::vector<double> alpha = solve_alpha(vals, &proj);
  auto [J, w0] = objective(vals, alpha);
  out.init_energy = J;
  Field w = std::move(w0);

  int npar = m * (n + 1);  // center shifts + log eps per bubble
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    // Jacobian of the residual w.r.t. parameters: -alpha_k d(ubar_k)
    std::vector<Field> cols;
    cols.reserve(npar);
    for (int k = 0; k < m; ++k) {
      TestFunction tf = make_test_function(n, prm[k].kind, prm[k].eps, opt.rho,
                                           prm[k].x[n - 1] - ch.lo[n - 1], opt.rbar_inf);
      for (int d = 1; d <= n + 1; ++d) {
        Field col = sample_tf(g, tf, prm[k].x, d);
        for (auto& v : col.v) v *= -alpha[k];
        cols.push_back(std::move(col));
      }
    }
    Eigen::MatrixXd JtJ(npar, npar);
    Eigen::VectorXd Jtw(npar);
    for (int p = 0; p < npar; ++p) {
      Jtw[p] = form(op, cols[p], w);
      for (int q = p; q < npar; ++q) {
        JtJ(p, q) = form(op, cols[p], cols[q]);
        JtJ(q, p) = JtJ(p, q);
      }
    }
    double lm = 1e-12 * (JtJ.trace() / npar + 1e-300);
    Eigen::VectorXd step = (JtJ + lm * Eigen::MatrixXd::Identity(npar, npar)).ldlt().solve(-Jtw);

    // line search with box projection
    double t = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 25; ++bt) {
      auto cand = prm;
      for (int k = 0; k < m; ++k) {
        for (int d = 0; d < n; ++d) cand[k].x[d] = prm[k].x[d] + t * step[k * (n + 1) + d];
        cand[k].eps = prm[k].eps * std::exp(t * step[k * (n + 1) + n]);
        // admissible box: centers stay within eps* of the initialization, scales in [1/2, 2]
        double shift2 = 0;
        for (int d = 0; d < n; ++d) {
          double dd = cand[k].x[d] - box[k].x[d];
          shift2 += dd * dd;
        }
        double hmax = *std::max_element(g.h.begin(), g.h.end());
        double lim = std::max(box[k].eps, 2.0 * hmax);
        if (shift2 > lim * lim) {
          double sc = lim / std::sqrt(shift2);
          for (int d = 0; d < n; ++d)
            cand[k].x[d] = box[k].x[d] + sc * (cand[k].x[d] - box[k].x[d]);
          proj = true;
        }
        double ratio = cand[k].eps / box[k].eps;
        if (ratio < 0.5 || ratio > 2.0) {
          cand[k].eps = box[k].eps * std::clamp(ratio, 0.5, 2.0);
          proj = true;
        }
        if (cand[k].kind == BubbleKind::A) cand[k].x[n - 1] = ch.lo[n - 1];
      }
      auto saved = prm;
      prm = cand;
      std::vector<Field> vals2;
      model_fields(vals2);
      bool proj2 = false;
      auto alpha2 = solve_alpha(vals2, &proj2);
      auto [J2, w2] = objective(vals2, alpha2);
      if (J2 < J) {
        J = J2;
        w = std::move(w2);
        vals = std::move(vals2);
        alpha = alpha2;
        proj = proj || proj2;
        improved = true;
        break;
      }
      prm = saved;
      t *= 0.5;
    }
    if (!improved || step.norm() * t < 1e-14) break;
  }

  out.bubbles = prm;
  for (int k = 0; k < m; ++k) out.bubbles[k].alpha = alpha[k];
  out.w = std::move(w);
  out.w_energy = J;
  out.fit_energy = J;
  out.projected = proj;

  // separation functional over pairs
  out.separation = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double d2 = 0;
      for (int d = 0; d < n; ++d) {
        double dd = out.bubbles[i].x[d] - out.bubbles[j].x[d];
        d2 += dd * dd;
      }
      double ei = out.bubbles[i].eps, ej = out.bubbles[j].eps;
      out.separation = std::min(out.separation, ei / ej + ej / ei + d2 / (ei * ej));
    }

  // residual norms
  double p_int = 2.0 * n / (n - 2.0), p_bd = 2.0 * (n - 1.0) / (n - 2.0);
  const auto& wq = op.weights();
  double si = 0;
  for (size_t i = 0; i < g.size(); ++i) si += wq[i] * std::pow(std::abs(out.w.v[i]), p_int);
  out.cnu_interior = std::pow(si, 1.0 / p_int);
  double sb = 0;
  std::vector<int> I(n);
  std::vector<double> x(n);
  for (auto& be : op.boundary_entries()) {
    g.unpack(be.node, I);
    double wgt = 1;
    for (int d = 0; d < n; ++d)
      if (d != be.axis)
        wgt *= (I[d] == 0 || I[d] == g.dims[d] - 1) ? 0.5 * g.h[d] : g.h[d];
    g.coords_of(I, x.data());
    wgt *= std::pow(ch.cfac(x.data()), 0.5 * (n - 1));
    sb += wgt * std::pow(std::abs(out.w.v[be.node]), p_bd);
  }
  out.cnu_boundary = std::pow(sb, 1.0 / p_bd);
  return out;
}

SplitReport split_vw(const ConformalOperator& op, const BubbleFit& fit, const Field& u,
                     const FitOptions& opt) {
  const Grid& g = op.grid();
  const Chart& ch = op.chart();
  int n = g.n();
  SplitReport rep;
  rep.v = Field(g);
  std::vector<double> Eks;
  for (auto& b : fit.bubbles) {
    TestFunction tf =
        make_test_function(n, b.kind, b.eps, opt.rho, b.x[n - 1] - ch.lo[n - 1], opt.rbar_inf);
    Field f = sample_tf(g, tf, b.x, 0);
    Eks.push_back(energy(op, f).E);
    for (size_t i = 0; i < g.size(); ++i) rep.v.v[i] += b.alpha * f.v[i];
  }
  rep.w = Field(g);
  for (size_t i = 0; i < g.size(); ++i) rep.w.v[i] = u.v[i] - rep.v.v[i];
  rep.Ev = energy(op, rep.v).E;
  double s = 0;
  for (double e : Eks) s += std::pow(std::max(e, 0.0), 0.5 * n);
  rep.bound = std::pow(s, 2.0 / n);
  rep.within_bound = rep.Ev <= rep.bound * (1.0 + 1e-8) + 1e-12;
  rep.cnu_boundary = fit.cnu_boundary;
  rep.cnu_interior = fit.cnu_interior;
  return rep;
}

std::vector<EigenPair> linearized_eigenbasis(const ConformalOperator& op, const Field& u_inf,
                                             int count, double tol) {
  size_t N = op.size();
  int n = op.n();
  for (size_t i = 0; i < N; ++i)
    if (!(u_inf.v[i] > 0)) throw PositivityError("eigenbasis: u_inf must be positive", i);
  if (count <= 0 || static_cast<size_t>(count) >= N)
    throw NumericsError("eigenbasis: count exceeds the grid rank");
  const auto& wq = op.weights();
  std::vector<double> B(N);
  for (size_t i = 0; i < N; ++i) B[i] = wq[i] * std::pow(u_inf.v[i], 4.0 / (n - 2.0));
  auto applyA = [&](const double* v, double* outp) {
    op.apply_lap(v, outp);
    const auto& R0 = op.scalar_curv();
    double a = op.aL();
    for (size_t i = 0; i < N; ++i) outp[i] = wq[i] * (-a * outp[i] + op.cR() * R0[i] * v[i]);
  };
  auto pairs = smallest_eigenpairs(applyA, B, N, count, 400, tol, 321);
  return pairs;
}

std::vector<int> low_mode_set(const std::vector<EigenPair>& modes, int n, double rbar_inf) {
  if (rbar_inf <= 0) rbar_inf = 4.0 * n * (n - 1.0);
  double thresh = (n + 2.0) / (n - 2.0) * rbar_inf;
  std::vector<int> A;
  for (size_t a = 0; a < modes.size(); ++a)
    if (!(modes[a].lambda > thresh)) A.push_back(static_cast<int>(a));
  return A;
}

UzResult solve_uz(const ConformalOperator& op, const Field& u_inf,
                  const std::vector<EigenPair>& modes, const std::vector<int>& low_set,
                  const std::vector<double>& z, const UzOptions& opt) {
  size_t N = op.size();
  int n = op.n();
  int m = static_cast<int>(low_set.size());
  if (static_cast<int>(z.size()) != m) throw NumericsError("solve_uz: z size mismatch");
  double znorm = 0;
  for (double v : z) znorm += v * v;
  if (std::sqrt(znorm) > opt.trust_radius)
    throw NumericsError("solve_uz: |z| exceeds the trust radius");
  double rbar = opt.rbar_inf > 0 ? opt.rbar_inf : 4.0 * n * (n - 1.0);
  double Nx = (n + 2.0) / (n - 2.0);
  double a = op.aL();
  const auto& R0 = op.scalar_curv();
  const auto& wq = op.weights();
  std::vector<double> wgt(N);  // u_inf^{4/(n-2)}
  for (size_t i = 0; i < N; ++i) wgt[i] = std::pow(u_inf.v[i], 4.0 / (n - 2.0));

  auto Nres = [&](const Field& u, std::vector<double>& r) {
    r.resize(N);
    std::vector<double> lap(N);
    op.apply_lap(u.v.data(), lap.data());
    for (size_t i = 0; i < N; ++i)
      r[i] = a * lap[i] - R0[i] * u.v[i] +
             rbar * std::pow(std::abs(u.v[i]), Nx) * (u.v[i] >= 0 ? 1.0 : -1.0);
  };

  // initial guess along the low modes
  Field u(op.grid());
  for (size_t i = 0; i < N; ++i) {
    double s = u_inf.v[i];
    for (int k = 0; k < m; ++k) s += z[k] * modes[low_set[k]].vec[i];
    u.v[i] = s;
  }
  std::vector<double> c(m, 0.0);

  UzResult out;
  for (int it = 0; it < opt.max_newton; ++it) {
    std::vector<double> r;
    Nres(u, r);
    // KKT residuals
    Eigen::VectorXd F(N + m);
    for (size_t i = 0; i < N; ++i) {
      double s = r[i];
      for (int k = 0; k < m; ++k) s -= c[k] * modes[low_set[k]].vec[i] * wgt[i];
      F[i] = wq[i] * s;
    }
    for (int k = 0; k < m; ++k) {
      double s = 0;
      for (size_t i = 0; i < N; ++i)
        s += wq[i] * wgt[i] * (u.v[i] - u_inf.v[i]) * modes[low_set[k]].vec[i];
      F[N + k] = s - z[k];
    }
    double fn = F.norm();
    if (fn < 1e-12 * std::sqrt(static_cast<double>(N))) break;

    // assemble the sparse KKT matrix
    std::vector<Eigen::Triplet<double>> trip;
    const auto& lap = op.lap_matrix();
    for (int row = 0; row < lap.outerSize(); ++row)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itl(lap, row); itl;
           ++itl)
        trip.emplace_back(row, static_cast<int>(itl.col()), wq[row] * a * itl.value());
    for (size_t i = 0; i < N; ++i) {
      double dn = -R0[i] + rbar * Nx * std::pow(std::abs(u.v[i]), Nx - 1.0);
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i), wq[i] * dn);
    }
    for (int k = 0; k < m; ++k)
      for (size_t i = 0; i < N; ++i) {
        double v = wq[i] * wgt[i] * modes[low_set[k]].vec[i];
        trip.emplace_back(static_cast<int>(i), static_cast<int>(N + k), -v);
        trip.emplace_back(static_cast<int>(N + k), static_cast<int>(i), v);
      }
    Eigen::SparseMatrix<double> Kkt(static_cast<int>(N + m), static_cast<int>(N + m));
    Kkt.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Kkt);
    if (lu.info() != Eigen::Success) throw NumericsError("solve_uz: KKT factorization failed");
    Eigen::VectorXd step = lu.solve(-F);
    double tstep = 1.0;
    for (int bt = 0; bt < 30; ++bt) {
      Field ucand = u;
      std::vector<double> ccand = c;
      for (size_t i = 0; i < N; ++i) ucand.v[i] += tstep * step[i];
      for (int k = 0; k < m; ++k) ccand[k] += tstep * step[N + k];
      // evaluate candidate residual
      std::vector<double> rc;
      Nres(ucand, rc);
      Eigen::VectorXd Fc(N + m);
      for (size_t i = 0; i < N; ++i) {
        double s = rc[i];
        for (int k = 0; k < m; ++k) s -= ccand[k] * modes[low_set[k]].vec[i] * wgt[i];
        Fc[i] = wq[i] * s;
      }
      for (int k = 0; k < m; ++k) {
        double s = 0;
        for (size_t i = 0; i < N; ++i)
          s += wq[i] * wgt[i] * (ucand.v[i] - u_inf.v[i]) * modes[low_set[k]].vec[i];
        Fc[N + k] = s - z[k];
      }
      if (Fc.norm() < fn || tstep < 1e-8) {
        u = std::move(ucand);
        c = ccand;
        break;
      }
      tstep *= 0.5;
    }
    if (it == opt.max_newton - 1) {
      out.u = u;
      out.multipliers = c;
      out.converged = false;
      throw NumericsError("solve_uz: Newton failed to converge inside the trust radius");
    }
  }

  // final residual diagnostics
  std::vector<double> r;
  Nres(u, r);
  // projected residual: subtract the low-mode weighted components
  std::vector<double> proj = r;
  for (size_t arow = 0; arow < modes.size(); ++arow) {
    bool in_low = false;
    for (int k : low_set)
      if (static_cast<size_t>(k) == arow) in_low = true;
    if (!in_low) continue;
    double comp = 0;
    for (size_t i = 0; i < N; ++i) comp += wq[i] * modes[arow].vec[i] * r[i];
    for (size_t i = 0; i < N; ++i) proj[i] -= comp * modes[arow].vec[i] * wgt[i];
  }
  double sup = 0;
  for (size_t i = 0; i < N; ++i) sup = std::max(sup, std::abs(proj[i]));
  out.eq_residual_sup = sup;
  double cr = 0;
  for (int k = 0; k < m; ++k) {
    double s = 0;
    for (size_t i = 0; i < N; ++i)
      s += wq[i] * wgt[i] * (u.v[i] - u_inf.v[i]) * modes[low_set[k]].vec[i];
    cr = std::max(cr, std::abs(s - z[k]));
  }
  out.constraint_residual = cr;
  out.u = std::move(u);
  out.multipliers = c;
  out.converged = true;
  return out;
}

void write_fit_csv(const std::string& path, const BubbleFit& fit) {
  int n = fit.bubbles.empty() ? 0 : static_cast<int>(fit.bubbles.front().x.size());
  std::vector<std::string> hdr = {"kind(A|B|C)"};
  for (int d = 0; d < n; ++d) hdr.push_back("x" + std::to_string(d + 1) + "(length)");
  hdr.push_back("eps(length)");
  hdr.push_back("alpha(dimensionless)");
  hdr.push_back("w_energy(R-units)");
  hdr.push_back("cnu_boundary(norm)");
  hdr.push_back("cnu_interior(norm)");
  CsvWriter csv(path, hdr);
  for (auto& b : fit.bubbles) {
    std::vector<std::string> row;
    row.push_back(b.kind == BubbleKind::A ? "A" : (b.kind == BubbleKind::B ? "B" : "C"));
    for (int d = 0; d < n; ++d) row.push_back(format_g17(b.x[d]));
    row.push_back(format_g17(b.eps));
    row.push_back(format_g17(b.alpha));
    row.push_back(format_g17(fit.w_energy));
    row.push_back(format_g17(fit.cnu_boundary));
    row.push_back(format_g17(fit.cnu_interior));
    csv.row_mixed(row);
  }
}

}  // namespace ymb
