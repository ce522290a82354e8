#include "yamabe/grid.hpp"

#include <algorithm>

namespace ymb {

Grid::Grid(const Chart& ch, const std::vector<int>& dims_per_axis) : chart(&ch), dims(dims_per_axis) {
  int n = ch.n;
  if (static_cast<int>(dims.size()) != n) throw NumericsError("Grid: dims size != n");
  h.resize(n);
  stride.resize(n);
  for (int d = 0; d < n; ++d) {
    if (dims[d] < 2) throw NumericsError("Grid: need >= 2 nodes per axis");
    h[d] = (ch.hi[d] - ch.lo[d]) / (dims[d] - 1);
    if (h[d] <= 0) throw NumericsError("Grid: nonpositive spacing");
  }
  size_t s = 1;
  for (int d = n - 1; d >= 0; --d) {
    stride[d] = s;
    s *= dims[d];
  }
}

Grid::Grid(const Chart& ch, int dim_all) : Grid(ch, std::vector<int>(ch.n, dim_all)) {}

size_t Grid::size() const {
  size_t s = 1;
  for (int d : dims) s *= d;
  return s;
}

size_t Grid::index(const std::vector<int>& I) const {
  size_t id = 0;
  for (int d = 0; d < n(); ++d) id += I[d] * stride[d];
  return id;
}

void Grid::unpack(size_t id, std::vector<int>& I) const {
  I.resize(n());
  for (int d = 0; d < n(); ++d) {
    I[d] = static_cast<int>(id / stride[d]);
    id %= stride[d];
  }
}

void Grid::coords(size_t id, double* x) const {
  for (int d = 0; d < n(); ++d) {
    int i = static_cast<int>(id / stride[d]);
    id %= stride[d];
    x[d] = chart->lo[d] + i * h[d];
  }
}

void Grid::coords_of(const std::vector<int>& I, double* x) const {
  for (int d = 0; d < n(); ++d) x[d] = chart->lo[d] + I[d] * h[d];
}

NodeClass Grid::classify(size_t id) const {
  bool edge = false;
  for (int d = 0; d < n(); ++d) {
    int i = static_cast<int>(id / stride[d]);
    id %= stride[d];
    if (i == 0) {
      if (chart->physical_face(d, 0)) return NodeClass::boundary;
      edge = true;
    } else if (i == dims[d] - 1) {
      if (chart->physical_face(d, 1)) return NodeClass::boundary;
      edge = true;
    }
  }
  return edge ? NodeClass::edge : NodeClass::interior;
}

bool Grid::on_face(size_t id, int axis, int side) const {
  int i = static_cast<int>(id / stride[axis] % dims[axis]);
  return side == 0 ? i == 0 : i == dims[axis] - 1;
}

std::vector<size_t> Grid::physical_nodes() const {
  std::vector<size_t> out;
  for (size_t id = 0; id < size(); ++id)
    if (classify(id) == NodeClass::boundary) out.push_back(id);
  return out;
}

Field make_field(const Grid& g, const std::function<double(const double*)>& f) {
  Field out(g);
  std::vector<double> x(g.n());
  for (size_t id = 0; id < g.size(); ++id) {
    g.coords(id, x.data());
    out.v[id] = f(x.data());
  }
  return out;
}

double field_min(const Field& f) { return *std::min_element(f.v.begin(), f.v.end()); }
double field_max(const Field& f) { return *std::max_element(f.v.begin(), f.v.end()); }

// ---- cubic interpolation ----

// Catmull-Rom weights for samples at t = -1,0,1,2, evaluation at s in [0,1].
static void cr_weights(double s, double* w, double* dw) {
  double s2 = s * s, s3 = s2 * s;
  w[0] = 0.5 * (-s3 + 2 * s2 - s);
  w[1] = 0.5 * (3 * s3 - 5 * s2 + 2);
  w[2] = 0.5 * (-3 * s3 + 4 * s2 + s);
  w[3] = 0.5 * (s3 - s2);
  if (dw) {
    dw[0] = 0.5 * (-3 * s2 + 4 * s - 1);
    dw[1] = 0.5 * (9 * s2 - 10 * s);
    dw[2] = 0.5 * (-9 * s2 + 8 * s + 1);
    dw[3] = 0.5 * (3 * s2 - 2 * s);
  }
}

struct AxisStencil {
  int base;       // index of sample associated with weight[1]
  double w[4];
  double dw[4];
};

static AxisStencil axis_stencil(const Grid& g, int d, double xd) {
  AxisStencil st;
  double t = (xd - g.chart->lo[d]) / g.h[d];
  int i = static_cast<int>(std::floor(t));
  i = std::clamp(i, 0, g.dims[d] - 2);
  double s = t - i;
  cr_weights(s, st.w, st.dw);
  st.base = i;
  return st;
}

static int clamp_idx(int i, int m) { return std::clamp(i, 0, m - 1); }

double interp_cubic(const Field& f, const double* x) {
  const Grid& g = *f.grid;
  int n = g.n();
  std::vector<AxisStencil> st(n);
  for (int d = 0; d < n; ++d) st[d] = axis_stencil(g, d, x[d]);
  // iterate over the 4^n stencil
  std::vector<int> k(n, 0);
  double sum = 0;
  while (true) {
    double w = 1;
    size_t id = 0;
    for (int d = 0; d < n; ++d) {
      w *= st[d].w[k[d]];
      id += clamp_idx(st[d].base - 1 + k[d], g.dims[d]) * g.stride[d];
    }
    sum += w * f.v[id];
    int d = n - 1;
    while (d >= 0 && ++k[d] == 4) k[d--] = 0;
    if (d < 0) break;
  }
  return sum;
}

void interp_cubic_grad(const Field& f, const double* x, double* grad) {
  const Grid& g = *f.grid;
  int n = g.n();
  std::vector<AxisStencil> st(n);
  for (int d = 0; d < n; ++d) st[d] = axis_stencil(g, d, x[d]);
  for (int gd = 0; gd < n; ++gd) {
    std::vector<int> k(n, 0);
    double sum = 0;
    while (true) {
      double w = 1;
      size_t id = 0;
      for (int d = 0; d < n; ++d) {
        w *= (d == gd) ? st[d].dw[k[d]] : st[d].w[k[d]];
        id += clamp_idx(st[d].base - 1 + k[d], g.dims[d]) * g.stride[d];
      }
      sum += w * f.v[id];
      int d = n - 1;
      while (d >= 0 && ++k[d] == 4) k[d--] = 0;
      if (d < 0) break;
    }
    grad[gd] = sum / g.h[gd];
  }
}

}  // namespace ymb
