#pragma once

#include <cstddef>
#include <vector>

#include "yamabe/chart.hpp"

namespace ymb {

enum class NodeClass { interior, boundary, edge };  // physical boundary vs artificial edge

/// Structured tensor-product grid of a chart's box, endpoints included.
struct Grid {
  const Chart* chart = nullptr;
  std::vector<int> dims;       // nodes per axis (>= 2)
  std::vector<double> h;       // spacings
  std::vector<size_t> stride;  // index strides

  Grid() = default;
  Grid(const Chart& ch, const std::vector<int>& dims_per_axis);
  Grid(const Chart& ch, int dim_all);

  int n() const { return chart->n; }
  size_t size() const;
  size_t index(const std::vector<int>& I) const;
  void unpack(size_t id, std::vector<int>& I) const;
  void coords(size_t id, double* x) const;
  void coords_of(const std::vector<int>& I, double* x) const;

  /// Classification: a node on any physical face is `boundary`; else on any
  /// artificial face `edge`; else `interior`.
  NodeClass classify(size_t id) const;

  /// True when node id lies on the given face of the given axis.
  bool on_face(size_t id, int axis, int side) const;

  /// List of node ids lying on physical boundary faces (each id once).
  std::vector<size_t> physical_nodes() const;
};

/// Nodal values, `comps` components per node (1 = scalar).
struct Field {
  const Grid* grid = nullptr;
  int comps = 1;
  std::vector<double> v;

  Field() = default;
  Field(const Grid& g, int comps_ = 1) : grid(&g), comps(comps_), v(g.size() * comps_, 0.0) {}

  double& at(size_t node, int c = 0) { return v[node * comps + c]; }
  double at(size_t node, int c = 0) const { return v[node * comps + c]; }
  size_t nodes() const { return grid->size(); }
};

Field make_field(const Grid& g, const std::function<double(const double*)>& f);

double field_min(const Field& f);
double field_max(const Field& f);

/// Tensor-product cubic interpolation of a scalar field at an off-grid point
/// (Catmull-Rom kernels, clamped to one-sided stencils near the box faces).
double interp_cubic(const Field& f, const double* x);

/// Gradient of the cubic interpolant.
void interp_cubic_grad(const Field& f, const double* x, double* grad);

}  // namespace ymb
