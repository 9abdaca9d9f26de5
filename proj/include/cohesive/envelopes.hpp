#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cohesive/material_law.hpp"

namespace cohesive {

struct EnvelopeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;  // >= 2
  double spacing() const { return (hi - lo) / (count - 1); }
  double node(int i) const { return lo + i * spacing(); }
};

enum class TableKind { Convex, Lamination, Recession };

// Sampled envelope on a tensor grid over the m*n matrix entries (row-major),
// with multilinear interpolation.  Values outside the interior 80% of each
// axis are kept but not certified.
struct EnvelopeTable {
  std::vector<AxisSpec> axes;
  std::vector<double> values;  // row-major over axes
  TableKind kind = TableKind::Convex;
  int depth = 0;
  int m = 1, n = 1;
  double ell = 0.0;
  std::string law_name;
  bool certified = false;   // envelope <= raw values on the interior region
  double interior_fraction = 0.8;

  std::size_t size() const;
  std::size_t flat_index(const std::vector<int>& idx) const;
  bool covers(const std::vector<double>& point) const;
  bool interior(const std::vector<double>& point) const;
  double interp(const std::vector<double>& point) const;  // multilinear
  double interp_matrix(const Matrix& xi) const;           // row-major flatten
};

// Lower convex hull of f sampled on [0, t_max] plus a padded tail; the hull is
// anchored at the sampled recession slope so the bounded window reproduces the
// envelope of f on [0, inf) for asymptotically linear f.
EnvelopeTable convex_envelope_1d(const std::function<double(double)>& f, double t_max,
                                 int samples);

// Convex envelope of law.h over a tensor grid of matrix entries, by the
// per-axis discrete Legendre-Fenchel transform applied twice.  Total grid
// size capped at 1e7 points.
EnvelopeTable convex_envelope_grid(const MaterialLaw& law, const std::vector<AxisSpec>& axes);

// same, for an arbitrary density on the grid (used by cross checks)
EnvelopeTable convex_envelope_grid_fn(const std::function<double(const Matrix&)>& f, int m, int n,
                                      const std::vector<AxisSpec>& axes);

// Iterated rank-one lamination upper bound for the quasiconvex envelope:
// R_0 = h, R_{k+1}(xi) = min over splits xi = la*(xi + (1-la) t a b^T) ... of
// la R_k(xi + (1-la) t a b^T) + (1-la) R_k(xi - la t a b^T).
// Deterministic coordinate-descent search per level over (t, la, a, b) with a
// Nelder-Mead polish; split_budget bounds the direction samples at the top
// level, decaying by 1/8 per recursion level.
double lamination_envelope(const MaterialLaw& law, const Matrix& xi, int depth, int split_budget);

// per-depth values R_0(xi) .. R_depth(xi); nonincreasing by construction
std::vector<double> lamination_profile(const MaterialLaw& law, const Matrix& xi, int depth,
                                       int split_budget);

// lamination evaluated at every grid node (small grids only; cost is per-node)
EnvelopeTable lamination_table(const MaterialLaw& law, const std::vector<AxisSpec>& axes,
                               int depth, int split_budget);

struct RayProbe {
  Matrix direction;            // unit Frobenius norm for CLI-built probes
  std::vector<double> radii;   // increasing, spanning >= 2 decades
  static RayProbe standard(const Matrix& direction);  // radii 1..1e4, 49 log points
  void validate_unit() const;
};

// Least-squares slope of t -> value(t*dir) over the top radius decade, with a
// consistency check against the preceding decade (>5% mismatch -> error).
double recession_slope(const std::function<double(const Matrix&)>& value, const Matrix& direction,
                       const std::vector<double>& radii);
double recession_slope(const std::function<double(const Matrix&)>& value, const RayProbe& probe);

// JSON persistence for tables (self-describing header + values)
void save_table(const EnvelopeTable& table, const std::string& path);
EnvelopeTable load_table(const std::string& path);

}  // namespace cohesive
