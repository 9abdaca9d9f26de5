#include <cohesive/phasefield.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cohesive {

namespace {

struct CellGeom {
  int dim = 1;
  int nc = 2;  // corners per cell
  double vol = 0;
  int ncells = 0;
  double sten[2][4] = {};  // gradient stencil coefficient per axis per corner
};

CellGeom build_geom(const GridSpec& g) {
  CellGeom c;
  c.dim = g.dim;
  if (g.dim == 1) {
    const double h = g.spacing(0);
    c.nc = 2;
    c.vol = h;
    c.ncells = g.nodes[0] - 1;
    c.sten[0][0] = -1.0 / h;
    c.sten[0][1] = 1.0 / h;
  } else {
    const double hx = g.spacing(0), hy = g.spacing(1);
    c.nc = 4;
    c.vol = hx * hy;
    c.ncells = (g.nodes[0] - 1) * (g.nodes[1] - 1);
    // corners ordered 00, 10, 01, 11; one-point quadrature at the center
    const double ax = 0.5 / hx, ay = 0.5 / hy;
    c.sten[0][0] = -ax; c.sten[0][1] = ax;  c.sten[0][2] = -ax; c.sten[0][3] = ax;
    c.sten[1][0] = -ay; c.sten[1][1] = -ay; c.sten[1][2] = ay;  c.sten[1][3] = ay;
  }
  return c;
}

void cell_corners(const GridSpec& g, int cell, int out[4]) {
  if (g.dim == 1) {
    out[0] = cell;
    out[1] = cell + 1;
  } else {
    const int cy = g.nodes[1] - 1;
    const int cx = cell / cy, iy = cell % cy;
    out[0] = g.index(cx, iy);
    out[1] = g.index(cx + 1, iy);
    out[2] = g.index(cx, iy + 1);
    out[3] = g.index(cx + 1, iy + 1);
  }
}

struct Fe2 {
  double val = 0, d1 = 0, d2 = 0;
  bool capped = false;
};

// min(1, eps f(s)^2) with branch derivatives; s is a cell-averaged v in [0,1]
Fe2 fe2_eval(double s, double eps, double ell) {
  if (s >= damage_threshold(eps, ell)) return {1.0, 0.0, 0.0, true};
  const double c = std::max(s, 0.0);
  const double om = 1.0 - c;
  const double l2 = ell * ell;
  return {eps * l2 * c * c / (om * om), eps * 2.0 * l2 * c / (om * om * om),
          eps * 2.0 * l2 * (1.0 + 2.0 * c) / (om * om * om * om), false};
}

Matrix psi_grad(const MaterialLaw& law, const Matrix& G) {
  switch (law.kind) {
    case PsiKind::EuclideanSquared:
      return 2.0 * G;
    case PsiKind::DistSqRotations: {
      Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const int n = int(G.rows());
      Vector d = Vector::Ones(n);
      if (G.determinant() < 0.0) d[n - 1] = -1.0;
      return 2.0 * (G - svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose());
    }
    case PsiKind::Custom: {
      Matrix out(G.rows(), G.cols());
      const double step = 1e-6 * (1.0 + G.cwiseAbs().maxCoeff());
      Matrix probe = G;
      for (Eigen::Index i = 0; i < G.rows(); ++i)
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
          probe(i, j) = G(i, j) + step;
          const double hi = law.psi(probe);
          probe(i, j) = G(i, j) - step;
          const double lo = law.psi(probe);
          probe(i, j) = G(i, j);
          out(i, j) = (hi - lo) / (2.0 * step);
        }
      return out;
    }
  }
  throw SolverError("unreachable");
}

double node_weight(const GridSpec& g, int node) {
  if (g.dim == 1) {
    const bool edge = (node == 0 || node == g.nodes[0] - 1);
    return g.spacing(0) * (edge ? 0.5 : 1.0);
  }
  const int ix = node / g.nodes[1], iy = node % g.nodes[1];
  const double wx = (ix == 0 || ix == g.nodes[0] - 1) ? 0.5 : 1.0;
  const double wy = (iy == 0 || iy == g.nodes[1] - 1) ? 0.5 : 1.0;
  return g.spacing(0) * g.spacing(1) * wx * wy;
}

void check_dims(const PhaseFieldState& s, const MaterialLaw& law, const GridSpec& g,
                const SolveConfig& cfg) {
  g.validate();
  if (law.n != g.dim) throw SolverError("law gradient width must match the grid dimension");
  const int np = g.node_count();
  if (s.u.rows() != np || s.u.cols() != law.m)
    throw SolverError("displacement field has wrong shape");
  if (s.v.size() != np) throw SolverError("damage field has wrong size");
  if (!(s.eps > 0)) throw SolverError("eps must be positive");
  if (s.v.minCoeff() < -1e-9 || s.v.maxCoeff() > 1.0 + 1e-9)
    throw SolverError("damage field leaves [0,1]");
  if (cfg.fidelity_w) {
    if (cfg.fidelity_w->rows() != np || cfg.fidelity_w->cols() != law.m)
      throw SolverError("fidelity target has wrong shape");
    if (!(cfg.fidelity_q > 1.0)) throw SolverError("fidelity exponent must be > 1");
  }
}

std::vector<int> face_nodes(const GridSpec& g, int axis, bool upper) {
  if (axis < 0 || axis >= g.dim) throw SolverError("clamp axis outside the grid dimension");
  std::vector<int> out;
  if (g.dim == 1) {
    out.push_back(upper ? g.nodes[0] - 1 : 0);
  } else if (axis == 0) {
    const int ix = upper ? g.nodes[0] - 1 : 0;
    for (int iy = 0; iy < g.nodes[1]; ++iy) out.push_back(g.index(ix, iy));
  } else {
    const int iy = upper ? g.nodes[1] - 1 : 0;
    for (int ix = 0; ix < g.nodes[0]; ++ix) out.push_back(g.index(ix, iy));
  }
  return out;
}

void clamp_masks(const GridSpec& g, const SolveConfig& cfg, std::vector<char>& ufix,
                 std::vector<char>& vfix) {
  ufix.assign(g.node_count(), 0);
  vfix.assign(g.node_count(), 0);
  for (const FaceClamp& c : cfg.clamps)
    for (int n : face_nodes(g, c.axis, c.upper)) {
      if (c.u) ufix[n] = 1;
      if (c.v) vfix[n] = 1;
    }
}

// preconditioned CG on either Vector or Matrix unknowns
template <class Field, class Apply, class Precond>
int pcg(const Apply& apply, const Precond& precond, const Field& b, Field& x, double tol,
        int cap, const char* what) {
  auto dot = [](const Field& a, const Field& c) { return (a.array() * c.array()).sum(); };
  x = Field::Zero(b.rows(), b.cols());
  Field r = b;
  Field z = precond(r);
  Field p = z;
  double rz = dot(r, z);
  const double target = tol * (1.0 + std::sqrt(dot(b, b)));
  int it = 0;
  while (true) {
    const double res = std::sqrt(dot(r, r));
    if (res <= target) return it;
    if (it >= cap) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: CG stalled after %d iterations, residual %.3e",
                    what, it, res);
      throw SolverError(buf);
    }
    Field ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0)) throw SolverError("CG hit a nonpositive curvature direction");
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    z = precond(r);
    const double rz2 = dot(r, z);
    p = z + (rz2 / rz) * p;
    rz = rz2;
    ++it;
  }
}

}  // namespace

GridSpec GridSpec::line(double length, int n) {
  GridSpec g;
  g.dim = 1;
  g.extent = {length, 1.0};
  g.nodes = {n, 1};
  g.validate();
  return g;
}

GridSpec GridSpec::box(double lx, double ly, int nx, int ny) {
  GridSpec g;
  g.dim = 2;
  g.extent = {lx, ly};
  g.nodes = {nx, ny};
  g.validate();
  return g;
}

double GridSpec::spacing(int axis) const { return extent[axis] / (nodes[axis] - 1); }

int GridSpec::node_count() const { return dim == 1 ? nodes[0] : nodes[0] * nodes[1]; }

int GridSpec::cell_count() const {
  return dim == 1 ? nodes[0] - 1 : (nodes[0] - 1) * (nodes[1] - 1);
}

int GridSpec::index(int ix, int iy) const { return dim == 1 ? ix : ix * nodes[1] + iy; }

void GridSpec::validate() const {
  if (dim != 1 && dim != 2) throw SolverError("grid dimension must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (nodes[a] < 3) throw SolverError("need at least 3 nodes per axis");
    if (!(extent[a] > 0)) throw SolverError("extent must be positive");
  }
}

double SolveConfig::eta(double eps) const {
  const double v = eta_rule ? eta_rule(eps) : std::pow(eps, 1.5);
  if (!(v >= 0)) throw SolverError("eta rule produced a negative value");
  if (!(v < eps)) throw SolverError("eta rule must satisfy eta < eps");
  return v;
}

PhaseFieldState make_state(const GridSpec& grid, int m, double eps) {
  grid.validate();
  PhaseFieldState s;
  s.u = Matrix::Zero(grid.node_count(), m);
  s.v = Vector::Ones(grid.node_count());
  s.eps = eps;
  return s;
}

void apply_clamps(PhaseFieldState& state, const GridSpec& grid, const SolveConfig& cfg) {
  for (const FaceClamp& c : cfg.clamps) {
    if (c.u && c.u->size() != state.u.cols())
      throw SolverError("clamp value size must match the displacement components");
    for (int n : face_nodes(grid, c.axis, c.upper)) {
      if (c.u) state.u.row(n) = c.u->transpose();
      if (c.v) state.v[n] = *c.v;
    }
  }
}

EnergyParts assemble_energy(PhaseFieldState& state, const MaterialLaw& law,
                            const GridSpec& grid, const SolveConfig& cfg) {
  check_dims(state, law, grid, cfg);
  const CellGeom geom = build_geom(grid);
  const double eps = state.eps;
  const double eta = cfg.eta(eps);
  EnergyParts parts;
  int cn[4];
  Matrix G(law.m, grid.dim);
  for (int cell = 0; cell < geom.ncells; ++cell) {
    cell_corners(grid, cell, cn);
    G.setZero();
    double vbar = 0;
    double dv[2] = {0, 0};
    for (int c = 0; c < geom.nc; ++c) {
      vbar += state.v[cn[c]];
      for (int d = 0; d < grid.dim; ++d) {
        G.col(d).noalias() += geom.sten[d][c] * state.u.row(cn[c]).transpose();
        dv[d] += geom.sten[d][c] * state.v[cn[c]];
      }
    }
    vbar /= geom.nc;
    const double P = law.psi(G);
    parts.elastic += fe2_eval(vbar, eps, law.ell).val * P * geom.vol;
    parts.regularization += eta * P * geom.vol;
    parts.damage_local += (1.0 - vbar) * (1.0 - vbar) / (4.0 * eps) * geom.vol;
    double g2 = 0;
    for (int d = 0; d < grid.dim; ++d) g2 += dv[d] * dv[d];
    parts.damage_gradient += eps * g2 * geom.vol;
  }
  if (cfg.fidelity_w) {
    const double q = cfg.fidelity_q;
    for (int i = 0; i < grid.node_count(); ++i) {
      const double r = (state.u.row(i) - cfg.fidelity_w->row(i)).norm();
      parts.fidelity += node_weight(grid, i) * std::pow(r, q);
    }
  }
  const struct {
    const char* name;
    double val;
  } checks[] = {{"elastic", parts.elastic},
                {"damage_local", parts.damage_local},
                {"damage_gradient", parts.damage_gradient},
                {"regularization", parts.regularization},
                {"fidelity", parts.fidelity}};
  for (const auto& c : checks)
    if (!std::isfinite(c.val))
      throw SolverError(std::string("energy part is not finite: ") + c.name);
  state.parts = parts;
  return parts;
}

void assemble_gradient(const PhaseFieldState& state, const MaterialLaw& law,
                       const GridSpec& grid, const SolveConfig& cfg, Matrix& grad_u,
                       Vector& grad_v) {
  check_dims(state, law, grid, cfg);
  const CellGeom geom = build_geom(grid);
  const double eps = state.eps;
  const double eta = cfg.eta(eps);
  grad_u = Matrix::Zero(state.u.rows(), state.u.cols());
  grad_v = Vector::Zero(state.v.size());
  int cn[4];
  Matrix G(law.m, grid.dim);
  for (int cell = 0; cell < geom.ncells; ++cell) {
    cell_corners(grid, cell, cn);
    G.setZero();
    double vbar = 0;
    double dv[2] = {0, 0};
    for (int c = 0; c < geom.nc; ++c) {
      vbar += state.v[cn[c]];
      for (int d = 0; d < grid.dim; ++d) {
        G.col(d).noalias() += geom.sten[d][c] * state.u.row(cn[c]).transpose();
        dv[d] += geom.sten[d][c] * state.v[cn[c]];
      }
    }
    vbar /= geom.nc;
    const Fe2 f = fe2_eval(vbar, eps, law.ell);
    const double P = law.psi(G);
    const Matrix dP = psi_grad(law, G);
    const double ce = (f.val + eta) * geom.vol;
    const double gv_share =
        (f.d1 * P - (1.0 - vbar) / (2.0 * eps)) * geom.vol / geom.nc;
    for (int c = 0; c < geom.nc; ++c) {
      for (int d = 0; d < grid.dim; ++d) {
        grad_u.row(cn[c]).noalias() += (ce * geom.sten[d][c]) * dP.col(d).transpose();
        grad_v[cn[c]] += 2.0 * eps * geom.vol * dv[d] * geom.sten[d][c];
      }
      grad_v[cn[c]] += gv_share;
    }
  }
  if (cfg.fidelity_w) {
    const double q = cfg.fidelity_q;
    for (int i = 0; i < grid.node_count(); ++i) {
      const Vector r = (state.u.row(i) - cfg.fidelity_w->row(i)).transpose();
      const double nrm = r.norm();
      if (nrm > 0)
        grad_u.row(i).noalias() +=
            (node_weight(grid, i) * q * std::pow(nrm, q - 2.0)) * r.transpose();
    }
  }
}

void minimize_u(PhaseFieldState& state, const MaterialLaw& law, const GridSpec& grid,
                const SolveConfig& cfg) {
  check_dims(state, law, grid, cfg);
  apply_clamps(state, grid, cfg);
  const int np = grid.node_count();
  std::vector<char> ufix, vfix;
  clamp_masks(grid, cfg, ufix, vfix);

  if (law.kind == PsiKind::EuclideanSquared) {
    if (cfg.fidelity_w && cfg.fidelity_q != 2.0)
      throw SolverError("the linear displacement solve needs fidelity exponent 2");
    const CellGeom geom = build_geom(grid);
    const double eta = cfg.eta(state.eps);
    Vector ce(geom.ncells);
    int cn[4];
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cn);
      double vbar = 0;
      for (int c = 0; c < geom.nc; ++c) vbar += state.v[cn[c]];
      ce[cell] = fe2_eval(vbar / geom.nc, state.eps, law.ell).val + eta;
    }
    Matrix gu;
    Vector gv;
    assemble_gradient(state, law, grid, cfg, gu, gv);
    for (int i = 0; i < np; ++i)
      if (ufix[i]) gu.row(i).setZero();

    auto apply = [&](const Matrix& xin) {
      Matrix x = xin;
      for (int i = 0; i < np; ++i)
        if (ufix[i]) x.row(i).setZero();
      Matrix y = Matrix::Zero(np, law.m);
      Matrix Gx(law.m, grid.dim);
      int cc[4];
      for (int cell = 0; cell < geom.ncells; ++cell) {
        cell_corners(grid, cell, cc);
        Gx.setZero();
        for (int c = 0; c < geom.nc; ++c)
          for (int d = 0; d < grid.dim; ++d)
            Gx.col(d).noalias() += geom.sten[d][c] * x.row(cc[c]).transpose();
        const double w = 2.0 * ce[cell] * geom.vol;
        for (int c = 0; c < geom.nc; ++c)
          for (int d = 0; d < grid.dim; ++d)
            y.row(cc[c]).noalias() += (w * geom.sten[d][c]) * Gx.col(d).transpose();
      }
      if (cfg.fidelity_w)
        for (int i = 0; i < np; ++i) y.row(i).noalias() += 2.0 * node_weight(grid, i) * x.row(i);
      for (int i = 0; i < np; ++i)
        if (ufix[i]) y.row(i).setZero();
      return y;
    };

    Vector diag = Vector::Zero(np);
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cn);
      for (int c = 0; c < geom.nc; ++c) {
        double s = 0;
        for (int d = 0; d < grid.dim; ++d) s += geom.sten[d][c] * geom.sten[d][c];
        diag[cn[c]] += 2.0 * ce[cell] * geom.vol * s;
      }
    }
    if (cfg.fidelity_w)
      for (int i = 0; i < np; ++i) diag[i] += 2.0 * node_weight(grid, i);
    for (int i = 0; i < np; ++i)
      if (ufix[i] || diag[i] <= 0) diag[i] = 1.0;
    auto precond = [&](const Matrix& r) { return diag.cwiseInverse().asDiagonal() * r; };

    Matrix delta;
    pcg(apply, precond, Matrix(-gu), delta, 1e-10, 10 * np, "displacement solve");
    state.u += delta;
    apply_clamps(state, grid, cfg);  // keep clamped rows bitwise
    assemble_energy(state, law, grid, cfg);
    return;
  }

  if (law.kind != PsiKind::DistSqRotations)
    throw SolverError("displacement solve supports euclidean and rotation-distance laws");

  // smooth nonquadratic branch: Armijo gradient descent, fixed step budget
  double energy = assemble_energy(state, law, grid, cfg).total();
  double tau = 1.0;
  Matrix gu;
  Vector gv;
  for (int step = 0; step < 200; ++step) {
    assemble_gradient(state, law, grid, cfg, gu, gv);
    for (int i = 0; i < np; ++i)
      if (ufix[i]) gu.row(i).setZero();
    const double gn2 = gu.squaredNorm();
    if (gn2 < 1e-24) break;
    bool accepted = false;
    PhaseFieldState trial = state;
    for (int bt = 0; bt < 40; ++bt, tau *= 0.5) {
      trial.u = state.u - tau * gu;
      const double et = assemble_energy(trial, law, grid, cfg).total();
      if (et <= energy - 1e-4 * tau * gn2) {
        state.u.swap(trial.u);
        energy = et;
        accepted = true;
        tau *= 2.0;
        break;
      }
    }
    if (!accepted) break;
  }
  assemble_energy(state, law, grid, cfg);
}

void minimize_v(PhaseFieldState& state, const MaterialLaw& law, const GridSpec& grid,
                const SolveConfig& cfg) {
  check_dims(state, law, grid, cfg);
  apply_clamps(state, grid, cfg);
  const int np = grid.node_count();
  const double eps = state.eps;
  std::vector<char> ufix, vfix;
  clamp_masks(grid, cfg, ufix, vfix);
  const CellGeom geom = build_geom(grid);

  Vector P(geom.ncells);
  int cn[4];
  {
    Matrix G(law.m, grid.dim);
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cn);
      G.setZero();
      for (int c = 0; c < geom.nc; ++c)
        for (int d = 0; d < grid.dim; ++d)
          G.col(d).noalias() += geom.sten[d][c] * state.u.row(cn[c]).transpose();
      P[cell] = law.psi(G);
    }
  }

  // only the v-dependent terms matter inside the line search
  auto venergy = [&](const Vector& v) {
    double e = 0;
    int cc[4];
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cc);
      double vbar = 0;
      double dv[2] = {0, 0};
      for (int c = 0; c < geom.nc; ++c) {
        vbar += v[cc[c]];
        for (int d = 0; d < grid.dim; ++d) dv[d] += geom.sten[d][c] * v[cc[c]];
      }
      vbar /= geom.nc;
      double g2 = 0;
      for (int d = 0; d < grid.dim; ++d) g2 += dv[d] * dv[d];
      e += (fe2_eval(vbar, eps, law.ell).val * P[cell] +
            (1.0 - vbar) * (1.0 - vbar) / (4.0 * eps) + eps * g2) *
           geom.vol;
    }
    return e;
  };

  double energy = venergy(state.v);
  Vector grad(np), hcell(geom.ncells);
  std::vector<char> fixed(np);
  for (int iter = 0; iter < 50; ++iter) {
    grad.setZero();
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cn);
      double vbar = 0;
      double dv[2] = {0, 0};
      for (int c = 0; c < geom.nc; ++c) {
        vbar += state.v[cn[c]];
        for (int d = 0; d < grid.dim; ++d) dv[d] += geom.sten[d][c] * state.v[cn[c]];
      }
      vbar /= geom.nc;
      const Fe2 f = fe2_eval(vbar, eps, law.ell);
      hcell[cell] = (f.d2 * P[cell] + 1.0 / (2.0 * eps)) * geom.vol;
      const double share =
          (f.d1 * P[cell] - (1.0 - vbar) / (2.0 * eps)) * geom.vol / geom.nc;
      for (int c = 0; c < geom.nc; ++c) {
        grad[cn[c]] += share;
        for (int d = 0; d < grid.dim; ++d)
          grad[cn[c]] += 2.0 * eps * geom.vol * dv[d] * geom.sten[d][c];
      }
    }
    double gmax = 0;
    for (int i = 0; i < np; ++i) {
      fixed[i] = vfix[i] || (state.v[i] <= 0.0 && grad[i] > 0.0) ||
                 (state.v[i] >= 1.0 && grad[i] < 0.0);
      if (!fixed[i]) gmax = std::max(gmax, std::abs(grad[i]));
    }
    if (gmax < 1e-11 * (1.0 + std::abs(energy))) break;

    auto apply = [&](const Vector& xin) {
      Vector x = xin;
      for (int i = 0; i < np; ++i)
        if (fixed[i]) x[i] = 0.0;
      Vector y = Vector::Zero(np);
      int cc[4];
      for (int cell = 0; cell < geom.ncells; ++cell) {
        cell_corners(grid, cell, cc);
        double vbarx = 0;
        double dvx[2] = {0, 0};
        for (int c = 0; c < geom.nc; ++c) {
          vbarx += x[cc[c]];
          for (int d = 0; d < grid.dim; ++d) dvx[d] += geom.sten[d][c] * x[cc[c]];
        }
        vbarx /= geom.nc;
        for (int c = 0; c < geom.nc; ++c) {
          y[cc[c]] += hcell[cell] * vbarx / geom.nc;
          for (int d = 0; d < grid.dim; ++d)
            y[cc[c]] += 2.0 * eps * geom.vol * dvx[d] * geom.sten[d][c];
        }
      }
      for (int i = 0; i < np; ++i)
        if (fixed[i]) y[i] = 0.0;
      return y;
    };
    Vector diag = Vector::Zero(np);
    for (int cell = 0; cell < geom.ncells; ++cell) {
      cell_corners(grid, cell, cn);
      for (int c = 0; c < geom.nc; ++c) {
        double s = 0;
        for (int d = 0; d < grid.dim; ++d) s += geom.sten[d][c] * geom.sten[d][c];
        diag[cn[c]] += hcell[cell] / (geom.nc * geom.nc) + 2.0 * eps * geom.vol * s;
      }
    }
    for (int i = 0; i < np; ++i)
      if (fixed[i] || diag[i] <= 0) diag[i] = 1.0;
    auto precond = [&](const Vector& r) { return (r.array() / diag.array()).matrix(); };

    Vector rhs = -grad;
    for (int i = 0; i < np; ++i)
      if (fixed[i]) rhs[i] = 0.0;
    Vector dir;
    pcg(apply, precond, rhs, dir, 1e-10, 10 * np, "damage solve");

    bool accepted = false;
    Vector trial = state.v;
    double tau = 1.0;
    for (int bt = 0; bt < 40; ++bt, tau *= 0.5) {
      for (int i = 0; i < np; ++i)
        trial[i] = fixed[i] ? state.v[i] : std::clamp(state.v[i] + tau * dir[i], 0.0, 1.0);
      const double et = venergy(trial);
      if (et < energy) {
        state.v.swap(trial);
        energy = et;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  assemble_energy(state, law, grid, cfg);
}

AlternateTrace alternate_minimize(PhaseFieldState& state, const MaterialLaw& law,
                                  const GridSpec& grid, const SolveConfig& cfg) {
  AlternateTrace trace;
  double before = assemble_energy(state, law, grid, cfg).total();
  for (int round = 0; round < cfg.max_rounds; ++round) {
    minimize_v(state, law, grid, cfg);
    minimize_u(state, law, grid, cfg);
    const double after = state.parts.total();
    if (after > before) {  // fp dust; stop without recording an increase
      trace.converged = true;
      return trace;
    }
    trace.rounds.push_back(state.parts);
    ++trace.round_count;
    if (before - after <= cfg.tol_energy * std::max(1.0, std::abs(before))) {
      trace.converged = true;
      return trace;
    }
    before = after;
  }
  return trace;
}

PhaseFieldState make_initial_state(const MaterialLaw& law, const GridSpec& grid,
                                   const SolveConfig& cfg, double eps) {
  PhaseFieldState state = make_state(grid, law.m, eps);
  apply_clamps(state, grid, cfg);
  minimize_u(state, law, grid, cfg);
  return state;
}

}  // namespace cohesive
