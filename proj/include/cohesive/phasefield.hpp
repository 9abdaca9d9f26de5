#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <cohesive/material_law.hpp>

namespace cohesive {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform box grid. Nodes are indexed x-major: 1D plain i, 2D ix*ny + iy.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> nodes{3, 1};

  static GridSpec line(double length, int n);
  static GridSpec box(double lx, double ly, int nx, int ny);

  double spacing(int axis) const;
  int node_count() const;
  int cell_count() const;
  int index(int ix, int iy = 0) const;
  void validate() const;
};

struct EnergyParts {
  double elastic = 0;
  double damage_local = 0;
  double damage_gradient = 0;
  double regularization = 0;
  double fidelity = 0;
  double total() const {
    return elastic + damage_local + damage_gradient + regularization + fidelity;
  }
};

struct PhaseFieldState {
  Matrix u;  // node_count x m
  Vector v;  // node_count, kept in [0,1]
  double eps = 0;
  EnergyParts parts;
};

// Dirichlet clamp on one boundary face of the box.
struct FaceClamp {
  int axis = 0;
  bool upper = false;
  std::optional<Vector> u;  // size m when present
  std::optional<double> v;
};

struct SolveConfig {
  std::function<double(double)> eta_rule;  // defaults to eps^{3/2}
  std::optional<Matrix> fidelity_w;        // node_count x m
  double fidelity_q = 2.0;                 // must be > 1; 2 keeps the u solve linear
  std::vector<FaceClamp> clamps;
  int max_rounds = 200;
  double tol_energy = 1e-9;

  double eta(double eps) const;
};

// Fresh state with u = 0, v = 1 (clamps not yet applied).
PhaseFieldState make_state(const GridSpec& grid, int m, double eps);
void apply_clamps(PhaseFieldState& state, const GridSpec& grid, const SolveConfig& cfg);

// One-point quadrature per cell with cell-averaged v inside f_eps^2. Also
// stores the parts on the state. Throws on non-finite parts.
EnergyParts assemble_energy(PhaseFieldState& state, const MaterialLaw& law,
                            const GridSpec& grid, const SolveConfig& cfg);

// Analytic gradient of the discrete energy (smooth branches of f_eps; cells
// at or above the damage threshold contribute no elastic v-derivative).
void assemble_gradient(const PhaseFieldState& state, const MaterialLaw& law,
                       const GridSpec& grid, const SolveConfig& cfg, Matrix& grad_u,
                       Vector& grad_v);

// Displacement subproblem. Euclidean laws: exact linear solve by Jacobi
// preconditioned CG to residual 1e-10 (error after 10 * nodes iterations);
// rotation-distance laws: 200 Armijo gradient steps. Clamped nodes are
// bitwise untouched. Energy never increases.
void minimize_u(PhaseFieldState& state, const MaterialLaw& law, const GridSpec& grid,
                const SolveConfig& cfg);

// Damage subproblem: projected semismooth Newton on [0,1]^N; the kink of
// f_eps at the damage threshold is handled by active-set branch selection.
void minimize_v(PhaseFieldState& state, const MaterialLaw& law, const GridSpec& grid,
                const SolveConfig& cfg);

struct AlternateTrace {
  std::vector<EnergyParts> rounds;  // parts after each v+u round, nonincreasing totals
  int round_count = 0;
  bool converged = false;
};

// v step then u step per round, until the relative decrease drops below
// tol_energy or max_rounds is hit.
AlternateTrace alternate_minimize(PhaseFieldState& state, const MaterialLaw& law,
                                  const GridSpec& grid, const SolveConfig& cfg);

// Canonical deterministic start: v = 1, clamps applied, u from the elastic
// solve at v = 1, parts assembled.
PhaseFieldState make_initial_state(const MaterialLaw& law, const GridSpec& grid,
                                   const SolveConfig& cfg, double eps);

}  // namespace cohesive
