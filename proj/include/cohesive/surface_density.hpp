#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <cohesive/material_law.hpp>

namespace cohesive {

struct SurfaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimizer of the one dimensional cell functional
//   int_{-T/2}^{T/2} f(beta)^2 alpha'^2 + (1 - beta)^2/4 + beta'^2 ds
// with alpha running from 0 to t and beta pinned to 1 at both walls.
// Nodes are uniform, ds = T/(N-1); energy uses midpoint beta per interval.
struct CellProfile {
  double T = 0;
  int N = 0;
  double t = 0;
  double ell = 0;
  Vector alpha;
  Vector beta;
  double energy = 0;
  int rounds = 0;
  bool stagnated = false;                // hit the round cap without converging
  std::vector<double> round_energies;    // one entry per alternation round
};

// Energy of an arbitrary profile pair on the uniform grid (same rule the
// solver minimizes). alpha and beta must share a size >= 2.
double cell_energy(const Vector& alpha, const Vector& beta, double T, double ell);

// Alternating minimization: exact alpha solve (weighted harmonic spread),
// projected Newton in beta. t >= 0, ell > 0, T >= 4, N >= 64.
CellProfile gscal_cell(double t, double ell, double T, int N);

// Coarea style lower bound sum_j ds |1-beta| sqrt(f^2 alpha'^2 + beta'^2),
// used as an independent cross check on converged profiles.
double gscal_defform(const CellProfile& p);

struct CurvePointMeta {
  double g_prev = 0;       // value at the second largest T
  double g_last = 0;       // value at the largest T (the reported one)
  double richardson = 0;   // second order extrapolation in 1/T
  double rel_change = 0;   // |g_last - g_prev| / max(|g_last|, eps)
  bool converged = true;   // rel_change <= 5%
};

struct SurfaceDensityCurve {
  double ell = 0;
  double T_used = 0;                  // largest ladder entry
  std::vector<double> amplitudes;    // strictly increasing, first may be 0
  std::vector<double> g_values;      // cell energy at T_used per amplitude
  std::vector<CurvePointMeta> meta;

  // piecewise linear in t; throws outside the sampled range
  double interp(double t) const;
};

// Solves one cell per (amplitude, ladder T). Spacing is fixed across the
// ladder: N = round(T * nodes_per_unit) + 1, so coarse grids nest in fine
// ones and values decrease along the ladder. Ladder needs >= 2 entries.
SurfaceDensityCurve gscal_curve(double ell, const std::vector<double>& amplitudes,
                                const std::vector<double>& T_ladder,
                                int nodes_per_unit = 64);

// Explicit competitor bound (c/2 + 3) ell z for ell z < 1, else 3.
double competitor_upper_bound(double z_norm, double ell, double c_growth);

// Jump energy for a vector jump z across a plane with unit normal nu.
// Needs a law whose recession acts on rank one matrices through a quadratic
// form (builtins, or custom laws flagged sliceable); the value is
// curve.interp(sqrt(psi_recession(z nu^T))) and depends on nu only through
// that scalar. Throws SurfaceError otherwise.
double g_vectorial(const Vector& z, const Vector& nu, const MaterialLaw& law,
                   const SurfaceDensityCurve& curve);

// Vector valued cell solve: alpha is m dimensional, beta scalar, elastic
// density f(beta)^2 psi_recession(alpha' nu^T). Same grid conventions as
// gscal_cell. Only quadratic recessions are supported (checked by probing
// the parallelogram law); for those the per component alpha solve is exact.
struct SlicedCellProfile {
  double T = 0;
  int N = 0;
  double ell = 0;
  Matrix alpha;   // N x m, rows are alpha(s_i)
  Vector beta;
  double energy = 0;
  int rounds = 0;
  bool stagnated = false;
  std::vector<double> round_energies;
};

SlicedCellProfile gscal_cell_sliced(const Vector& z, const Vector& nu,
                                    const MaterialLaw& law, double T, int N);

}  // namespace cohesive
