#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <cohesive/envelopes.hpp>
#include <cohesive/phasefield.hpp>
#include <cohesive/surface_density.hpp>

namespace cohesive {

struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Piecewise-affine 1D candidate for the limit energy: constant-slope segments
// plus point jumps. Cantor parts are out of scope.
struct LimitProfile1D {
  double length = 1.0;
  std::vector<std::pair<double, Vector>> slope_segments;  // (segment length, slope)
  std::vector<Vector> jumps;

  Vector total_rise(int m) const;
  void validate(int m) const;  // positive lengths summing to the bar length
};

// Limit energy of a profile: segment costs through the convex envelope of the
// yield-capped density, plus curve-interpolated jump costs. Scalar euclidean
// slopes use the closed form; m > 1 needs a convex envelope table.
double eval_F0_1d(const LimitProfile1D& profile, const MaterialLaw& law,
                  const SurfaceDensityCurve& curve,
                  const EnvelopeTable* slope_table = nullptr);

struct LimitMin1D {
  double value = 0;
  double elastic_branch = 0;  // zero-jump competitor
  double jump_branch = 0;     // best competitor with one jump
  double jump_size = 0;       // its amplitude (0 when the elastic branch wins)
  LimitProfile1D profile;
};

// Minimum of the limit energy over one-slope + one-jump profiles on a bar of
// length L with end-to-end rise t_load; scalar euclidean laws only. Coarse
// scan refined by golden section to a 1e-6 bracket.
LimitMin1D limit_min_1d(double t_load, double L, const MaterialLaw& law,
                        const SurfaceDensityCurve& curve);

// Load at which the elastic and best-jump branches tie, by bisection;
// the bracket [t_lo, t_hi] must straddle the tie.
double find_crossover(double L, const MaterialLaw& law, const SurfaceDensityCurve& curve,
                      double t_lo, double t_hi);

struct SweepConfig {
  double L = 1.0;
  double t_load = 0.0;
  std::vector<double> eps_list;     // strictly decreasing positive
  std::string eta_rule = "eps^3";   // "eps^{3/2}" | "eps^2" | "eps^3"
  int nodes_per_eps = 20;           // grid nodes >= nodes_per_eps * L / eps
  int max_rounds = 200;
  double tol_energy = 1e-9;
  bool refinement_check = false;    // halve the spacing at the largest eps
  std::optional<double> final_rel_gate;  // acceptance gate for the CLI

  void validate() const;
};

std::function<double(double)> parse_eta_rule(const std::string& name);

struct GammaSweepResult {
  std::vector<double> eps_list, discrete_min, rel_errors, runtimes;
  double limit_value = 0;
  double limit_elastic = 0, limit_jump = 0, limit_jump_size = 0;
  std::vector<char> stagnated;         // per-eps: alternation hit the round cap
  std::vector<double> recovery_bound;  // best explicit competitor on the same grid
  std::vector<char> limsup_ok;         // discrete <= recovery bound + 1e-9
  bool lower_ok = true;                // elastic-regime floor held where it applies
  bool tail_monotone = true;  // rel errors nonincreasing over the last three eps
  bool refinement_ok = true;
  double refinement_change = 0;
  std::vector<Vector> xs, us, vs;  // final nodal profiles per eps

  bool gates_pass(const SweepConfig& config) const;
};

// Alternating minimization per eps on the Dirichlet-loaded bar, from both the
// elastic start and a notched start (the undamaged state is stationary, so
// fracture is only reachable from the latter); keeps the lower energy.
GammaSweepResult gamma_sweep(const SweepConfig& config, const MaterialLaw& law,
                             const SurfaceDensityCurve& curve);

// {base}.json manifest + {base}.csv per-eps table + {base}_profiles.csv
// long-format nodal profiles; atomic replace on each file.
void persist_results(const GammaSweepResult& result, const SweepConfig& config,
                     const MaterialLaw& law, const std::string& base);

GammaSweepResult load_results(const std::string& base);

}  // namespace cohesive
