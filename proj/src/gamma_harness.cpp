#include <cohesive/gamma_harness.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <cohesive/io_util.hpp>

namespace cohesive {

namespace {

using nlohmann::json;

double golden_refine(const std::function<double(double)>& f, double a, double b,
                     double width) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void check_scalar_euclidean(const MaterialLaw& law, const char* who) {
  if (law.kind != PsiKind::EuclideanSquared || law.m != 1 || law.n != 1)
    throw HarnessError(std::string(who) + " handles scalar euclidean bars only");
}

void check_curve_matches(const MaterialLaw& law, const SurfaceDensityCurve& curve) {
  if (std::abs(curve.ell - law.ell) > 1e-12 * (1.0 + std::abs(law.ell)))
    throw HarnessError("surface density curve was built for a different ell");
}

void check_curve_covers(const SurfaceDensityCurve& curve, double amp) {
  if (curve.amplitudes.empty() || amp < curve.amplitudes.front() - 1e-12 ||
      amp > curve.amplitudes.back() + 1e-12)
    throw HarnessError("jump amplitude outside the curve range; extrapolation refused");
}

const char* kind_name(PsiKind k) {
  switch (k) {
    case PsiKind::EuclideanSquared: return "euclidean";
    case PsiKind::DistSqRotations: return "dist_sq_rotations";
    case PsiKind::Custom: return "custom";
  }
  return "?";
}

struct EpsSolve {
  double total = 0;
  bool stagnated = false;
  double recovery = 0;
  double min_v = 1.0;
  Vector x, u, v;
  double runtime = 0;
};

EpsSolve solve_one(const SweepConfig& config, const MaterialLaw& law, double eps,
                   int nodes_per_eps) {
  const double L = config.L, t = config.t_load;
  const int N = int(std::ceil(nodes_per_eps * L / eps)) + 1;
  GridSpec grid = GridSpec::line(L, N);
  SolveConfig cfg;
  cfg.eta_rule = parse_eta_rule(config.eta_rule);
  cfg.max_rounds = config.max_rounds;
  cfg.tol_energy = config.tol_energy;
  cfg.clamps.push_back({0, false, Vector::Zero(1), {}});
  cfg.clamps.push_back({0, true, Vector::Constant(1, t), {}});

  const auto t0 = std::chrono::steady_clock::now();
  PhaseFieldState best = make_initial_state(law, grid, cfg, eps);
  AlternateTrace tr = alternate_minimize(best, law, grid, cfg);
  bool stagnated = !tr.converged;

  // the undamaged state is stationary, so fracture needs a notched start
  PhaseFieldState notched = make_state(grid, 1, eps);
  const int mid = N / 2;
  for (int i = 0; i < N; ++i) {
    notched.u(i, 0) = (i <= mid) ? 0.0 : t;
    notched.v[i] = std::min(1.0, std::abs(i - mid) * grid.spacing(0) / (2.0 * eps));
  }
  apply_clamps(notched, grid, cfg);
  AlternateTrace trn = alternate_minimize(notched, law, grid, cfg);
  if (notched.parts.total() < best.parts.total()) {
    best = notched;
    stagnated = !trn.converged;
  }
  const auto t1 = std::chrono::steady_clock::now();

  // explicit competitors on the same grid: uniformly damped affine state and
  // a jump state with a damage tent
  const double Psi = (t / L) * (t / L);
  const double delta = std::min(1.0, std::sqrt(2.0 * law.ell * eps) * std::pow(Psi, 0.25));
  PhaseFieldState rec = make_state(grid, 1, eps);
  for (int i = 0; i < N; ++i) {
    rec.u(i, 0) = t * i / double(N - 1);
    rec.v[i] = 1.0 - delta;
  }
  apply_clamps(rec, grid, cfg);
  const double rec_total = assemble_energy(rec, law, grid, cfg).total();
  PhaseFieldState jc = make_state(grid, 1, eps);
  for (int i = 0; i < N; ++i) {
    jc.u(i, 0) = (i <= mid) ? 0.0 : t;
    jc.v[i] = std::min(1.0, std::abs(i - mid) * grid.spacing(0) / (2.0 * eps));
  }
  apply_clamps(jc, grid, cfg);
  const double jc_total = assemble_energy(jc, law, grid, cfg).total();

  EpsSolve out;
  out.total = best.parts.total();
  out.stagnated = stagnated;
  out.recovery = std::min(rec_total, jc_total);
  out.min_v = best.v.minCoeff();
  out.x = Vector::LinSpaced(N, 0.0, L);
  out.u = best.u.col(0);
  out.v = best.v;
  out.runtime = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

}  // namespace

Vector LimitProfile1D::total_rise(int m) const {
  validate(m);
  Vector rise = Vector::Zero(m);
  for (const auto& [len, slope] : slope_segments) rise += len * slope;
  for (const auto& j : jumps) rise += j;
  return rise;
}

void LimitProfile1D::validate(int m) const {
  if (!(length > 0)) throw HarnessError("bar length must be positive");
  double sum = 0;
  for (const auto& [len, slope] : slope_segments) {
    if (!(len > 0)) throw HarnessError("segment lengths must be positive");
    if (slope.size() != m) throw HarnessError("slope has the wrong number of components");
    sum += len;
  }
  for (const auto& j : jumps)
    if (j.size() != m) throw HarnessError("jump has the wrong number of components");
  if (std::abs(sum - length) > 1e-9 * std::max(1.0, length))
    throw HarnessError("segment lengths must fill the bar");
}

double eval_F0_1d(const LimitProfile1D& profile, const MaterialLaw& law,
                  const SurfaceDensityCurve& curve, const EnvelopeTable* slope_table) {
  if (law.n != 1) throw HarnessError("1d bars need laws with scalar gradient arguments");
  profile.validate(law.m);
  check_curve_matches(law, curve);

  double total = 0;
  for (const auto& [len, slope] : profile.slope_segments) {
    if (law.m == 1 && law.kind == PsiKind::EuclideanSquared) {
      total += len * hscal_convex(std::abs(slope[0]), law.ell);
    } else {
      if (!slope_table)
        throw HarnessError("vector or non-euclidean slopes need a convex envelope table");
      if (slope_table->kind != TableKind::Convex)
        throw HarnessError("slope table must be a convex envelope table");
      if (std::abs(slope_table->ell - law.ell) > 1e-12 * (1.0 + std::abs(law.ell)))
        throw HarnessError("slope table was built for a different ell");
      std::vector<double> pt(slope.data(), slope.data() + slope.size());
      if (!slope_table->covers(pt))
        throw HarnessError("slope outside the envelope table; extrapolation refused");
      total += len * slope_table->interp_matrix(slope);
    }
  }
  Vector nu = Vector::Ones(1);
  for (const auto& j : profile.jumps) {
    check_curve_covers(curve, j.norm());
    total += g_vectorial(j, nu, law, curve);
  }
  return total;
}

LimitMin1D limit_min_1d(double t_load, double L, const MaterialLaw& law,
                        const SurfaceDensityCurve& curve) {
  if (!(L > 0)) throw HarnessError("bar length must be positive");
  check_scalar_euclidean(law, "limit_min_1d");
  check_curve_matches(law, curve);
  const double t = std::abs(t_load);
  const double sgn = t_load < 0 ? -1.0 : 1.0;
  check_curve_covers(curve, 0.0);
  check_curve_covers(curve, t);

  LimitMin1D out;
  out.elastic_branch = L * hscal_convex(t / L, law.ell);
  auto elastic_profile = [&] {
    LimitProfile1D p;
    p.length = L;
    p.slope_segments = {{L, Vector::Constant(1, sgn * t / L)}};
    return p;
  };
  if (t <= 0) {
    out.value = out.jump_branch = out.elastic_branch;
    out.profile = elastic_profile();
    return out;
  }

  auto jump_cost = [&](double s) {
    return L * hscal_convex((t - s) / L, law.ell) + curve.interp(s);
  };
  const int G = 512;
  int best = 1;
  double best_val = jump_cost(t / G);
  for (int i = 2; i <= G; ++i) {
    const double val = jump_cost(t * i / G);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  const double lo = t * (best - 1) / G;
  const double hi = t * std::min(G, best + 1) / G;
  const double sstar = golden_refine(jump_cost, lo, hi, 1e-6);
  out.jump_branch = jump_cost(sstar);

  if (out.elastic_branch <= out.jump_branch) {
    out.value = out.elastic_branch;
    out.jump_size = 0;
    out.profile = elastic_profile();
  } else {
    out.value = out.jump_branch;
    out.jump_size = sstar;
    out.profile.length = L;
    out.profile.slope_segments = {{L, Vector::Constant(1, sgn * (t - sstar) / L)}};
    out.profile.jumps = {Vector::Constant(1, sgn * sstar)};
  }
  return out;
}

double find_crossover(double L, const MaterialLaw& law, const SurfaceDensityCurve& curve,
                      double t_lo, double t_hi) {
  if (!(t_lo >= 0 && t_hi > t_lo)) throw HarnessError("need 0 <= t_lo < t_hi");
  auto diff = [&](double t) {
    LimitMin1D r = limit_min_1d(t, L, law, curve);
    return r.elastic_branch - r.jump_branch;
  };
  double dlo = diff(t_lo), dhi = diff(t_hi);
  if (!(dlo < 0 && dhi > 0))
    throw HarnessError("bracket does not straddle the elastic/fracture crossover");
  double a = t_lo, b = t_hi;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (a + b);
    if (diff(mid) < 0)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

void SweepConfig::validate() const {
  if (!(L > 0)) throw HarnessError("bar length must be positive");
  if (!std::isfinite(t_load)) throw HarnessError("load must be finite");
  if (eps_list.empty()) throw HarnessError("eps list must not be empty");
  for (size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0)) throw HarnessError("eps values must be positive");
    if (i && !(eps_list[i] < eps_list[i - 1]))
      throw HarnessError("eps list must be strictly decreasing");
  }
  if (nodes_per_eps < 20)
    throw HarnessError("need at least 20 nodes per eps to resolve the damage layer");
  if (max_rounds < 1) throw HarnessError("max_rounds must be positive");
  if (!(tol_energy > 0)) throw HarnessError("tol_energy must be positive");
}

std::function<double(double)> parse_eta_rule(const std::string& name) {
  if (name == "eps^{3/2}") return [](double e) { return std::pow(e, 1.5); };
  if (name == "eps^2") return [](double e) { return e * e; };
  if (name == "eps^3") return [](double e) { return e * e * e; };
  throw HarnessError("unknown eta rule: " + name);
}

bool GammaSweepResult::gates_pass(const SweepConfig& config) const {
  if (!tail_monotone || !lower_ok || !refinement_ok) return false;
  for (char ok : limsup_ok)
    if (!ok) return false;
  if (config.final_rel_gate && !rel_errors.empty() &&
      !(rel_errors.back() <= *config.final_rel_gate))
    return false;
  return true;
}

GammaSweepResult gamma_sweep(const SweepConfig& config, const MaterialLaw& law,
                             const SurfaceDensityCurve& curve) {
  config.validate();
  check_scalar_euclidean(law, "gamma_sweep");
  check_curve_matches(law, curve);

  GammaSweepResult res;
  LimitMin1D lim = limit_min_1d(config.t_load, config.L, law, curve);
  res.limit_value = lim.value;
  res.limit_elastic = lim.elastic_branch;
  res.limit_jump = lim.jump_branch;
  res.limit_jump_size = lim.jump_size;

  const auto eta = parse_eta_rule(config.eta_rule);
  for (double eps : config.eps_list) {
    EpsSolve s = solve_one(config, law, eps, config.nodes_per_eps);
    res.eps_list.push_back(eps);
    res.discrete_min.push_back(s.total);
    res.runtimes.push_back(s.runtime);
    res.stagnated.push_back(s.stagnated);
    res.recovery_bound.push_back(s.recovery);
    res.limsup_ok.push_back(s.total <= s.recovery + 1e-9);
    res.rel_errors.push_back(std::abs(s.total - lim.value) /
                             std::max(lim.value, 1e-12));
    res.xs.push_back(s.x);
    res.us.push_back(s.u);
    res.vs.push_back(s.v);

    if (s.total < -1e-12) res.lower_ok = false;
    if (s.min_v >= damage_threshold(eps, law.ell)) {
      // elastic outcome: floor it by the pointwise damage optimum
      const double P = (config.t_load / config.L) * (config.t_load / config.L);
      const double et = eta(eps);
      auto dens = [&](double sv) {
        const double f = damage_f_eps(sv, eps, law.ell);
        return (f * f + et) * P + (1.0 - sv) * (1.0 - sv) / (4.0 * eps);
      };
      // two branches around the cap make this bimodal: scan, then refine
      int bi = 0;
      double bv = dens(0.0);
      for (int i = 1; i <= 1024; ++i)
        if (const double val = dens(i / 1024.0); val < bv) {
          bv = val;
          bi = i;
        }
      const double svstar = golden_refine(dens, std::max(0.0, (bi - 1) / 1024.0),
                                          std::min(1.0, (bi + 1) / 1024.0), 1e-10);
      const double floor_val = svstar * P * config.L;
      if (s.total < floor_val - 1e-9) res.lower_ok = false;
    }
  }

  const size_t n = res.rel_errors.size();
  if (n >= 3) {
    for (size_t k = n - 2; k < n; ++k) {
      const bool ok = res.rel_errors[k] <= res.rel_errors[k - 1] * (1.0 + 1e-9) ||
                      res.rel_errors[k] <= 1e-3;
      if (!ok) res.tail_monotone = false;
    }
  }

  if (config.refinement_check) {
    EpsSolve fine = solve_one(config, law, config.eps_list.front(),
                              2 * config.nodes_per_eps);
    res.refinement_change = std::abs(fine.total - res.discrete_min.front()) /
                            std::max(std::abs(res.discrete_min.front()), 1e-12);
    res.refinement_ok = res.refinement_change < 0.01;
  }
  return res;
}

void persist_results(const GammaSweepResult& result, const SweepConfig& config,
                     const MaterialLaw& law, const std::string& base) {
  json jc{{"L", config.L},
          {"t_load", config.t_load},
          {"eps_list", config.eps_list},
          {"eta_rule", config.eta_rule},
          {"nodes_per_eps", config.nodes_per_eps},
          {"max_rounds", config.max_rounds},
          {"tol_energy", config.tol_energy},
          {"refinement_check", config.refinement_check}};
  if (config.final_rel_gate) jc["final_rel_gate"] = *config.final_rel_gate;

  json manifest;
  manifest["schema"] = 1;
  manifest["library"] = "cohesive 0.1";
  manifest["config"] = jc;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(jc.dump())));
  manifest["config_hash"] = hash;
  manifest["law"] = {{"kind", kind_name(law.kind)},
                     {"ell", law.ell},
                     {"m", law.m},
                     {"n", law.n},
                     {"growth_c", law.growth_c}};
  manifest["eps_list"] = result.eps_list;
  manifest["discrete_min"] = result.discrete_min;
  manifest["rel_errors"] = result.rel_errors;
  manifest["runtimes"] = result.runtimes;
  manifest["recovery_bound"] = result.recovery_bound;
  manifest["limit"] = {{"value", result.limit_value},
                       {"elastic", result.limit_elastic},
                       {"jump", result.limit_jump},
                       {"jump_size", result.limit_jump_size}};
  json stag = json::array(), lims = json::array();
  for (char c : result.stagnated) stag.push_back(bool(c));
  for (char c : result.limsup_ok) lims.push_back(bool(c));
  manifest["flags"] = {{"stagnated", stag},
                       {"limsup_ok", lims},
                       {"lower_ok", result.lower_ok},
                       {"tail_monotone", result.tail_monotone},
                       {"refinement_ok", result.refinement_ok},
                       {"refinement_change", result.refinement_change}};
  write_file_atomic(base + ".json", manifest.dump(2) + "\n");

  std::ostringstream csv;
  csv << "eps,discrete_min,limit,rel_error\n";
  char row[160];
  for (size_t k = 0; k < result.eps_list.size(); ++k) {
    std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g\n", result.eps_list[k],
                  result.discrete_min[k], result.limit_value, result.rel_errors[k]);
    csv << row;
  }
  write_file_atomic(base + ".csv", csv.str());

  std::ostringstream prof;
  prof << "eps,x,u,v\n";
  for (size_t k = 0; k < result.xs.size(); ++k)
    for (int i = 0; i < result.xs[k].size(); ++i) {
      std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g\n", result.eps_list[k],
                    result.xs[k][i], result.us[k][i], result.vs[k][i]);
      prof << row;
    }
  write_file_atomic(base + "_profiles.csv", prof.str());
}

GammaSweepResult load_results(const std::string& base) {
  std::ifstream in(base + ".json");
  if (!in) throw HarnessError("cannot open " + base + ".json");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw HarnessError(std::string("bad manifest: ") + e.what());
  }

  GammaSweepResult res;
  try {
    res.eps_list = manifest.at("eps_list").get<std::vector<double>>();
    res.discrete_min = manifest.at("discrete_min").get<std::vector<double>>();
    res.rel_errors = manifest.at("rel_errors").get<std::vector<double>>();
    res.runtimes = manifest.at("runtimes").get<std::vector<double>>();
    res.recovery_bound = manifest.at("recovery_bound").get<std::vector<double>>();
    const json& lim = manifest.at("limit");
    res.limit_value = lim.at("value").get<double>();
    res.limit_elastic = lim.at("elastic").get<double>();
    res.limit_jump = lim.at("jump").get<double>();
    res.limit_jump_size = lim.at("jump_size").get<double>();
    const json& flags = manifest.at("flags");
    for (bool b : flags.at("stagnated")) res.stagnated.push_back(b);
    for (bool b : flags.at("limsup_ok")) res.limsup_ok.push_back(b);
    res.lower_ok = flags.at("lower_ok").get<bool>();
    res.tail_monotone = flags.at("tail_monotone").get<bool>();
    res.refinement_ok = flags.at("refinement_ok").get<bool>();
    res.refinement_change = flags.at("refinement_change").get<double>();
  } catch (const json::exception& e) {
    throw HarnessError(std::string("manifest missing fields: ") + e.what());
  }

  std::ifstream pf(base + "_profiles.csv");
  if (pf) {
    std::string line;
    std::getline(pf, line);  // header
    std::vector<double> col[4];
    while (std::getline(pf, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string cell;
      for (int c = 0; c < 4 && std::getline(ls, cell, ','); ++c)
        col[c].push_back(std::stod(cell));
    }
    size_t row = 0;
    for (double eps : res.eps_list) {
      std::vector<double> x, u, v;
      while (row < col[0].size() && col[0][row] == eps) {
        x.push_back(col[1][row]);
        u.push_back(col[2][row]);
        v.push_back(col[3][row]);
        ++row;
      }
      auto tovec = [](const std::vector<double>& w) {
        Vector out(w.size());
        for (size_t i = 0; i < w.size(); ++i) out[i] = w[i];
        return out;
      };
      res.xs.push_back(tovec(x));
      res.us.push_back(tovec(u));
      res.vs.push_back(tovec(v));
    }
  }
  return res;
}

}  // namespace cohesive
