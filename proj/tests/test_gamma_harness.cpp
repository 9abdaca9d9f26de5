#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cohesive/gamma_harness.hpp>
#include <cmath>
#include <cstdio>

using namespace cohesive;

namespace {

const MaterialLaw& bar_law() {
  static MaterialLaw law = MaterialLaw::euclidean(1.0, 1, 1);
  return law;
}

// shared curve on [0, 5]; built once, deterministic
const SurfaceDensityCurve& curve5() {
  static SurfaceDensityCurve c = [] {
    std::vector<double> amps;
    for (int i = 0; i <= 20; ++i) amps.push_back(0.25 * i);
    return gscal_curve(1.0, amps, {8.0, 16.0}, 64);
  }();
  return c;
}

LimitProfile1D single_slope(double L, double slope) {
  LimitProfile1D p;
  p.length = L;
  p.slope_segments = {{L, Vector::Constant(1, slope)}};
  return p;
}

}  // namespace

TEST_CASE("profile bookkeeping") {
  LimitProfile1D p;
  p.length = 2.0;
  p.slope_segments = {{1.5, Vector::Constant(1, 0.4)}, {0.5, Vector::Constant(1, -0.2)}};
  p.jumps = {Vector::Constant(1, 0.7)};
  CHECK(p.total_rise(1)[0] == doctest::Approx(1.5 * 0.4 - 0.5 * 0.2 + 0.7).epsilon(1e-14));

  LimitProfile1D bad = p;
  bad.slope_segments[0].first = -1.0;
  CHECK_THROWS_AS(bad.validate(1), HarnessError);
  bad = p;
  bad.slope_segments.pop_back();  // no longer fills the bar
  CHECK_THROWS_AS(bad.validate(1), HarnessError);
  bad = p;
  bad.jumps = {Vector::Zero(2)};
  CHECK_THROWS_AS(bad.validate(1), HarnessError);
  CHECK_THROWS_AS(p.validate(2), HarnessError);
}

TEST_CASE("limit energy of scalar profiles uses the closed forms") {
  CHECK(eval_F0_1d(single_slope(1.0, 0.3), bar_law(), curve5()) ==
        doctest::Approx(0.09).epsilon(1e-12));
  CHECK(eval_F0_1d(single_slope(1.0, 0.75), bar_law(), curve5()) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // a pure jump costs exactly its surface density
  LimitProfile1D p = single_slope(1.0, 0.0);
  p.jumps = {Vector::Constant(1, 1.5)};
  CHECK(eval_F0_1d(p, bar_law(), curve5()) ==
        doctest::Approx(curve5().interp(1.5)).epsilon(1e-12));
  // and scales linearly with the bar for a fixed slope
  CHECK(eval_F0_1d(single_slope(2.0, 0.3), bar_law(), curve5()) ==
        doctest::Approx(2.0 * eval_F0_1d(single_slope(1.0, 0.3), bar_law(), curve5()))
            .epsilon(1e-14));
}

TEST_CASE("vector profiles go through the envelope table") {
  MaterialLaw law = MaterialLaw::euclidean(1.0, 2, 1);
  std::vector<AxisSpec> axes = {{-1.0, 1.0, 81}, {-1.0, 1.0, 81}};
  EnvelopeTable table = convex_envelope_grid(law, axes);

  LimitProfile1D p;
  p.length = 1.0;
  p.slope_segments = {{1.0, Vector{{0.3, 0.4}}}};
  p.jumps = {Vector{{0.6, 0.8}}};
  const double val = eval_F0_1d(p, law, curve5(), &table);
  // slope norm 0.5 sits at the quadratic/affine junction: both give 0.25
  CHECK(val == doctest::Approx(0.25 + curve5().interp(1.0)).epsilon(3e-3));

  CHECK_THROWS_AS(eval_F0_1d(p, law, curve5()), HarnessError);  // table required
  LimitProfile1D far = p;
  far.slope_segments = {{1.0, Vector{{5.0, 0.0}}}};
  CHECK_THROWS_AS(eval_F0_1d(far, law, curve5(), &table), HarnessError);
}

TEST_CASE("jump extrapolation is refused") {
  LimitProfile1D p = single_slope(1.0, 0.0);
  p.jumps = {Vector::Constant(1, 6.0)};  // curve stops at 5
  CHECK_THROWS_AS(eval_F0_1d(p, bar_law(), curve5()), HarnessError);
  SurfaceDensityCurve other = curve5();
  other.ell = 2.0;
  CHECK_THROWS_AS(eval_F0_1d(single_slope(1.0, 0.3), bar_law(), other), HarnessError);
}

TEST_CASE("limit minimization matches an exhaustive scan") {
  const double t = 1.0;
  LimitMin1D r = limit_min_1d(t, 1.0, bar_law(), curve5());
  double best = 1e300, bs = 0;
  for (int i = 0; i <= 10000; ++i) {
    const double s = t * i / 10000.0;
    const double val = hscal_convex(t - s, 1.0) + curve5().interp(s);
    if (val < best) {
      best = val;
      bs = s;
    }
  }
  CHECK(r.value <= best + 1e-9);
  CHECK(r.value == doctest::Approx(best).epsilon(1e-7));
  CHECK(r.jump_size == doctest::Approx(bs).epsilon(1e-2));
  CHECK(r.value == doctest::Approx(0.586023855).epsilon(1e-6));
  CHECK(r.profile.total_rise(1)[0] == doctest::Approx(t).epsilon(1e-9));
}

TEST_CASE("small loads stay elastic, large loads fracture") {
  LimitMin1D small = limit_min_1d(0.1, 1.0, bar_law(), curve5());
  CHECK(small.value == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(small.jump_size == 0.0);
  CHECK(small.jump_branch >= small.elastic_branch);

  LimitMin1D big = limit_min_1d(5.0, 1.0, bar_law(), curve5());
  CHECK(big.value <= 1.01);  // surface cap plus the finite-width excess
  CHECK(big.jump_size > 4.99);

  LimitMin1D zero = limit_min_1d(0.0, 1.0, bar_law(), curve5());
  CHECK(zero.value == 0.0);
  CHECK(zero.profile.total_rise(1)[0] == 0.0);

  LimitMin1D neg = limit_min_1d(-1.0, 1.0, bar_law(), curve5());
  LimitMin1D pos = limit_min_1d(1.0, 1.0, bar_law(), curve5());
  CHECK(neg.value == doctest::Approx(pos.value).epsilon(1e-12));
  CHECK(neg.profile.total_rise(1)[0] == doctest::Approx(-1.0).epsilon(1e-9));

  MaterialLaw wrong = MaterialLaw::dist_sq_rotations(1.0, 2);
  CHECK_THROWS_AS(limit_min_1d(1.0, 1.0, wrong, curve5()), HarnessError);
}

TEST_CASE("the elastic and fracture branches tie at the reported crossover") {
  const double tstar = find_crossover(1.0, bar_law(), curve5(), 0.2, 2.0);
  CHECK(tstar == doctest::Approx(0.4291519).epsilon(1e-5));
  LimitMin1D r = limit_min_1d(tstar, 1.0, bar_law(), curve5());
  CHECK(std::abs(r.elastic_branch - r.jump_branch) < 1e-6);
  // the minimizing jump is discontinuous across the tie
  CHECK(limit_min_1d(tstar - 0.01, 1.0, bar_law(), curve5()).jump_size == 0.0);
  CHECK(limit_min_1d(tstar + 0.01, 1.0, bar_law(), curve5()).jump_size > 0.01);
  CHECK_THROWS_AS(find_crossover(1.0, bar_law(), curve5(), 1.0, 2.0), HarnessError);
}

TEST_CASE("argmin of the limit is stable under small curve perturbations") {
  for (double scale : {0.995, 1.005}) {
    SurfaceDensityCurve bent = curve5();
    for (double& g : bent.g_values) g *= scale;
    for (double t : {0.3, 1.0, 3.0}) {
      const double s0 = limit_min_1d(t, 1.0, bar_law(), curve5()).jump_size;
      const double s1 = limit_min_1d(t, 1.0, bar_law(), bent).jump_size;
      CHECK(std::abs(s1 - s0) < 0.05 * (1.0 + s0));
    }
  }
}

TEST_CASE("a short sweep converges onto the elastic limit") {
  SweepConfig cfg;
  cfg.t_load = 0.3;
  cfg.eps_list = {0.1, 0.05};
  cfg.final_rel_gate = 0.05;
  cfg.refinement_check = true;
  GammaSweepResult res = gamma_sweep(cfg, bar_law(), curve5());

  REQUIRE(res.discrete_min.size() == 2);
  // the discrete optimum is the undamaged bar: (1 + eta) t^2 / L
  CHECK(res.discrete_min[0] == doctest::Approx(0.09 * 1.001).epsilon(1e-10));
  CHECK(res.discrete_min[1] == doctest::Approx(0.09 * 1.000125).epsilon(1e-10));
  CHECK(res.limit_value == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(res.rel_errors[0] == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(res.rel_errors[1] == doctest::Approx(1.25e-4).epsilon(1e-6));
  CHECK(!res.stagnated[0]);
  CHECK(!res.stagnated[1]);
  CHECK(res.limsup_ok[0]);
  CHECK(res.limsup_ok[1]);
  CHECK(res.lower_ok);
  CHECK(res.refinement_ok);
  CHECK(res.refinement_change < 1e-12);
  CHECK(res.gates_pass(cfg));
  CHECK(res.runtimes[0] > 0.0);
  CHECK(res.xs[0].size() == 201);
  CHECK(res.vs[1].minCoeff() > 1.0 - 1e-6);  // healed back to (numerically) pristine

  SweepConfig strict = cfg;
  strict.final_rel_gate = 1e-9;
  CHECK(!res.gates_pass(strict));
}

TEST_CASE("a trivial load sweeps to zero everywhere") {
  SweepConfig cfg;
  cfg.t_load = 0.0;
  cfg.eps_list = {0.1, 0.05};
  GammaSweepResult res = gamma_sweep(cfg, bar_law(), curve5());
  CHECK(res.limit_value == 0.0);
  CHECK(res.discrete_min[0] <= 1e-12);
  CHECK(res.discrete_min[1] <= 1e-12);
  CHECK(res.rel_errors[0] <= 1e-9);
  CHECK(res.lower_ok);
}

TEST_CASE("stagnation is recorded per eps and the sweep continues") {
  SweepConfig cfg;
  cfg.t_load = 1.0;
  cfg.eps_list = {0.1};
  cfg.max_rounds = 1;  // starve the alternation
  GammaSweepResult res = gamma_sweep(cfg, bar_law(), curve5());
  REQUIRE(res.discrete_min.size() == 1);
  CHECK(res.stagnated[0]);
}

TEST_CASE("sweep configs are validated") {
  SweepConfig cfg;
  cfg.eps_list = {};
  CHECK_THROWS_AS(cfg.validate(), HarnessError);
  cfg.eps_list = {0.05, 0.1};
  CHECK_THROWS_AS(cfg.validate(), HarnessError);
  cfg.eps_list = {0.1, 0.05};
  cfg.nodes_per_eps = 10;
  CHECK_THROWS_AS(cfg.validate(), HarnessError);
  cfg.nodes_per_eps = 20;
  cfg.L = 0.0;
  CHECK_THROWS_AS(cfg.validate(), HarnessError);
  CHECK_THROWS_AS(parse_eta_rule("linear"), HarnessError);
  CHECK(parse_eta_rule("eps^{3/2}")(0.04) == doctest::Approx(0.008).epsilon(1e-12));
  CHECK(parse_eta_rule("eps^3")(0.1) == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("results round-trip through persistence") {
  SweepConfig cfg;
  cfg.t_load = 0.3;
  cfg.eps_list = {0.1, 0.05};
  GammaSweepResult res = gamma_sweep(cfg, bar_law(), curve5());
  const std::string base = "gamma_roundtrip_scratch";
  persist_results(res, cfg, bar_law(), base);
  GammaSweepResult back = load_results(base);

  CHECK(back.eps_list == res.eps_list);
  CHECK(back.discrete_min == res.discrete_min);
  CHECK(back.rel_errors == res.rel_errors);
  CHECK(back.runtimes == res.runtimes);
  CHECK(back.recovery_bound == res.recovery_bound);
  CHECK(back.limit_value == res.limit_value);
  CHECK(back.limit_elastic == res.limit_elastic);
  CHECK(back.limit_jump == res.limit_jump);
  CHECK(back.limit_jump_size == res.limit_jump_size);
  CHECK(back.stagnated == res.stagnated);
  CHECK(back.limsup_ok == res.limsup_ok);
  CHECK(back.lower_ok == res.lower_ok);
  CHECK(back.tail_monotone == res.tail_monotone);
  REQUIRE(back.xs.size() == res.xs.size());
  for (size_t k = 0; k < res.xs.size(); ++k) {
    CHECK((back.xs[k] - res.xs[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.us[k] - res.us[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.vs[k] - res.vs[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  std::remove((base + ".json").c_str());
  std::remove((base + ".csv").c_str());
  std::remove((base + "_profiles.csv").c_str());

  GammaSweepResult empty;
  persist_results(empty, cfg, bar_law(), base);
  GammaSweepResult eback = load_results(base);
  CHECK(eback.eps_list.empty());
  CHECK(eback.discrete_min.empty());
  std::remove((base + ".json").c_str());
  std::remove((base + ".csv").c_str());
  std::remove((base + "_profiles.csv").c_str());

  CHECK_THROWS_AS(load_results("no_such_gamma_base"), HarnessError);
}
