#include <cohesive/surface_density.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <cohesive/tridiag.hpp>

namespace cohesive {

namespace {

constexpr double kBetaFloor = 1e-9;    // promotes fully broken intervals in the alpha solve
constexpr double kMClamp = 1.0 - 1e-12;
constexpr int kMaxRounds = 500;
constexpr double kRoundTol = 1e-10;

double clamp_m(double m) { return std::clamp(m, 0.0, kMClamp); }

// f(m)^2 with f(m) = ell m / (1 - m)
double wq(double m, double ell) {
  const double c = clamp_m(m);
  const double q = ell * c / (1.0 - c);
  return q * q;
}

// a holds the squared elastic rate per interval (psi-recession of alpha'),
// so the energy is sum ds (w a + (1-m)^2/4) + (dbeta)^2/ds.
double energy_from(const Vector& a, const Vector& beta, double ds, double ell) {
  const Eigen::Index n = beta.size();
  double e = 0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double m = 0.5 * (beta[j] + beta[j + 1]);
    const double db = beta[j + 1] - beta[j];
    e += ds * (wq(m, ell) * a[j] + (1.0 - m) * (1.0 - m) * 0.25) + db * db / ds;
  }
  return e;
}

// harmonic weights r_j = 1/w(max(m_j, floor)); returns their sum
double alpha_weights(const Vector& beta, double ell, Vector& r) {
  const Eigen::Index n = beta.size();
  r.resize(n - 1);
  double s = 0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double m = std::max(0.5 * (beta[j] + beta[j + 1]), kBetaFloor);
    r[j] = 1.0 / wq(m, ell);
    s += r[j];
  }
  return s;
}

// one projected Newton sweep in beta (interior nodes, walls pinned at 1);
// runs until the decrease stalls, returns the final energy
double beta_newton(Vector& beta, const Vector& a, double ds, double ell) {
  const Eigen::Index n = beta.size();
  double e = energy_from(a, beta, ds, ell);
  if (n <= 2) return e;
  Vector grad(n), sub(n), diag(n), sup(n), rhs(n);
  Vector trial(n);
  for (int iter = 0; iter < 60; ++iter) {
    grad.setZero();
    sub.setZero();
    sup.setZero();
    diag.setZero();
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      const double m = clamp_m(0.5 * (beta[j] + beta[j + 1]));
      const double om = 1.0 - m;
      const double w1 = 2.0 * ell * ell * m / (om * om * om);
      const double w2 = 2.0 * ell * ell * (1.0 + 2.0 * m) / (om * om * om * om);
      const double db = beta[j + 1] - beta[j];
      const double gshare = ds * (0.5 * w1 * a[j] - 0.25 * om);
      grad[j] += gshare - 2.0 * db / ds;
      grad[j + 1] += gshare + 2.0 * db / ds;
      const double hshare = ds * (0.25 * w2 * a[j] + 0.125);
      diag[j] += hshare + 2.0 / ds;
      diag[j + 1] += hshare + 2.0 / ds;
      sup[j] += hshare - 2.0 / ds;
      sub[j + 1] += hshare - 2.0 / ds;
    }
    // pin the walls; free interior nodes unless clamped at an active bound
    double gmax = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool wall = (i == 0 || i == n - 1);
      const bool low = beta[i] <= 0.0 && grad[i] > 0.0;
      const bool high = beta[i] >= 1.0 && grad[i] < 0.0;
      if (wall || low || high) {
        sub[i] = 0;
        sup[i] = 0;
        diag[i] = 1;
        rhs[i] = 0;
        if (i + 1 < n) sub[i + 1] = 0;
        if (i > 0) sup[i - 1] = 0;
      } else {
        rhs[i] = -grad[i];
        gmax = std::max(gmax, std::abs(grad[i]));
      }
    }
    if (gmax < 1e-12 * (1.0 + std::abs(e))) break;
    solve_tridiag(sub, diag, sup, rhs);
    double tau = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, tau *= 0.5) {
      for (Eigen::Index i = 0; i < n; ++i)
        trial[i] = std::clamp(beta[i] + tau * rhs[i], 0.0, 1.0);
      trial[0] = beta[0];
      trial[n - 1] = beta[n - 1];
      const double et = energy_from(a, trial, ds, ell);
      if (et < e) {
        beta = trial;
        const double drop = e - et;
        e = et;
        accepted = true;
        if (drop < 1e-14 * (1.0 + std::abs(e))) iter = 60;  // converged to fp resolution
        break;
      }
    }
    if (!accepted) break;
  }
  return e;
}

void check_cell_args(double t, double ell, double T, int N) {
  if (!(t >= 0)) throw SurfaceError("jump amplitude must be >= 0");
  if (!(ell > 0)) throw SurfaceError("ell must be positive");
  if (!(T >= 4)) throw SurfaceError("cell length must be >= 4");
  if (N < 64) throw SurfaceError("need at least 64 nodes");
}

// shared alternation driver; fills beta/energy bookkeeping and calls back
// into the caller for the alpha update (which depends on scalar vs sliced)
template <class AlphaStep>
void alternate(Vector& beta, Vector& a, double ds, double ell, AlphaStep alpha_step,
               double& energy, int& rounds, bool& stagnated,
               std::vector<double>& round_energies) {
  energy = energy_from(a, beta, ds, ell);
  rounds = 0;
  stagnated = false;
  for (int round = 0; round < kMaxRounds; ++round) {
    const double before = energy;
    alpha_step(beta, a);
    double after = beta_newton(beta, a, ds, ell);
    if (after > before) {  // fp dust; keep the trace nonincreasing and stop
      round_energies.push_back(before);
      ++rounds;
      return;
    }
    energy = after;
    round_energies.push_back(energy);
    ++rounds;
    if (before - energy < kRoundTol) return;
  }
  stagnated = true;
}

void init_profiles(double t_like, double ell, double T, int N, Vector& ramp, Vector& beta) {
  const double ds = T / (N - 1);
  const double W = T / 10.0;  // half width of the middle fifth
  ramp.resize(N);
  beta.resize(N);
  const double b0 = 1.0 - std::sqrt(std::min(1.0, ell * t_like));
  for (int i = 0; i < N; ++i) {
    const double s = -0.5 * T + i * ds;
    ramp[i] = std::clamp((s + W) / (2.0 * W), 0.0, 1.0);
    beta[i] = 1.0 - (1.0 - b0) * std::max(0.0, 1.0 - std::abs(s) / W);
  }
  ramp[0] = 0.0;
  ramp[N - 1] = 1.0;
  beta[0] = 1.0;
  beta[N - 1] = 1.0;
}

double quad_probe(const MaterialLaw& law, const Vector& u, const Vector& nu) {
  return law.psi_recession(u * nu.transpose());
}

// recession must act on u |-> u nu^T through a quadratic form for the
// reduction to a scalar amplitude to be exact; probe the parallelogram law
void check_quadratic_recession(const MaterialLaw& law, const Vector& nu) {
  if (law.kind != PsiKind::Custom) return;  // builtins are squared norms
  const int m = law.m;
  Vector u1(m), u2(m);
  for (int i = 0; i < m; ++i) {
    u1[i] = 1.0 / std::sqrt(double(m));
    u2[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.25 * i) / double(m);
  }
  const Vector pairs[3][2] = {{u1, u2}, {u1, -u1}, {u2, 0.5 * u1}};
  for (const auto& p : pairs) {
    const double lhs = quad_probe(law, p[0] + p[1], nu) + quad_probe(law, p[0] - p[1], nu);
    const double rhs = 2.0 * (quad_probe(law, p[0], nu) + quad_probe(law, p[1], nu));
    if (std::abs(lhs - rhs) > 1e-6 * (std::abs(lhs) + std::abs(rhs) + 1e-12))
      throw SurfaceError("recession is not quadratic along this normal; reduction unsupported");
  }
}

}  // namespace

double cell_energy(const Vector& alpha, const Vector& beta, double T, double ell) {
  if (alpha.size() != beta.size() || alpha.size() < 2)
    throw SurfaceError("profiles need matching sizes >= 2");
  if (!(T > 0) || !(ell > 0)) throw SurfaceError("T and ell must be positive");
  const Eigen::Index n = beta.size();
  const double ds = T / double(n - 1);
  Vector a(n - 1);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double da = (alpha[j + 1] - alpha[j]) / ds;
    a[j] = da * da;
  }
  return energy_from(a, beta, ds, ell);
}

CellProfile gscal_cell(double t, double ell, double T, int N) {
  check_cell_args(t, ell, T, N);
  const double ds = T / (N - 1);
  CellProfile p;
  p.T = T;
  p.N = N;
  p.t = t;
  p.ell = ell;
  Vector ramp;
  init_profiles(t, ell, T, N, ramp, p.beta);
  p.alpha = t * ramp;
  Vector a(N - 1), r;
  for (int j = 0; j + 1 < N; ++j) {
    const double da = (p.alpha[j + 1] - p.alpha[j]) / ds;
    a[j] = da * da;
  }
  auto alpha_step = [&](const Vector& beta, Vector& acc) {
    const double s = alpha_weights(beta, ell, r);
    double run = 0;
    for (int j = 0; j + 1 < N; ++j) {
      const double da = t * r[j] / s;
      p.alpha[j] = run;
      run += da;
      const double rate = da / ds;
      acc[j] = rate * rate;
    }
    p.alpha[N - 1] = t;
  };
  alternate(p.beta, a, ds, ell, alpha_step, p.energy, p.rounds, p.stagnated,
            p.round_energies);
  return p;
}

double gscal_defform(const CellProfile& p) {
  if (p.alpha.size() != p.beta.size() || p.alpha.size() < 2)
    throw SurfaceError("profiles need matching sizes >= 2");
  const Eigen::Index n = p.beta.size();
  const double ds = p.T / double(n - 1);
  double d = 0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double m = 0.5 * (p.beta[j] + p.beta[j + 1]);
    const double da = (p.alpha[j + 1] - p.alpha[j]) / ds;
    const double db = (p.beta[j + 1] - p.beta[j]) / ds;
    d += ds * std::abs(1.0 - m) * std::sqrt(wq(m, p.ell) * da * da + db * db);
  }
  return d;
}

double SurfaceDensityCurve::interp(double t) const {
  if (amplitudes.empty()) throw SurfaceError("empty curve");
  const double lo = amplitudes.front(), hi = amplitudes.back();
  if (t < lo - 1e-12 || t > hi + 1e-12)
    throw SurfaceError("amplitude outside the sampled range");
  if (t <= lo) return g_values.front();
  if (t >= hi) return g_values.back();
  const auto it = std::upper_bound(amplitudes.begin(), amplitudes.end(), t);
  const size_t k = size_t(it - amplitudes.begin());
  const double t0 = amplitudes[k - 1], t1 = amplitudes[k];
  const double lam = (t - t0) / (t1 - t0);
  return (1.0 - lam) * g_values[k - 1] + lam * g_values[k];
}

SurfaceDensityCurve gscal_curve(double ell, const std::vector<double>& amplitudes,
                                const std::vector<double>& T_ladder, int nodes_per_unit) {
  if (!(ell > 0)) throw SurfaceError("ell must be positive");
  if (amplitudes.empty()) throw SurfaceError("need at least one amplitude");
  for (size_t i = 0; i < amplitudes.size(); ++i) {
    if (!(amplitudes[i] >= 0)) throw SurfaceError("amplitudes must be >= 0");
    if (i > 0 && !(amplitudes[i] > amplitudes[i - 1]))
      throw SurfaceError("amplitudes must be strictly increasing");
  }
  if (T_ladder.size() < 2) throw SurfaceError("ladder needs at least two lengths");
  for (size_t k = 0; k < T_ladder.size(); ++k) {
    if (!(T_ladder[k] >= 4)) throw SurfaceError("ladder lengths must be >= 4");
    if (k > 0 && !(T_ladder[k] > T_ladder[k - 1]))
      throw SurfaceError("ladder must be strictly increasing");
  }
  if (nodes_per_unit < 16) throw SurfaceError("need at least 16 nodes per unit length");

  SurfaceDensityCurve curve;
  curve.ell = ell;
  curve.T_used = T_ladder.back();
  curve.amplitudes = amplitudes;
  curve.g_values.resize(amplitudes.size());
  curve.meta.resize(amplitudes.size());
  const size_t L = T_ladder.size();
  for (size_t i = 0; i < amplitudes.size(); ++i) {
    double g_prev = 0, g_last = 0;
    for (size_t k = 0; k < L; ++k) {
      const double T = T_ladder[k];
      const int N = int(std::lround(T * nodes_per_unit)) + 1;
      const double g = gscal_cell(amplitudes[i], ell, T, N).energy;
      if (k == L - 2) g_prev = g;
      if (k == L - 1) g_last = g;
    }
    curve.g_values[i] = g_last;
    CurvePointMeta& meta = curve.meta[i];
    meta.g_prev = g_prev;
    meta.g_last = g_last;
    const double ratio = T_ladder[L - 1] / T_ladder[L - 2];
    meta.richardson = g_last + (g_last - g_prev) / (ratio * ratio - 1.0);
    meta.rel_change = std::abs(g_last - g_prev) / std::max(std::abs(g_last), 1e-12);
    meta.converged = meta.rel_change <= 0.05;
  }
  return curve;
}

double competitor_upper_bound(double z_norm, double ell, double c_growth) {
  if (!(z_norm >= 0)) throw SurfaceError("jump size must be >= 0");
  if (!(ell > 0)) throw SurfaceError("ell must be positive");
  if (!(c_growth > 0)) throw SurfaceError("growth constant must be positive");
  const double lz = ell * z_norm;
  return lz < 1.0 ? (0.5 * c_growth + 3.0) * lz : 3.0;
}

double g_vectorial(const Vector& z, const Vector& nu, const MaterialLaw& law,
                   const SurfaceDensityCurve& curve) {
  if (z.size() != law.m) throw SurfaceError("jump vector size must match the law");
  if (nu.size() != law.n) throw SurfaceError("normal size must match the law");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw SurfaceError("normal must be unit length");
  if (std::abs(curve.ell - law.ell) > 1e-12 * (1.0 + law.ell))
    throw SurfaceError("curve was built for a different ell");
  double amp;
  if (law.kind == PsiKind::Custom) {
    if (!law.sliceable)
      throw SurfaceError("law is not sliceable; vectorial jump energy unsupported");
    check_quadratic_recession(law, nu);
    amp = std::sqrt(std::max(0.0, law.psi_recession(z * nu.transpose())));
  } else {
    amp = z.norm();  // recession of both builtins is the squared Frobenius norm
  }
  if (amp == 0.0) return 0.0;
  return curve.interp(amp);
}

SlicedCellProfile gscal_cell_sliced(const Vector& z, const Vector& nu,
                                    const MaterialLaw& law, double T, int N) {
  if (z.size() != law.m) throw SurfaceError("jump vector size must match the law");
  if (nu.size() != law.n) throw SurfaceError("normal size must match the law");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw SurfaceError("normal must be unit length");
  if (law.kind == PsiKind::Custom && !law.sliceable)
    throw SurfaceError("law is not sliceable; vectorial cell solve unsupported");
  check_quadratic_recession(law, nu);
  const double amp = std::sqrt(std::max(0.0, law.psi_recession(z * nu.transpose())));
  check_cell_args(amp, law.ell, T, N);
  const double ds = T / (N - 1);
  const double ell = law.ell;

  SlicedCellProfile p;
  p.T = T;
  p.N = N;
  p.ell = ell;
  Vector ramp;
  init_profiles(amp, ell, T, N, ramp, p.beta);
  p.alpha = ramp * z.transpose();
  Vector a(N - 1), r;
  for (int j = 0; j + 1 < N; ++j) {
    const double rr = (ramp[j + 1] - ramp[j]) / ds;
    a[j] = law.psi_recession((rr * z) * nu.transpose());
  }
  auto alpha_step = [&](const Vector& beta, Vector& acc) {
    const double s = alpha_weights(beta, ell, r);
    double run = 0;
    for (int j = 0; j + 1 < N; ++j) {
      p.alpha.row(j) = run * z.transpose();
      const double frac = r[j] / s;
      // per component spread is exact for quadratic recessions
      acc[j] = law.psi_recession((frac / ds) * z * nu.transpose());
      run += frac;
    }
    p.alpha.row(N - 1) = z.transpose();
  };
  alternate(p.beta, a, ds, ell, alpha_step, p.energy, p.rounds, p.stagnated,
            p.round_energies);
  return p;
}

}  // namespace cohesive
