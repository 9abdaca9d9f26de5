#include "cohesive/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cohesive {

namespace {

constexpr double kFarFactor = 1e8;

// ---------- hull machinery ----------

// Lower convex hull of (x, y) with x strictly increasing; returns vertex
// indices with strictly increasing segment slopes.  Collinear middle points
// are dropped, so ties resolve toward the earlier sample.
void lower_hull(const std::vector<double>& x, const std::vector<double>& y,
                std::vector<int>& hull) {
  hull.clear();
  const int n = static_cast<int>(x.size());
  for (int j = 0; j < n; ++j) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      // pop b unless it is strictly below the chord a -> j
      const double lhs = (y[b] - y[a]) * (x[j] - x[b]);
      const double rhs = (y[j] - y[b]) * (x[b] - x[a]);
      if (lhs >= rhs)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(j);
  }
}

// evaluate the piecewise-linear hull at increasing query points
void eval_hull(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<int>& hull, const std::vector<double>& q,
               std::vector<double>& out) {
  out.resize(q.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    while (p + 1 < hull.size() && x[hull[p + 1]] < q[i]) ++p;
    if (p + 1 == hull.size()) {
      out[i] = y[hull[p]];
      continue;
    }
    const int a = hull[p], b = hull[p + 1];
    const double w = (q[i] - x[a]) / (x[b] - x[a]);
    out[i] = (1.0 - w) * y[a] + w * y[b];
  }
}

// Discrete Legendre transform of one column: out[i] = max_j (s_i x_j - y_j).
// With anchors, the column is extended on both sides by virtual far points
// continuing the outermost sampled slopes, which reproduces the conjugate of
// the linearly-extrapolated function and prices slopes outside the sampled
// recession out of the biconjugate.
struct ConjugateWorkspace {
  std::vector<double> xa, ya;
  std::vector<int> hull;
  std::vector<double> slopes;
};

void conjugate_column(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& s, std::vector<double>& out, bool anchors,
                      ConjugateWorkspace& ws) {
  const int n = static_cast<int>(x.size());
  const double far = kFarFactor * (1.0 + std::abs(x.back() - x.front()));
  ws.xa.clear();
  ws.ya.clear();
  if (anchors && n >= 2) {
    const double slope_lo = (y[1] - y[0]) / (x[1] - x[0]);
    ws.xa.push_back(x[0] - far);
    ws.ya.push_back(y[0] - slope_lo * far);
  }
  ws.xa.insert(ws.xa.end(), x.begin(), x.end());
  ws.ya.insert(ws.ya.end(), y.begin(), y.end());
  if (anchors && n >= 2) {
    const double slope_hi = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    ws.xa.push_back(x[n - 1] + far);
    ws.ya.push_back(y[n - 1] + slope_hi * far);
  }

  lower_hull(ws.xa, ws.ya, ws.hull);
  ws.slopes.resize(ws.hull.size() > 0 ? ws.hull.size() - 1 : 0);
  for (std::size_t p = 0; p + 1 < ws.hull.size(); ++p)
    ws.slopes[p] = (ws.ya[ws.hull[p + 1]] - ws.ya[ws.hull[p]]) /
                   (ws.xa[ws.hull[p + 1]] - ws.xa[ws.hull[p]]);

  out.resize(s.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (p < ws.slopes.size() && ws.slopes[p] < s[i]) ++p;
    const int a = ws.hull[p];
    out[i] = s[i] * ws.xa[a] - ws.ya[a];
  }
}

// one transform pass along `axis`: data -> sup_{x_axis} (s x_axis - phi),
// phi = (negate ? -data : data) viewed as a function of x_axis per row
void conjugate_pass(std::vector<double>& data, std::vector<int>& shape, int axis,
                    const std::vector<double>& in_nodes, const std::vector<double>& out_nodes,
                    bool negate, bool anchors) {
  const int d = static_cast<int>(shape.size());
  const int len_in = static_cast<int>(in_nodes.size());
  const int len_out = static_cast<int>(out_nodes.size());
  long long inner = 1, outer = 1;
  for (int k = axis + 1; k < d; ++k) inner *= shape[k];
  for (int k = 0; k < axis; ++k) outer *= shape[k];

  std::vector<double> result(static_cast<std::size_t>(outer) * len_out * inner);
  std::vector<double> col(len_in), conj(len_out);
  ConjugateWorkspace ws;

  for (long long o = 0; o < outer; ++o) {
    for (long long i = 0; i < inner; ++i) {
      const long long base_in = o * len_in * inner + i;
      for (int j = 0; j < len_in; ++j) {
        const double v = data[base_in + static_cast<long long>(j) * inner];
        col[j] = negate ? -v : v;
      }
      conjugate_column(in_nodes, col, out_nodes, conj, anchors, ws);
      const long long base_out = o * len_out * inner + i;
      for (int j = 0; j < len_out; ++j)
        result[base_out + static_cast<long long>(j) * inner] = conj[j];
    }
  }
  data.swap(result);
  shape[axis] = len_out;
}

std::vector<double> axis_nodes(const AxisSpec& ax) {
  std::vector<double> x(ax.count);
  for (int i = 0; i < ax.count; ++i) x[i] = ax.node(i);
  return x;
}

}  // namespace

// ---------- EnvelopeTable ----------

std::size_t EnvelopeTable::size() const {
  std::size_t total = 1;
  for (const auto& ax : axes) total *= ax.count;
  return total;
}

std::size_t EnvelopeTable::flat_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) flat = flat * axes[k].count + idx[k];
  return flat;
}

bool EnvelopeTable::covers(const std::vector<double>& point) const {
  if (point.size() != axes.size()) return false;
  for (std::size_t k = 0; k < axes.size(); ++k)
    if (point[k] < axes[k].lo || point[k] > axes[k].hi) return false;
  return true;
}

bool EnvelopeTable::interior(const std::vector<double>& point) const {
  if (point.size() != axes.size()) return false;
  const double trim = 0.5 * (1.0 - interior_fraction);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const double margin = trim * (axes[k].hi - axes[k].lo);
    if (point[k] < axes[k].lo + margin || point[k] > axes[k].hi - margin) return false;
  }
  return true;
}

double EnvelopeTable::interp(const std::vector<double>& point) const {
  if (!covers(point)) throw EnvelopeError("query point outside table range");
  const int d = static_cast<int>(axes.size());
  std::vector<int> cell(d);
  std::vector<double> frac(d);
  for (int k = 0; k < d; ++k) {
    const double rel = (point[k] - axes[k].lo) / axes[k].spacing();
    int i = static_cast<int>(std::floor(rel));
    i = std::clamp(i, 0, axes[k].count - 2);
    cell[k] = i;
    frac[k] = rel - i;
  }
  double acc = 0.0;
  std::vector<int> idx(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const int on = (corner >> k) & 1;
      idx[k] = cell[k] + on;
      w *= on ? frac[k] : (1.0 - frac[k]);
    }
    if (w != 0.0) acc += w * values[flat_index(idx)];
  }
  return acc;
}

double EnvelopeTable::interp_matrix(const Matrix& xi) const {
  if (xi.rows() != m || xi.cols() != n) throw EnvelopeError("matrix dims do not match table");
  std::vector<double> p(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p[static_cast<std::size_t>(i) * n + j] = xi(i, j);
  return interp(p);
}

// ---------- 1D envelope ----------

EnvelopeTable convex_envelope_1d(const std::function<double(double)>& f, double t_max,
                                 int samples) {
  if (samples < 16) throw EnvelopeError("convex_envelope_1d needs at least 16 samples");
  if (t_max <= 0) throw EnvelopeError("t_max must be positive");
  const double h = t_max / (samples - 1);
  const int padded = samples + (samples - 1) / 2;  // ends at or just below 1.5 t_max

  std::vector<double> x(padded), y(padded);
  for (int k = 0; k < padded; ++k) {
    x[k] = k * h;
    y[k] = f(x[k]);
    if (!std::isfinite(y[k]))
      throw EnvelopeError("non-finite sample at t = " + std::to_string(x[k]));
  }
  // recession anchor: continue the outermost sampled slope far to the right
  const double far = kFarFactor * (1.0 + x.back());
  const double slope_end = (y[padded - 1] - y[padded - 2]) / h;
  x.push_back(x.back() + far);
  y.push_back(y.back() + slope_end * far);

  std::vector<int> hull;
  lower_hull(x, y, hull);

  EnvelopeTable table;
  table.axes = {AxisSpec{0.0, t_max, samples}};
  table.kind = TableKind::Convex;
  table.m = 1;
  table.n = 1;
  table.law_name = "scalar";
  std::vector<double> q(samples);
  for (int k = 0; k < samples; ++k) q[k] = k * h;
  eval_hull(x, y, hull, q, table.values);

  table.certified = true;
  for (int k = 0; k < samples; ++k)
    if (table.values[k] > y[k] + 1e-6 * (1.0 + std::abs(y[k]))) table.certified = false;
  return table;
}

// ---------- grid envelope ----------

EnvelopeTable convex_envelope_grid_fn(const std::function<double(const Matrix&)>& f, int m, int n,
                                      const std::vector<AxisSpec>& axes) {
  const int d = static_cast<int>(axes.size());
  if (d != m * n) throw EnvelopeError("axis count must equal m*n");
  long long total = 1;
  for (const auto& ax : axes) {
    if (ax.count < 4) throw EnvelopeError("need >= 4 nodes per axis");
    total *= ax.count;
    if (total > 10'000'000) throw EnvelopeError("grid exceeds 1e7 points");
  }

  std::vector<int> shape(d);
  for (int k = 0; k < d; ++k) shape[k] = axes[k].count;

  // sample the raw density
  std::vector<double> raw(static_cast<std::size_t>(total));
  {
    Matrix xi(m, n);
    std::vector<int> idx(d, 0);
    for (long long flat = 0; flat < total; ++flat) {
      long long rem = flat;
      for (int k = d - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(rem % shape[k]);
        rem /= shape[k];
      }
      for (int k = 0; k < d; ++k) xi(k / n, k % n) = axes[k].node(idx[k]);
      const double v = f(xi);
      if (!std::isfinite(v)) throw EnvelopeError("non-finite density sample");
      raw[flat] = v;
    }
  }

  // slope grids: global per-axis finite-difference slope range with margin
  std::vector<std::vector<double>> xg(d), sg(d);
  for (int k = 0; k < d; ++k) xg[k] = axis_nodes(axes[k]);
  for (int k = 0; k < d; ++k) {
    long long inner = 1, outer = 1;
    for (int j = k + 1; j < d; ++j) inner *= shape[j];
    for (int j = 0; j < k; ++j) outer *= shape[j];
    const double h = axes[k].spacing();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (long long o = 0; o < outer; ++o)
      for (long long i = 0; i < inner; ++i) {
        const long long base = o * shape[k] * inner + i;
        for (int j = 0; j + 1 < shape[k]; ++j) {
          const double fd =
              (raw[base + (j + 1LL) * inner] - raw[base + static_cast<long long>(j) * inner]) / h;
          lo = std::min(lo, fd);
          hi = std::max(hi, fd);
        }
      }
    const double margin = 0.02 * (hi - lo) + 1e-12;
    lo -= margin;
    hi += margin;
    sg[k].resize(shape[k]);
    for (int j = 0; j < shape[k]; ++j)
      sg[k][j] = lo + (hi - lo) * j / (shape[k] - 1);
  }

  // Conjugate, then biconjugate.  Far anchors (linear continuation past the
  // window at the terminal difference quotient) are sound only for a single
  // axis, where that quotient is the recession slope; for d >= 2 the edge
  // quotient of a column underestimates the column's recession and anchors
  // pull the envelope below the true hull, so multi-axis grids use the plain
  // windowed transform (which can only overestimate, by a chord error that
  // decays with the window radius).
  const bool anchors = (d == 1);

  // The anchored tail is priced exactly at the terminal difference quotients,
  // so those two slopes must sit on the dual lattice: otherwise a linear
  // branch gets supported half a slope step off its recession and comes back
  // with a first-order error growing toward the window edge. Each snap moves
  // the nearest lattice entry by at most half a step, so order is kept.
  if (anchors && shape[0] >= 2) {
    const double h0 = axes[0].spacing();
    for (double q : {(raw[1] - raw[0]) / h0,
                     (raw[shape[0] - 1] - raw[shape[0] - 2]) / h0}) {
      auto& s = sg[0];
      auto it = std::min_element(s.begin(), s.end(), [q](double a, double b) {
        return std::abs(a - q) < std::abs(b - q);
      });
      *it = q;
    }
    std::sort(sg[0].begin(), sg[0].end());
  }

  std::vector<double> work = raw;
  std::vector<int> wshape = shape;
  for (int k = 0; k < d; ++k) conjugate_pass(work, wshape, k, xg[k], sg[k], k > 0, anchors);
  for (int k = 0; k < d; ++k) conjugate_pass(work, wshape, k, sg[k], xg[k], k > 0, false);

  EnvelopeTable table;
  table.axes = axes;
  table.values = std::move(work);
  table.kind = TableKind::Convex;
  table.m = m;
  table.n = n;

  // certify envelope <= raw on the interior region
  table.certified = true;
  {
    std::vector<int> idx(d, 0);
    for (long long flat = 0; flat < total; ++flat) {
      long long rem = flat;
      bool inside = true;
      for (int k = d - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(rem % shape[k]);
        rem /= shape[k];
        const int margin = static_cast<int>(0.1 * (shape[k] - 1));
        if (idx[k] < margin || idx[k] > shape[k] - 1 - margin) inside = false;
      }
      if (!inside) continue;
      if (table.values[flat] > raw[flat] + 1e-6 * (1.0 + std::abs(raw[flat]))) {
        table.certified = false;
        break;
      }
    }
  }
  return table;
}

EnvelopeTable convex_envelope_grid(const MaterialLaw& law, const std::vector<AxisSpec>& axes) {
  auto table = convex_envelope_grid_fn([&law](const Matrix& xi) { return law.h(xi); }, law.m,
                                       law.n, axes);
  table.ell = law.ell;
  table.law_name = law.kind == PsiKind::EuclideanSquared  ? "euclidean"
                   : law.kind == PsiKind::DistSqRotations ? "dist_sq_rotations"
                                                          : "custom";
  // h >= 0, so its envelope is too; drop rounding dust from the transforms
  for (auto& v : table.values) v = std::max(v, 0.0);
  return table;
}

// ---------- lamination ----------

namespace {

std::vector<Vector> sphere_sample(int dim, int count) {
  std::vector<Vector> out;
  if (dim == 1) {
    Vector p(1), q(1);
    p << 1.0;
    q << -1.0;
    out = {p, q};
    return out;
  }
  if (dim == 2) {
    out.reserve(count);
    for (int j = 0; j < count; ++j) {
      const double th = 2.0 * M_PI * j / count;
      Vector v(2);
      v << std::cos(th), std::sin(th);
      out.push_back(v);
    }
    return out;
  }
  // Fibonacci spiral on S^2
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    const double z = 1.0 - 2.0 * (j + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = ga * j;
    Vector v(3);
    v << r * std::cos(phi), r * std::sin(phi), z;
    out.push_back(v);
  }
  return out;
}

struct SplitParams {
  double t = 1.0, la = 0.5;
  Vector a, b;
};

struct LamContext {
  const MaterialLaw* law = nullptr;
  std::vector<int> budgets;  // budgets[level], level >= 1
};

double lam_value(const Matrix& xi, int level, const LamContext& ctx);

double split_value_children(const Matrix& xi, const SplitParams& p, int child_level,
                            const LamContext& ctx) {
  const Matrix c = p.t * p.a * p.b.transpose();
  const Matrix x1 = xi + (1.0 - p.la) * c;
  const Matrix x2 = xi - p.la * c;
  if (child_level == 0) return p.la * ctx.law->h(x1) + (1.0 - p.la) * ctx.law->h(x2);
  return p.la * lam_value(x1, child_level, ctx) + (1.0 - p.la) * lam_value(x2, child_level, ctx);
}

// keep the K best (by cheap value) distinct candidates
struct TopK {
  std::vector<std::pair<double, SplitParams>> items;
  std::size_t cap = 6;
  void offer(double val, const SplitParams& p) {
    if (items.size() == cap && val >= items.back().first) return;
    items.emplace_back(val, p);
    std::sort(items.begin(), items.end(),
              [](const auto& u, const auto& v) { return u.first < v.first; });
    if (items.size() > cap) items.pop_back();
  }
};

double nelder_mead(std::vector<double> x0, const std::function<double(const std::vector<double>&)>& f,
                   int iters, std::vector<double>* xbest) {
  const int n = static_cast<int>(x0.size());
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += 0.25;
  std::vector<double> fv(n + 1);
  for (int i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  for (int it = 0; it < iters; ++it) {
    std::vector<int> ord(n + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int u, int v) { return fv[u] < fv[v]; });
    std::vector<std::vector<double>> snew(n + 1);
    std::vector<double> fnew(n + 1);
    for (int i = 0; i <= n; ++i) {
      snew[i] = simplex[ord[i]];
      fnew[i] = fv[ord[i]];
    }
    simplex.swap(snew);
    fv.swap(fnew);

    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) centroid[k] += simplex[i][k] / n;

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (int k = 0; k < n; ++k) p[k] = centroid[k] + coef * (simplex[n][k] - centroid[k]);
      return p;
    };
    auto refl = blend(-1.0);
    const double fr = f(refl);
    if (fr < fv[0]) {
      auto exp_p = blend(-2.0);
      const double fe = f(exp_p);
      if (fe < fr) {
        simplex[n] = exp_p;
        fv[n] = fe;
      } else {
        simplex[n] = refl;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = refl;
      fv[n] = fr;
    } else {
      auto con = blend(0.5);
      const double fc = f(con);
      if (fc < fv[n]) {
        simplex[n] = con;
        fv[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          for (int k = 0; k < n; ++k) simplex[i][k] = 0.5 * (simplex[i][k] + simplex[0][k]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  if (xbest) *xbest = simplex[best];
  return fv[best];
}

double best_split(const Matrix& xi, int level, const LamContext& ctx) {
  const MaterialLaw& law = *ctx.law;
  const int m = law.m, n = law.n;
  const int budget = ctx.budgets[level];
  const double scale = xi.norm() + law.ell;

  SplitParams cur;
  {
    Eigen::JacobiSVD<Matrix> svd(xi, Eigen::ComputeFullU | Eigen::ComputeFullV);
    cur.a = svd.matrixU().col(0);
    cur.b = svd.matrixV().col(0);
    if (xi.norm() == 0.0) {
      cur.a = Vector::Zero(m);
      cur.a[0] = 1.0;
      cur.b = Vector::Zero(n);
      cur.b[0] = 1.0;
    }
  }
  cur.t = scale;
  cur.la = 0.5;

  std::vector<double> tlist(33), lalist(33);
  for (int i = 0; i < 33; ++i) {
    tlist[i] = 0.02 * scale * std::pow(8.0 / 0.02, i / 32.0);
    lalist[i] = (i + 1) / 34.0;
  }
  const auto alist = sphere_sample(m, budget);
  const auto blist = sphere_sample(n, budget);

  auto cheap = [&](const SplitParams& p) { return split_value_children(xi, p, 0, ctx); };

  TopK top;
  double cur_val = cheap(cur);
  top.offer(cur_val, cur);
  auto try_param = [&](const SplitParams& p) {
    const double v = cheap(p);
    top.offer(v, p);
    if (v < cur_val) {
      cur_val = v;
      cur = p;
    }
  };

  for (int round = 0; round < 2; ++round) {
    // the useful splits pair large t with small lambda (or vice versa), so t
    // and lambda must be swept jointly; separate sweeps stall at tiny t
    for (double t : tlist) {
      for (double la : lalist) {
        SplitParams p = cur;
        p.t = t;
        p.la = la;
        try_param(p);
      }
    }
    for (const auto& a : alist) {
      SplitParams p = cur;
      p.a = a;
      try_param(p);
    }
    for (const auto& b : blist) {
      SplitParams p = cur;
      p.b = b;
      try_param(p);
    }
  }

  // polish the incumbent on the cheap objective
  {
    auto unpack = [&](const std::vector<double>& z) {
      SplitParams p = cur;
      p.t = std::exp(z[0]);
      p.la = 1.0 / (1.0 + std::exp(-z[1]));
      if (z.size() >= 4 && m == 2 && n == 2) {
        p.a << std::cos(z[2]), std::sin(z[2]);
        p.b << std::cos(z[3]), std::sin(z[3]);
      }
      return p;
    };
    std::vector<double> z0 = {std::log(std::max(cur.t, 1e-12)),
                              std::log(cur.la / (1.0 - cur.la))};
    if (m == 2 && n == 2) {
      z0.push_back(std::atan2(cur.a[1], cur.a[0]));
      z0.push_back(std::atan2(cur.b[1], cur.b[0]));
    }
    std::vector<double> zb;
    nelder_mead(z0, [&](const std::vector<double>& z) { return cheap(unpack(z)); }, 120, &zb);
    try_param(unpack(zb));
  }

  // honest value: re-evaluate the shortlist with true recursive children
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [cv, p] : top.items)
    best = std::min(best, split_value_children(xi, p, level - 1, ctx));
  return best;
}

double lam_value(const Matrix& xi, int level, const LamContext& ctx) {
  if (level == 0) return ctx.law->h(xi);
  const double base = lam_value(xi, level - 1, ctx);
  const double split = best_split(xi, level, ctx);
  return std::min(base, split);
}

LamContext make_context(const MaterialLaw& law, int depth, int split_budget) {
  if (depth < 0 || depth > 4) throw EnvelopeError("lamination depth must be in [0, 4]");
  if (split_budget < 1) throw EnvelopeError("split_budget must be positive");
  LamContext ctx;
  ctx.law = &law;
  ctx.budgets.resize(depth + 1, 0);
  int b = split_budget;
  for (int level = depth; level >= 1; --level) {
    ctx.budgets[level] = std::max(b, 24);
    b /= 8;
  }
  return ctx;
}

}  // namespace

double lamination_envelope(const MaterialLaw& law, const Matrix& xi, int depth, int split_budget) {
  law.check_arg(xi);
  const LamContext ctx = make_context(law, depth, split_budget);
  return lam_value(xi, depth, ctx);
}

std::vector<double> lamination_profile(const MaterialLaw& law, const Matrix& xi, int depth,
                                       int split_budget) {
  law.check_arg(xi);
  const LamContext ctx = make_context(law, depth, split_budget);
  std::vector<double> out(depth + 1);
  out[0] = law.h(xi);
  for (int level = 1; level <= depth; ++level)
    out[level] = std::min(out[level - 1], best_split(xi, level, ctx));
  return out;
}

EnvelopeTable lamination_table(const MaterialLaw& law, const std::vector<AxisSpec>& axes,
                               int depth, int split_budget) {
  const int d = static_cast<int>(axes.size());
  if (d != law.m * law.n) throw EnvelopeError("axis count must equal m*n");
  long long total = 1;
  for (const auto& ax : axes) {
    if (ax.count < 2) throw EnvelopeError("need >= 2 nodes per axis");
    total *= ax.count;
    if (total > 100'000) throw EnvelopeError("lamination grid exceeds 1e5 points");
  }
  EnvelopeTable table;
  table.axes = axes;
  table.kind = TableKind::Lamination;
  table.depth = depth;
  table.m = law.m;
  table.n = law.n;
  table.ell = law.ell;
  table.law_name = law.kind == PsiKind::EuclideanSquared  ? "euclidean"
                   : law.kind == PsiKind::DistSqRotations ? "dist_sq_rotations"
                                                          : "custom";
  table.values.resize(static_cast<std::size_t>(total));
  std::vector<int> shape(d);
  for (int k = 0; k < d; ++k) shape[k] = axes[k].count;
  Matrix xi(law.m, law.n);
  std::vector<int> idx(d, 0);
  for (long long flat = 0; flat < total; ++flat) {
    long long rem = flat;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % shape[k]);
      rem /= shape[k];
    }
    for (int k = 0; k < d; ++k) xi(k / law.n, k % law.n) = axes[k].node(idx[k]);
    table.values[flat] = lamination_envelope(law, xi, depth, split_budget);
  }
  table.certified = true;  // by construction <= h at every node
  return table;
}

// ---------- recession ----------

RayProbe RayProbe::standard(const Matrix& direction) {
  RayProbe probe;
  probe.direction = direction;
  const int count = 49;
  probe.radii.resize(count);
  for (int i = 0; i < count; ++i) probe.radii[i] = std::pow(10.0, 4.0 * i / (count - 1));
  return probe;
}

void RayProbe::validate_unit() const {
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw EnvelopeError("probe direction must have unit Frobenius norm");
}

namespace {
double ls_slope(const std::vector<double>& r, const std::vector<double>& v) {
  const int n = static_cast<int>(r.size());
  double sr = 0, sv = 0, srr = 0, srv = 0;
  for (int i = 0; i < n; ++i) {
    sr += r[i];
    sv += v[i];
    srr += r[i] * r[i];
    srv += r[i] * v[i];
  }
  const double det = n * srr - sr * sr;
  if (det == 0) throw EnvelopeError("degenerate radii for slope fit");
  return (n * srv - sr * sv) / det;
}
}  // namespace

double recession_slope(const std::function<double(const Matrix&)>& value, const Matrix& direction,
                       const std::vector<double>& radii) {
  if (radii.size() < 4) throw EnvelopeError("need at least 4 radii");
  if (!std::is_sorted(radii.begin(), radii.end()))
    throw EnvelopeError("radii must be increasing");
  const double rmax = radii.back();
  if (radii.front() <= 0 || rmax / radii.front() < 99.0)
    throw EnvelopeError("radii must span at least two decades");

  std::vector<double> r_top, v_top, r_prev, v_prev;
  for (double r : radii) {
    const double v = value(r * direction);
    if (!std::isfinite(v)) throw EnvelopeError("non-finite ray value");
    if (r >= rmax / 10.0) {
      r_top.push_back(r);
      v_top.push_back(v);
    } else if (r >= rmax / 100.0) {
      r_prev.push_back(r);
      v_prev.push_back(v);
    }
  }
  if (r_top.size() < 2 || r_prev.size() < 2)
    throw EnvelopeError("need at least two radii in each of the top two decades");
  const double s_top = ls_slope(r_top, v_top);
  const double s_prev = ls_slope(r_prev, v_prev);
  const double ref = std::max({std::abs(s_top), std::abs(s_prev), 1e-12});
  if (std::abs(s_top - s_prev) > 0.05 * ref)
    throw EnvelopeError("recession slope estimates across decades differ by more than 5%");
  return s_top;
}

double recession_slope(const std::function<double(const Matrix&)>& value, const RayProbe& probe) {
  return recession_slope(value, probe.direction, probe.radii);
}

}  // namespace cohesive
