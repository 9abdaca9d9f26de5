#include "cohesive/material_law.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace cohesive {

MaterialLaw MaterialLaw::euclidean(double ell, int m, int n) {
  if (ell <= 0) throw MaterialError("ell must be positive");
  MaterialLaw law;
  law.kind = PsiKind::EuclideanSquared;
  law.ell = ell;
  law.m = m;
  law.n = n;
  law.growth_c = 1.0;
  law.sliceable = true;
  return law;
}

MaterialLaw MaterialLaw::dist_sq_rotations(double ell, int n) {
  if (ell <= 0) throw MaterialError("ell must be positive");
  if (n != 2 && n != 3) throw MaterialError("rotation distance law needs n in {2,3}");
  MaterialLaw law;
  law.kind = PsiKind::DistSqRotations;
  law.ell = ell;
  law.m = n;
  law.n = n;
  law.growth_c = 2.0 * n;  // dist^2 <= 2(|xi|^2 + n), and >= (|xi| - sqrt(n))^2
  law.sliceable = true;    // recession is the squared Frobenius norm
  return law;
}

MaterialLaw MaterialLaw::custom(double ell, int m, int n, double growth_c,
                                std::function<double(const Matrix&)> psi,
                                std::function<double(const Matrix&)> psi_recession,
                                bool sliceable) {
  if (ell <= 0) throw MaterialError("ell must be positive");
  if (!psi) throw MaterialError("custom law needs a density callable");
  MaterialLaw law;
  law.kind = PsiKind::Custom;
  law.ell = ell;
  law.m = m;
  law.n = n;
  law.growth_c = growth_c;
  law.custom_psi = std::move(psi);
  law.custom_psi_recession = std::move(psi_recession);
  law.sliceable = sliceable;
  return law;
}

void MaterialLaw::check_arg(const Matrix& xi) const {
  if (xi.rows() != m || xi.cols() != n)
    throw MaterialError("argument is " + std::to_string(xi.rows()) + "x" +
                        std::to_string(xi.cols()) + ", law expects " +
                        std::to_string(m) + "x" + std::to_string(n));
}

double dist_sq_rotations(const Matrix& xi) {
  if (xi.rows() != xi.cols()) throw MaterialError("rotation distance needs a square matrix");
  const int n = static_cast<int>(xi.rows());
  Eigen::JacobiSVD<Matrix> svd(xi);
  const Vector& s = svd.singularValues();  // descending, nonnegative
  double signed_sum = 0.0;
  for (int i = 0; i + 1 < n; ++i) signed_sum += s[i];
  signed_sum += (xi.determinant() >= 0.0 ? s[n - 1] : -s[n - 1]);
  return xi.squaredNorm() + n - 2.0 * signed_sum;
}

double MaterialLaw::psi(const Matrix& xi) const {
  check_arg(xi);
  switch (kind) {
    case PsiKind::EuclideanSquared:
      return xi.squaredNorm();
    case PsiKind::DistSqRotations:
      return cohesive::dist_sq_rotations(xi);
    case PsiKind::Custom:
      return custom_psi(xi);
  }
  throw MaterialError("unreachable");
}

double MaterialLaw::psi_recession(const Matrix& xi) const {
  check_arg(xi);
  if (xi.squaredNorm() == 0.0) return 0.0;
  switch (kind) {
    case PsiKind::EuclideanSquared:
    case PsiKind::DistSqRotations:
      // dist(t xi, rotations)^2 / t^2 -> |xi|^2
      return xi.squaredNorm();
    case PsiKind::Custom: {
      if (custom_psi_recession) return custom_psi_recession(xi);
      const double t1 = 1e3, t2 = 1e4;
      const double r1 = custom_psi(t1 * xi) / (t1 * t1);
      const double r2 = custom_psi(t2 * xi) / (t2 * t2);
      const double scale = std::max({std::abs(r1), std::abs(r2), 1e-30});
      if (std::abs(r1 - r2) > 0.01 * scale)
        throw MaterialError("recession probes at t=1e3 and t=1e4 disagree by more than 1%");
      return r2;
    }
  }
  throw MaterialError("unreachable");
}

double MaterialLaw::h(const Matrix& xi) const {
  const double p = psi(xi);
  return std::min(p, ell * std::sqrt(p));
}

double damage_f(double s, double ell) {
  if (s < 0.0 || s >= 1.0) throw MaterialError("damage_f needs s in [0, 1)");
  return ell * s / (1.0 - s);
}

double damage_f_eps(double s, double eps, double ell) {
  if (s < 0.0 || s > 1.0) throw MaterialError("damage_f_eps needs s in [0, 1]");
  if (eps <= 0.0) throw MaterialError("damage_f_eps needs eps > 0");
  if (s == 1.0) return 1.0;
  return std::min(1.0, std::sqrt(eps) * damage_f(s, ell));
}

double damage_threshold(double eps, double ell) {
  if (eps <= 0.0) throw MaterialError("damage_threshold needs eps > 0");
  return 1.0 / (1.0 + ell * std::sqrt(eps));
}

double hscal_convex(double t, double ell) {
  if (t < 0.0) throw MaterialError("hscal_convex needs t >= 0");
  if (t <= 0.5 * ell) return t * t;
  return ell * t - 0.25 * ell * ell;
}

double transition_primitive(double t) { return t - 0.5 * t * t; }

}  // namespace cohesive
