#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>

namespace cohesive {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct MaterialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bulk elastic density Psi together with the yield threshold ell.
// Builtin kinds have closed-form evaluation and recession; custom kinds
// supply callables and get a numeric recession with a consistency check.
enum class PsiKind { EuclideanSquared, DistSqRotations, Custom };

struct MaterialLaw {
  PsiKind kind = PsiKind::EuclideanSquared;
  double ell = 1.0;    // critical stress, > 0
  int m = 1, n = 1;    // gradient arguments are m x n
  double growth_c = 1.0;  // c in (|xi|^2/c - c)+ <= Psi <= c(|xi|^2 + 1)

  // recession depends on rank-one arguments only through a quadratic form,
  // so jump energies reduce to the scalar cell problem (set for builtins;
  // opt-in for custom laws)
  bool sliceable = false;

  std::function<double(const Matrix&)> custom_psi;
  std::function<double(const Matrix&)> custom_psi_recession;  // optional

  static MaterialLaw euclidean(double ell, int m = 1, int n = 1);
  static MaterialLaw dist_sq_rotations(double ell, int n);  // square matrices, n in {2,3}
  static MaterialLaw custom(double ell, int m, int n, double growth_c,
                            std::function<double(const Matrix&)> psi,
                            std::function<double(const Matrix&)> psi_recession = {},
                            bool sliceable = false);

  void check_arg(const Matrix& xi) const;

  // Psi(xi)
  double psi(const Matrix& xi) const;
  // 2-homogeneous limit of Psi(t xi)/t^2 for t -> infinity; 0 at xi = 0.
  // Custom laws without a closed form are probed at t = 1e3, 1e4 and must
  // agree within 1%, else MaterialError.
  double psi_recession(const Matrix& xi) const;
  // h(xi) = min(Psi, ell * sqrt(Psi))
  double h(const Matrix& xi) const;
};

// distance^2 from xi to the rotation group, via singular values with the
// smallest one signed by det(xi)
double dist_sq_rotations(const Matrix& xi);

// damage coefficient f(s) = ell s / (1 - s), s in [0, 1)
double damage_f(double s, double ell);

// regularized coefficient: min(1, sqrt(eps) f(s)), with value 1 pinned at s = 1
double damage_f_eps(double s, double eps, double ell);

// smallest s with damage_f_eps(s) = 1: 1 / (1 + ell sqrt(eps))
double damage_threshold(double eps, double ell);

// scalar convex envelope of t^2 ^ (ell t) on [0, inf):
// t^2 for t <= ell/2, else ell t - ell^2/4
double hscal_convex(double t, double ell);

// primitive of (1 - s) on [0, t]: t - t^2/2
double transition_primitive(double t);

}  // namespace cohesive
