#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace cohesive {

// Thomas algorithm for a tridiagonal system. sub[i] couples row i to i-1
// (sub[0] unused), sup[i] couples row i to i+1 (last unused). diag and rhs
// are overwritten; the solution lands in rhs.
inline void solve_tridiag(Eigen::VectorXd& sub, Eigen::VectorXd& diag,
                          Eigen::VectorXd& sup, Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  if (n == 0) return;
  if (sub.size() != n || sup.size() != n || rhs.size() != n)
    throw std::invalid_argument("tridiagonal bands disagree in length");
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i)
    rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace cohesive
