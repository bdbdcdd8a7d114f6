#pragma once

#include <vector>

#include <Eigen/Dense>

namespace plom {

struct DiffusionBasis {
  double eps_dm = 0.0;
  Eigen::VectorXd eigvals;  // descending, eigvals(0) = 1
  Eigen::MatrixXd g;        // N x m, columns psi^1..psi^m
  Eigen::Index m = 0;
  Eigen::VectorXd b_diag;
  bool identity = false;    // m = N and g = I: the unreduced generator

  Eigen::Index size() const { return g.rows(); }
};

// Full eigen-decomposition of the transition matrix at eps_dm, basis truncated to m columns.
DiffusionBasis transition_eigs(const Eigen::MatrixXd& eta, double eps_dm, Eigen::Index m);
DiffusionBasis identity_basis(Eigen::Index N);

// Transition eigenvalues (descending) from precomputed squared distances.
Eigen::VectorXd transition_eigenvalues(const Eigen::MatrixXd& sqdist, double eps_dm);

double jump(const Eigen::MatrixXd& eta, double eps_dm, Eigen::Index m_o);
double jump(const Eigen::VectorXd& eigvals, Eigen::Index m_o);

struct JumpSample {
  double eps = 0.0;
  double jump = 0.0;
  double lambda2 = 0.0;
  double plateau = 0.0;  // lambda_2 / lambda_{m_o}
  double gap = 0.0;      // largest of lambda_{m_o - 1} / lambda_{m_o} and lambda_{m_o} / lambda_{m_o + 1}
  bool accepted = false;
};

struct SelectOptions {
  double jump_threshold = 0.1;
  double gap_min = 3.0;          // see JumpSample::gap
  double lambda2_margin = 0.1;   // lambda_2 < 1 - margin
  double grid_ratio = 1.1;
  double grid_lo = 0.1;          // in units of the squared median pairwise distance
  double grid_hi = 1e4;
  int coarse_stride = 4;
  double rel_tol = 1e-3;
  Eigen::Index m_o = 0;          // 0: nu + 1
};

struct BasisSelection {
  DiffusionBasis basis;
  Eigen::Index m_o = 0;
  double median_sqdist = 0.0;
  std::vector<JumpSample> curve;  // every evaluated eps, ascending
  bool lambda2_monotone = true;
};

// Smallest eps on the search grid with Jump <= 0.1, lambda_2 away from 1 and a clear
// drop after lambda_{m_o}. Coarse scan, then the fine grid, then bisection.
// nu = 1 returns the identity basis.
BasisSelection select_basis(const Eigen::MatrixXd& eta, const SelectOptions& opts = {});

std::vector<JumpSample> jump_curve(const Eigen::MatrixXd& eta, const std::vector<double>& eps,
                                   Eigen::Index m_o, const SelectOptions& opts = {});

}  // namespace plom
