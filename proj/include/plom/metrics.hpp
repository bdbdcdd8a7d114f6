#pragma once

#include <vector>

#include <Eigen/Dense>

namespace plom {

// Mean over sample matrices of ||H_l - eta_d||_F^2 / ||eta_d||_F^2.
double d2_no_group(const std::vector<Eigen::MatrixXd>& samples, const Eigen::MatrixXd& eta_d);

struct GroupSamples {
  const std::vector<Eigen::MatrixXd>* samples = nullptr;
  const Eigen::MatrixXd* eta_d = nullptr;
};

struct GroupDistance {
  std::vector<double> per_group;
  std::vector<Eigen::Index> dims;
  double d2_wg = 0.0;      // sum_i (nu_i / nu) d2_i
  double d2_direct = 0.0;  // distance of the stacked matrices
};

// nu_total = 0 skips the coverage check.
GroupDistance d2_with_group(const std::vector<GroupSamples>& groups, Eigen::Index nu_total = 0);
double d2_weighted(const std::vector<double>& d2, const std::vector<Eigen::Index>& dims);

struct Bound {
  double eps = 0.0;
  double raw = 0.0;
  double clamped = 0.0;  // min(raw, 1)
};

// One value: d2 / eps. Several: prod_i (d2_i / eps) = (r / eps)^{n_p}, r the geometric mean.
std::vector<Bound> markov_bounds(const std::vector<double>& d2, const std::vector<double>& eps);
double geometric_mean(const std::vector<double>& values);

bool gain_check(double d2_wg, double d2_ng);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // 1 / (N_ar - 1) estimator
};

Moments moment_report(const Eigen::MatrixXd& learned);
Moments moment_report(const std::vector<Eigen::MatrixXd>& samples);

}  // namespace plom
