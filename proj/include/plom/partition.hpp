#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace plom {

using Group = std::vector<Eigen::Index>;

struct MutualInfoMatrix {
  Eigen::MatrixXd mi;  // symmetric, zero diagonal, >= 0
  double s = 0.0;      // bandwidths of the bivariate model; marginals use the same kernel
  double s_hat = 0.0;
};

// Resubstitution estimate H(j) + H(k) - H(j,k) under the bivariate kernel model of each
// pair; the marginal entropies use the exact marginals of that model.
MutualInfoMatrix pairwise_mi(const Eigen::MatrixXd& eta);
double pair_mi(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Estimates for pairs made independent by shuffling one component.
std::vector<double> null_mi_samples(const Eigen::MatrixXd& eta, int count, std::uint64_t seed);

enum class TauForm {
  Node,    // worst share of a component's dependence cut by the partition
  Global,  // cut dependence over total dependence
};

struct TauPoint {
  double level = 0.0;
  double tau = 0.0;
  Eigen::Index groups = 0;
};

struct TauCurve {
  std::vector<TauPoint> points;
  bool degenerate = false;  // no dependence left: tau is identically 0
};

std::vector<Group> threshold_groups(const Eigen::MatrixXd& mi, double level);
double tau_of(const Eigen::MatrixXd& mi, const std::vector<Group>& groups, TauForm form);
TauCurve tau_curve(const Eigen::MatrixXd& mi, const std::vector<double>& levels, TauForm form = TauForm::Node);
std::vector<double> default_levels(const Eigen::MatrixXd& mi, int count = 60);

struct PartitionOptions {
  double tau_tol = 0.05;
  int levels = 60;
  TauForm tau_form = TauForm::Node;
  int null_samples = 64;
  double null_sigmas = 5.0;  // entries below mean + k sd of the shuffled-pair estimates count as 0
  std::uint64_t seed = 1;
};

struct Partition {
  std::vector<Group> groups;  // 0-based, sorted within and by first index
  double i_ref_opt = 0.0;
  double i_ref_low = 0.0;     // smallest grid level giving the same grouping
  double mi_floor = 0.0;
  std::vector<TauPoint> tau_curve;

  Eigen::Index dim() const;
  Eigen::Index count() const { return static_cast<Eigen::Index>(groups.size()); }
  std::vector<Eigen::Index> sizes() const;
};

Partition single_group(Eigen::Index nu);
void validate(const Partition& p, Eigen::Index nu);

// Mean plus null_sigmas deviations of the shuffled-pair estimates; 0 with fewer than two.
double mi_null_floor(const Eigen::MatrixXd& eta, const PartitionOptions& opts = {});

Partition select_partition(const Eigen::MatrixXd& eta, const PartitionOptions& opts = {});
Partition select_partition(const MutualInfoMatrix& mi, double mi_floor, const PartitionOptions& opts = {});

std::vector<Eigen::MatrixXd> split(const Eigen::MatrixXd& m, const Partition& p);
Eigen::MatrixXd assemble(const std::vector<Eigen::MatrixXd>& parts, const Partition& p);

}  // namespace plom
