#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plom/dmaps.hpp"
#include "plom/partition.hpp"

namespace plom {

enum class InitialState {
  Auto,        // Training for a reduced basis, Stationary for the identity basis
  Training,    // Z0 = eta_d a
  Stationary,  // exact draw from the kernel mixture, projected on the basis
};

const char* to_string(InitialState s);
InitialState parse_initial_state(const std::string& name);

// Zero or negative values mean "derive from s_hat" (see resolve()).
struct IsdeConfig {
  double f0 = 4.0;
  double delta_r = 0.0;
  Eigen::Index n_burn = -1;
  Eigen::Index m0 = 0;
  Eigen::Index n_mc = 50;
  std::uint64_t seed = 1;
  InitialState init = InitialState::Auto;
  std::string stream = "isde";
  std::uint64_t stream_index = 0;
};

// delta_r = 2 pi s_hat / 20, n_burn = 4 ceil(1 / (f0 delta_r)), m0 = ceil(2 pi / (f0 delta_r)).
IsdeConfig resolve(const IsdeConfig& cfg, double s_hat);

enum class LearnMode { NoPlom, NoGroup, WithGroup };
const char* to_string(LearnMode m);
LearnMode parse_mode(const std::string& name);

struct Provenance {
  LearnMode mode = LearnMode::NoGroup;
  std::optional<Eigen::Index> group;
  bool constrained = false;
  IsdeConfig config;  // resolved values
};

struct LearnedSet {
  std::vector<Eigen::MatrixXd> samples;  // n_mc matrices, d x N
  Provenance provenance;

  Eigen::Index dim() const { return samples.empty() ? 0 : samples[0].rows(); }
  Eigen::Index size() const { return samples.empty() ? 0 : samples[0].cols(); }
  Eigen::Index n_ar() const { return static_cast<Eigen::Index>(samples.size()) * size(); }
  Eigen::MatrixXd reshaped() const;  // d x N_ar, sample matrices side by side
};

LearnedSet from_reshaped(const Eigen::MatrixXd& reshaped, Eigen::Index N);

// lambda (length d) adds the constraint potential sum_k lambda_k u_k^2.
LearnedSet sample_group(const Eigen::MatrixXd& centers, const DiffusionBasis& basis, const IsdeConfig& cfg,
                        const Eigen::VectorXd& lambda = Eigen::VectorXd());

enum class ConstraintHessian {
  SampleMatrix,  // N times the covariance of per-matrix averages of h
  Realization,   // covariance of h over all realizations, exact for independent columns
};

struct ConstraintOptions {
  double tol = 0.02;
  Eigen::Index max_iter = 20;
  double relax = 0.3;
  Eigen::Index n_mc_iter = 0;  // sample matrices per iteration, 0: same as the final run
  ConstraintHessian hessian = ConstraintHessian::SampleMatrix;
  double shrink = 0.5;          // off-diagonal Hessian entries are scaled by 1 - shrink
  double lambda_margin = 0.5;   // keep lambda_k >= -(1 - margin) / (2 s_hat^2), where the tilt stays normalizable
};

struct ConstraintState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd target;
  std::vector<double> err_history;  // accepted iterates, non-increasing after the third
  double relax = 0.3;
  Eigen::Index iterations = 0;      // including rejected retries
  Eigen::Index retries = 0;
  bool singular_fallback = false;
  bool converged = false;
  double final_err = 0.0;           // second-moment error of the returned set
};

struct ConstrainedResult {
  ConstraintState state;
  LearnedSet learned;
};

// Second-moment error ||1 - E{Y^2}|| / ||1|| over every retained realization.
double second_moment_error(const LearnedSet& ls);

ConstrainedResult enforce_constraints(const Eigen::MatrixXd& centers, const DiffusionBasis& basis,
                                      const IsdeConfig& cfg, const ConstraintOptions& opts = {});

struct GroupRun {
  Eigen::Index index = 0;
  std::vector<Eigen::Index> components;
  Eigen::Index m_o = 0;
  DiffusionBasis basis;
  std::vector<JumpSample> jump_curve;
  std::optional<ConstraintState> constraints;
  LearnedSet learned;
};

struct PartitionedLearning {
  LearnedSet learned;  // assembled, nu x N per sample matrix
  std::vector<GroupRun> groups;
};

PartitionedLearning learn_with_partition(const Eigen::MatrixXd& eta, const Partition& p, const IsdeConfig& cfg,
                                         bool constraints_on, const ConstraintOptions& copts = {},
                                         const SelectOptions& sopts = {});
PartitionedLearning learn_no_group(const Eigen::MatrixXd& eta, const IsdeConfig& cfg, const SelectOptions& sopts = {});
LearnedSet learn_no_plom(const Eigen::MatrixXd& eta, const IsdeConfig& cfg);

}  // namespace plom
