#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plom {

enum class ScalingMethod { None, MinMax, Standardize };

const char* to_string(ScalingMethod m);
ScalingMethod parse_scaling(const std::string& name);

// x_scaled = (x - offset) / factor, row by row.
struct RowScaling {
  ScalingMethod method = ScalingMethod::None;
  Eigen::VectorXd offset;
  Eigen::VectorXd factor;
};

struct TrainingSet {
  Eigen::MatrixXd data;  // n x N, one realization per column
  RowScaling scaling;
  std::vector<std::string> labels;

  Eigen::Index dim() const { return data.rows(); }
  Eigen::Index size() const { return data.cols(); }
};

TrainingSet scale_training(const Eigen::MatrixXd& raw, ScalingMethod method = ScalingMethod::MinMax,
                           std::vector<std::string> labels = {});
Eigen::MatrixXd apply_scaling(const RowScaling& s, const Eigen::MatrixXd& raw);
Eigen::MatrixXd unscale(const RowScaling& s, const Eigen::MatrixXd& scaled);

enum class PcaSolver { Auto, ThinSvd, Covariance };

struct PcaModel {
  Eigen::VectorXd mean;    // n
  Eigen::VectorXd eigvals; // nu, non-increasing, > 0
  Eigen::MatrixXd basis;   // n x nu, orthonormal columns
  Eigen::Index nu = 0;
  double eps_pca = 0.0;
  double err_pca = 0.0;
  double trace = 0.0;
  RowScaling scaling;
};

struct LatentSet {
  Eigen::MatrixXd eta;  // nu x N
  std::shared_ptr<const PcaModel> pca;

  Eigen::Index dim() const { return eta.rows(); }
  Eigen::Index size() const { return eta.cols(); }
};

struct PcaResult {
  std::shared_ptr<const PcaModel> model;
  LatentSet latent;
};

constexpr double kDefaultEpsPca = 1e-3;

PcaResult pca_reduce(const TrainingSet& ts, double eps_pca = kDefaultEpsPca,
                     PcaSolver solver = PcaSolver::Auto);

// Columns x_bar + Phi mu^{1/2} eta, mapped back through the stored row scaling.
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& eta_samples);

// Wraps an already normalized latent matrix without running the reduction.
LatentSet latent_from_matrix(Eigen::MatrixXd eta);

}  // namespace plom
