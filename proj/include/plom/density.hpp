#pragma once

#include <Eigen/Dense>

#include "plom/rng.hpp"

namespace plom {

struct Bandwidths {
  double s = 0.0;      // Silverman
  double s_hat = 0.0;  // modified, keeps the mixture at zero mean and unit covariance
};

Bandwidths bandwidths(Eigen::Index d, Eigen::Index N);

// Gaussian mixture with components centered at (s_hat/s) c_j and isotropic width s_hat.
class KdeModel {
 public:
  explicit KdeModel(Eigen::MatrixXd centers);

  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::MatrixXd& shifted_centers() const { return shifted_; }
  const Eigen::VectorXd& shifted_sqnorms() const { return shifted_sqnorm_; }
  double s() const { return bw_.s; }
  double s_hat() const { return bw_.s_hat; }
  double shrink() const { return bw_.s_hat / bw_.s; }
  Eigen::Index dim() const { return centers_.rows(); }
  Eigen::Index size() const { return centers_.cols(); }

 private:
  Eigen::MatrixXd centers_;
  Eigen::MatrixXd shifted_;
  Eigen::VectorXd shifted_sqnorm_;
  Bandwidths bw_;
};

// ||a_i - b_j||^2 for every column pair, from the dot-product expansion, clamped at 0.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double kde_logpdf(const KdeModel& model, const Eigen::VectorXd& point);
Eigen::VectorXd kde_logpdf(const KdeModel& model, const Eigen::MatrixXd& points);

// Gradient of the log-density at every column of points.
Eigen::MatrixXd kde_score(const KdeModel& model, const Eigen::MatrixXd& points);

// Exact draws from the mixture.
Eigen::MatrixXd kde_draw(const KdeModel& model, Eigen::Index count, Rng& rng);

// Density estimates for plotting, in the units of the samples. The kernel model is
// built on standardized values and mapped back.
struct Curve1D {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
};
Curve1D pdf_curve(const Eigen::VectorXd& samples, Eigen::Index points = 200);
Curve1D pdf_curve(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid);

struct Grid2D {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd p;  // p(i, j) at (x_i, y_j)
};
Grid2D pdf_grid(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index points = 60);

}  // namespace plom
