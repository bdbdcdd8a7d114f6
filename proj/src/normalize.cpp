#include "plom/normalize.hpp"

#include <cmath>
#include <limits>

#include "plom/error.hpp"

namespace plom {

const char* to_string(ScalingMethod m) {
  switch (m) {
    case ScalingMethod::None: return "none";
    case ScalingMethod::MinMax: return "minmax";
    case ScalingMethod::Standardize: return "standardize";
  }
  return "none";
}

ScalingMethod parse_scaling(const std::string& name) {
  if (name == "none") return ScalingMethod::None;
  if (name == "minmax" || name == "min-max") return ScalingMethod::MinMax;
  if (name == "standardize") return ScalingMethod::Standardize;
  throw Error(Errc::ConfigInvalid, "unknown scaling method '" + name + "'");
}

TrainingSet scale_training(const Eigen::MatrixXd& raw, ScalingMethod method,
                           std::vector<std::string> labels) {
  const Eigen::Index n = raw.rows(), N = raw.cols();
  if (n < 1) throw Error(Errc::DimensionMismatch, "training set has no rows");
  if (N < 3) throw Error(Errc::TooFewSamples, "need at least 3 realizations, got " + std::to_string(N));
  if (!raw.allFinite()) throw Error(Errc::ConfigInvalid, "training set contains non-finite values");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(Errc::DimensionMismatch, "label count does not match row count");

  RowScaling s;
  s.method = method;
  s.offset = Eigen::VectorXd::Zero(n);
  s.factor = Eigen::VectorXd::Ones(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    auto row = raw.row(k);
    if (method == ScalingMethod::MinMax) {
      const double lo = row.minCoeff(), hi = row.maxCoeff();
      if (!(hi > lo)) throw Error(Errc::ConstantRow, "row " + std::to_string(k) + " has zero range");
      s.offset(k) = lo;
      s.factor(k) = hi - lo;
    } else if (method == ScalingMethod::Standardize) {
      const double mean = row.mean();
      const double sd = std::sqrt((row.array() - mean).square().sum() / double(N - 1));
      if (!(sd > 0.0)) throw Error(Errc::ConstantRow, "row " + std::to_string(k) + " has zero spread");
      s.offset(k) = mean;
      s.factor(k) = sd;
    }
  }
  TrainingSet ts;
  ts.data = apply_scaling(s, raw);
  ts.scaling = std::move(s);
  ts.labels = std::move(labels);
  return ts;
}

Eigen::MatrixXd apply_scaling(const RowScaling& s, const Eigen::MatrixXd& raw) {
  if (s.offset.size() == 0) return raw;
  if (raw.rows() != s.offset.size()) throw Error(Errc::DimensionMismatch, "scaling record size mismatch");
  return ((raw.colwise() - s.offset).array().colwise() / s.factor.array()).matrix();
}

Eigen::MatrixXd unscale(const RowScaling& s, const Eigen::MatrixXd& scaled) {
  if (s.offset.size() == 0) return scaled;
  if (scaled.rows() != s.offset.size()) throw Error(Errc::DimensionMismatch, "scaling record size mismatch");
  return ((scaled.array().colwise() * s.factor.array()).matrix()).colwise() + s.offset;
}

namespace {

void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index a = 0; a < basis.cols(); ++a) {
    Eigen::Index k;
    basis.col(a).cwiseAbs().maxCoeff(&k);
    if (basis(k, a) < 0.0) basis.col(a) = -basis.col(a);
  }
}

}  // namespace

PcaResult pca_reduce(const TrainingSet& ts, double eps_pca, PcaSolver solver) {
  if (!(eps_pca > 0.0 && eps_pca < 1.0))
    throw Error(Errc::ConfigInvalid, "eps_pca must lie in (0, 1)");
  const Eigen::Index n = ts.dim(), N = ts.size();
  if (N < 3) throw Error(Errc::TooFewSamples, "need at least 3 realizations");

  auto model = std::make_shared<PcaModel>();
  model->mean = ts.data.rowwise().mean();
  model->eps_pca = eps_pca;
  model->scaling = ts.scaling;
  const Eigen::MatrixXd centered = ts.data.colwise() - model->mean;
  model->trace = centered.squaredNorm() / double(N - 1);

  if (solver == PcaSolver::Auto) solver = (N < n) ? PcaSolver::ThinSvd : PcaSolver::Covariance;

  Eigen::VectorXd mu;
  Eigen::MatrixXd phi;
  if (solver == PcaSolver::ThinSvd) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered / std::sqrt(double(N - 1)), Eigen::ComputeThinU);
    mu = svd.singularValues().array().square();
    phi = svd.matrixU();
  } else {
    const Eigen::MatrixXd cov = centered * centered.transpose() / double(N - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw Error(Errc::EigSolverFailure, "covariance eigensolver failed");
    mu = es.eigenvalues().reverse();
    phi = es.eigenvectors().rowwise().reverse();
  }

  if (mu.size() == 0 || !(mu(0) > 0.0)) throw Error(Errc::RankDeficiency, "no positive principal value");
  const double tol = mu(0) * double(std::max(n, N)) * std::numeric_limits<double>::epsilon();
  Eigen::Index positive = 0;
  while (positive < mu.size() && mu(positive) > tol) ++positive;
  const Eigen::Index nu_max = std::min<Eigen::Index>(positive, N - 1);

  Eigen::Index nu = 0;
  double partial = 0.0, err = 1.0;
  while (nu < nu_max) {
    partial += mu(nu);
    ++nu;
    err = 1.0 - partial / model->trace;
    if (err <= eps_pca) break;
  }
  if (err > eps_pca)
    throw Error(Errc::ToleranceUnreachable,
                "eps_pca " + std::to_string(eps_pca) + " not reachable, best error " + std::to_string(err));

  model->nu = nu;
  model->err_pca = std::max(err, 0.0);
  model->eigvals = mu.head(nu);
  model->basis = phi.leftCols(nu);
  fix_signs(model->basis);

  PcaResult out;
  out.latent.eta = model->eigvals.cwiseSqrt().cwiseInverse().asDiagonal() * (model->basis.transpose() * centered);
  out.latent.pca = model;
  out.model = model;
  return out;
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& eta_samples) {
  if (eta_samples.rows() != model.nu)
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(model.nu) + " latent rows, got " +
                                             std::to_string(eta_samples.rows()));
  Eigen::MatrixXd x = model.basis * (model.eigvals.cwiseSqrt().asDiagonal() * eta_samples);
  x.colwise() += model.mean;
  return unscale(model.scaling, x);
}

LatentSet latent_from_matrix(Eigen::MatrixXd eta) {
  LatentSet ls;
  ls.eta = std::move(eta);
  return ls;
}

}  // namespace plom
