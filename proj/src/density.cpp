#include "plom/density.hpp"

#include <cmath>
#include <numbers>

#include "plom/error.hpp"

namespace plom {

namespace {

constexpr Eigen::Index kBlock = 1024;

// Column-wise log-weights of the mixture components at a block of points (N x L).
Eigen::MatrixXd log_kernel(const KdeModel& model, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd logits = model.shifted_centers().transpose() * points;
  const Eigen::RowVectorXd pn = points.colwise().squaredNorm();
  const double scale = -0.5 / (model.s_hat() * model.s_hat());
  for (Eigen::Index l = 0; l < logits.cols(); ++l) {
    logits.col(l) = ((model.shifted_sqnorms().array() + pn(l) - 2.0 * logits.col(l).array()).max(0.0)) * scale;
  }
  return logits;
}

}  // namespace

Bandwidths bandwidths(Eigen::Index d, Eigen::Index N) {
  // N = 1 is well defined (s_hat = 1) and is used by the one-center closed forms.
  if (d < 1 || N < 1) throw Error(Errc::DimensionMismatch, "bandwidths need d >= 1 and N >= 1");
  const double dd = double(d), nn = double(N);
  Bandwidths bw;
  bw.s = std::pow(nn * (dd + 2.0) / 4.0, -1.0 / (dd + 4.0));
  bw.s_hat = bw.s / std::sqrt(bw.s * bw.s + (nn - 1.0) / nn);
  return bw;
}

KdeModel::KdeModel(Eigen::MatrixXd centers) : centers_(std::move(centers)) {
  if (centers_.rows() < 1 || centers_.cols() < 1)
    throw Error(Errc::DimensionMismatch, "density model needs at least one center");
  bw_ = bandwidths(centers_.rows(), centers_.cols());
  shifted_ = shrink() * centers_;
  shifted_sqnorm_ = shifted_.colwise().squaredNorm().transpose();
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw Error(Errc::DimensionMismatch, "point dimensions differ");
  Eigen::MatrixXd d = -2.0 * a.transpose() * b;
  d.colwise() += a.colwise().squaredNorm().transpose();
  d.rowwise() += b.colwise().squaredNorm();
  return d.cwiseMax(0.0);
}

double kde_logpdf(const KdeModel& model, const Eigen::VectorXd& point) {
  return kde_logpdf(model, Eigen::MatrixXd(point))(0);
}

Eigen::VectorXd kde_logpdf(const KdeModel& model, const Eigen::MatrixXd& points) {
  if (points.rows() != model.dim()) throw Error(Errc::DimensionMismatch, "point dimension mismatch");
  const double sh = model.s_hat();
  const double norm = -std::log(double(model.size())) -
                      0.5 * double(model.dim()) * std::log(2.0 * std::numbers::pi * sh * sh);
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index start = 0; start < points.cols(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, points.cols() - start);
    Eigen::MatrixXd lk = log_kernel(model, points.middleCols(start, len));
    for (Eigen::Index l = 0; l < len; ++l) {
      const double mx = lk.col(l).maxCoeff();
      out(start + l) = mx + std::log((lk.col(l).array() - mx).exp().sum()) + norm;
    }
  }
  return out;
}

Eigen::MatrixXd kde_score(const KdeModel& model, const Eigen::MatrixXd& points) {
  if (points.rows() != model.dim()) throw Error(Errc::DimensionMismatch, "point dimension mismatch");
  Eigen::MatrixXd out(points.rows(), points.cols());
  const double inv = 1.0 / (model.s_hat() * model.s_hat());
  for (Eigen::Index start = 0; start < points.cols(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, points.cols() - start);
    auto block = points.middleCols(start, len);
    Eigen::MatrixXd w = log_kernel(model, block);
    w.rowwise() -= w.colwise().maxCoeff();
    w = w.array().exp().matrix();
    w.array().rowwise() /= w.colwise().sum().array();
    out.middleCols(start, len) = (model.shifted_centers() * w - block) * inv;
  }
  return out;
}

Eigen::MatrixXd kde_draw(const KdeModel& model, Eigen::Index count, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, model.size() - 1);
  Eigen::MatrixXd out = model.s_hat() * standard_normal(model.dim(), count, rng);
  for (Eigen::Index l = 0; l < count; ++l) out.col(l) += model.shifted_centers().col(pick(rng));
  return out;
}

namespace {

std::pair<double, double> mean_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) throw Error(Errc::TooFewSamples, "density curve needs at least two samples");
  const double m = v.mean();
  const double sd = std::sqrt((v.array() - m).square().sum() / double(v.size() - 1));
  if (!(sd > 0.0)) throw Error(Errc::ConstantRow, "samples have zero spread");
  return {m, sd};
}

}  // namespace

Curve1D pdf_curve(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid) {
  const auto [m, sd] = mean_sd(samples);
  const KdeModel kde(((samples.array() - m) / sd).matrix().transpose());
  Curve1D c;
  c.x = grid;
  c.p = (kde_logpdf(kde, Eigen::MatrixXd(((grid.array() - m) / sd).matrix().transpose())).array().exp() / sd).matrix();
  return c;
}

Curve1D pdf_curve(const Eigen::VectorXd& samples, Eigen::Index points) {
  if (points < 2) throw Error(Errc::ConfigInvalid, "need at least two grid points");
  const auto [m, sd] = mean_sd(samples);
  const double pad = 3.0 * bandwidths(1, samples.size()).s_hat * sd;
  return pdf_curve(samples, Eigen::VectorXd::LinSpaced(points, samples.minCoeff() - pad, samples.maxCoeff() + pad));
}

Grid2D pdf_grid(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Eigen::Index points) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "joint density needs equal sample counts");
  if (points < 2) throw Error(Errc::ConfigInvalid, "need at least two grid points");
  const auto [ma, sa] = mean_sd(a);
  const auto [mb, sb] = mean_sd(b);
  Eigen::MatrixXd centers(2, a.size());
  centers.row(0) = ((a.array() - ma) / sa).matrix().transpose();
  centers.row(1) = ((b.array() - mb) / sb).matrix().transpose();
  const KdeModel kde(std::move(centers));
  Grid2D g;
  // Pad by three kernel widths so the tails are on the grid.
  const double pa = 3.0 * kde.s_hat() * sa, pb = 3.0 * kde.s_hat() * sb;
  g.x = Eigen::VectorXd::LinSpaced(points, a.minCoeff() - pa, a.maxCoeff() + pa);
  g.y = Eigen::VectorXd::LinSpaced(points, b.minCoeff() - pb, b.maxCoeff() + pb);
  Eigen::MatrixXd pts(2, points * points);
  for (Eigen::Index i = 0; i < points; ++i)
    for (Eigen::Index j = 0; j < points; ++j) {
      pts(0, i * points + j) = (g.x(i) - ma) / sa;
      pts(1, i * points + j) = (g.y(j) - mb) / sb;
    }
  const Eigen::VectorXd lp = kde_logpdf(kde, pts);
  g.p.resize(points, points);
  for (Eigen::Index i = 0; i < points; ++i)
    for (Eigen::Index j = 0; j < points; ++j) g.p(i, j) = std::exp(lp(i * points + j)) / (sa * sb);
  return g;
}

}  // namespace plom
