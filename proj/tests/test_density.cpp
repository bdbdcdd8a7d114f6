#include <doctest.h>

#include <cmath>

#include "plom/density.hpp"
#include "plom/error.hpp"
#include "test_support.hpp"

using namespace plom;

namespace {

// Direct evaluation of the mixture log density, one center at a time.
double naive_logpdf(const KdeModel& m, const Eigen::VectorXd& x) {
  const double sh = m.s_hat();
  const Eigen::Index d = m.dim(), N = m.size();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < N; ++j)
    acc += std::exp(-(x - m.shrink() * m.centers().col(j)).squaredNorm() / (2.0 * sh * sh));
  return std::log(acc / double(N)) - 0.5 * double(d) * std::log(2.0 * M_PI * sh * sh);
}

double fd_max_rel_error(Eigen::Index d, std::uint64_t seed) {
  const KdeModel m(test::whitened(test::gaussian(d, 80, seed)));
  const Eigen::MatrixXd pts = test::gaussian(d, 100, seed + 1000) * 0.8;
  const Eigen::MatrixXd score = kde_score(m, pts);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < pts.cols(); ++p) {
    Eigen::VectorXd fd(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double h = 1e-5;
      Eigen::VectorXd a = pts.col(p), b = pts.col(p);
      a(k) += h;
      b(k) -= h;
      fd(k) = (kde_logpdf(m, a) - kde_logpdf(m, b)) / (2.0 * h);
    }
    worst = std::max(worst, (score.col(p) - fd).norm() / std::max(fd.norm(), 1e-300));
  }
  return worst;
}

}  // namespace

TEST_SUITE("density") {

TEST_CASE("bandwidths follow the closed forms") {
  for (Eigen::Index d : {1, 2, 10, 60})
    for (Eigen::Index N : {2, 50, 1200}) {
      const Bandwidths b = bandwidths(d, N);
      const double s = std::pow(4.0 / (double(N) * (double(d) + 2.0)), 1.0 / (double(d) + 4.0));
      CHECK(b.s == doctest::Approx(s).epsilon(1e-14));
      CHECK(b.s_hat == doctest::Approx(s / std::sqrt(s * s + double(N - 1) / double(N))).epsilon(1e-14));
    }
  CHECK(bandwidths(3, 1).s_hat == doctest::Approx(1.0));
  CHECK_THROWS_AS(bandwidths(0, 10), Error);
}

TEST_CASE("log density matches the direct sum") {
  const KdeModel m(test::whitened(test::gaussian(3, 40, 11)));
  const Eigen::MatrixXd pts = test::gaussian(3, 25, 12) * 2.0;
  const Eigen::VectorXd batch = kde_logpdf(m, pts);
  for (Eigen::Index p = 0; p < pts.cols(); ++p) {
    CHECK(kde_logpdf(m, Eigen::VectorXd(pts.col(p))) == doctest::Approx(naive_logpdf(m, pts.col(p))).epsilon(1e-12));
    CHECK(batch(p) == doctest::Approx(naive_logpdf(m, pts.col(p))).epsilon(1e-12));
  }
}

TEST_CASE("log density stays finite far from the data") {
  const KdeModel m(test::whitened(test::gaussian(60, 200, 13)));
  Eigen::VectorXd far = Eigen::VectorXd::Constant(60, 40.0);
  CHECK(std::isfinite(kde_logpdf(m, far)));
  CHECK(std::isfinite(kde_score(m, Eigen::MatrixXd(far)).norm()));
}

TEST_CASE("score matches central differences") {
  CHECK(fd_max_rel_error(1, 21) < 1e-4);
  CHECK(fd_max_rel_error(5, 22) < 1e-4);
  CHECK(fd_max_rel_error(60, 23) < 1e-4);
}

TEST_CASE("mixture draws have zero mean and unit covariance") {
  const KdeModel m(test::whitened(test::gaussian(2, 200, 31)));
  Rng rng = substream(7, "draw");
  const Eigen::MatrixXd x = kde_draw(m, 400000, rng);
  const Eigen::VectorXd mean = x.rowwise().mean();
  const Eigen::MatrixXd c = x.colwise() - mean;
  const Eigen::MatrixXd cov = c * c.transpose() / double(x.cols() - 1);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.01);
  CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("mixture moments are exact in closed form") {
  // E = shrink * mean(c); Cov = s_hat^2 I + shrink^2 (N-1)/N I for whitened centers.
  const KdeModel m(test::whitened(test::gaussian(4, 30, 32)));
  const double N = double(m.size());
  CHECK(m.s_hat() * m.s_hat() + m.shrink() * m.shrink() * (N - 1.0) / N == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pdf curves integrate to one") {
  const Eigen::VectorXd x = test::gaussian(1, 500, 41).row(0).transpose();
  const Curve1D c = pdf_curve(x, 400);
  double area = 0.0;
  for (Eigen::Index i = 1; i < c.x.size(); ++i) area += 0.5 * (c.p(i) + c.p(i - 1)) * (c.x(i) - c.x(i - 1));
  CHECK(area == doctest::Approx(1.0).epsilon(0.02));
  const Grid2D g = pdf_grid(x, test::gaussian(1, 500, 42).row(0).transpose(), 80);
  const double dx = g.x(1) - g.x(0), dy = g.y(1) - g.y(0);
  CHECK(g.p.sum() * dx * dy == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("squared distances") {
  const Eigen::MatrixXd a = test::gaussian(3, 5, 51), b = test::gaussian(3, 4, 52);
  const Eigen::MatrixXd d = squared_distances(a, b);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(d(i, j) == doctest::Approx((a.col(i) - b.col(j)).squaredNorm()));
}

}
