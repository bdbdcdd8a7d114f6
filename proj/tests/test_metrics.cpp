#include <doctest.h>

#include <cmath>

#include "plom/error.hpp"
#include "plom/metrics.hpp"
#include "plom/partition.hpp"
#include "test_support.hpp"

using namespace plom;

TEST_SUITE("metrics") {

TEST_CASE("distance by hand") {
  Eigen::MatrixXd eta(2, 2);
  eta << 1, 0, 0, 1;
  Eigen::MatrixXd a = eta, b = eta;
  a(0, 0) = 2;  // squared error 1
  b(1, 0) = 2;  // squared error 4
  CHECK(d2_no_group({a, b}, eta) == doctest::Approx((1.0 / 2 + 4.0 / 2) / 2));
  CHECK(d2_no_group({eta}, eta) == 0.0);
  CHECK_THROWS_AS(d2_no_group({}, eta), Error);
  CHECK_THROWS_AS(d2_no_group({Eigen::MatrixXd::Zero(3, 2)}, eta), Error);
}

TEST_CASE("weighted group distances equal the direct estimate") {
  const Eigen::MatrixXd eta = test::whitened(test::gaussian(7, 50, 91));
  Partition p;
  p.groups = {{0, 4}, {1, 2, 3}, {5}, {6}};
  std::vector<Eigen::MatrixXd> learned;
  for (int l = 0; l < 5; ++l) learned.push_back(test::gaussian(7, 50, 92 + l));
  const auto parts = split(eta, p);
  std::vector<std::vector<Eigen::MatrixXd>> per(4);
  for (const auto& s : learned) {
    const auto sp = split(s, p);
    for (std::size_t i = 0; i < 4; ++i) per[i].push_back(sp[i]);
  }
  std::vector<GroupSamples> gs;
  for (std::size_t i = 0; i < 4; ++i) gs.push_back({&per[i], &parts[i]});
  const GroupDistance gd = d2_with_group(gs, 7);
  CHECK(gd.dims == std::vector<Eigen::Index>{2, 3, 1, 1});
  CHECK(std::abs(gd.d2_wg - gd.d2_direct) / gd.d2_direct < 1e-12);
  // With per-group normalization by nu_i the weighted sum also matches the stacked distance.
  CHECK(gd.d2_wg == doctest::Approx(d2_weighted(gd.per_group, gd.dims)));
  CHECK_THROWS_AS(d2_with_group(gs, 8), Error);
}

TEST_CASE("concentration bounds for three groups") {
  const auto b = markov_bounds({0.012, 0.015, 0.019}, {0.05, 0.1});
  REQUIRE(b.size() == 2);
  CHECK(b[0].raw == doctest::Approx(0.012 * 0.015 * 0.019 / std::pow(0.05, 3)).epsilon(1e-13));
  CHECK(b[1].raw == doctest::Approx(0.012 * 0.015 * 0.019 / std::pow(0.1, 3)).epsilon(1e-13));
  CHECK(b[1].clamped == doctest::Approx(b[1].raw));
}

TEST_CASE("nine-group product bound") {
  const std::vector<double> d2{0.031, 0.027, 0.044, 0.012, 0.058, 0.023, 0.036, 0.019, 0.041};
  for (double eps : {0.05, 0.1, 0.2}) {
    double prod = 1.0;
    for (double v : d2) prod *= v / eps;
    const Bound b = markov_bounds(d2, {eps})[0];
    CHECK(b.raw == doctest::Approx(prod).epsilon(1e-12));
    CHECK(b.raw == doctest::Approx(std::pow(geometric_mean(d2) / eps, 9.0)).epsilon(1e-12));
    CHECK(b.clamped == doctest::Approx(std::min(prod, 1.0)));
  }
}

TEST_CASE("single-group bound and clamping") {
  const auto b = markov_bounds({2.0}, {0.05, 0.5});
  CHECK(b[0].raw == doctest::Approx(40.0));
  CHECK(b[0].clamped == 1.0);
  CHECK(b[1].raw == doctest::Approx(4.0));
  CHECK(markov_bounds({0.01}, {0.1})[0].clamped == doctest::Approx(0.1));
  CHECK(markov_bounds({0.0, 0.02}, {0.1})[0].raw == 0.0);
}

TEST_CASE("invalid thresholds") {
  for (double e : {0.0, 1.0, -0.1, 1.5}) {
    try {
      markov_bounds({0.1}, {e});
      FAIL("expected InvalidEpsilon");
    } catch (const Error& err) {
      CHECK(err.code() == Errc::InvalidEpsilon);
    }
  }
  CHECK_THROWS_AS(markov_bounds({}, {0.1}), Error);
  CHECK_THROWS_AS(markov_bounds({-0.1}, {0.1}), Error);
}

TEST_CASE("gain is strict") {
  CHECK(gain_check(0.016, 0.094));
  CHECK_FALSE(gain_check(0.094, 0.094));
  CHECK_FALSE(gain_check(0.2, 0.094));
}

TEST_CASE("moments use the unbiased deviation") {
  Eigen::MatrixXd x(1, 4);
  x << 1, 2, 3, 4;
  const Moments m = moment_report(x);
  CHECK(m.mean(0) == doctest::Approx(2.5));
  CHECK(m.std(0) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const Moments s = moment_report(std::vector<Eigen::MatrixXd>{x.leftCols(2), x.rightCols(2)});
  CHECK(s.mean(0) == doctest::Approx(2.5));
  CHECK(s.std(0) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK_THROWS_AS(moment_report(Eigen::MatrixXd(1, 1)), Error);
}

}
