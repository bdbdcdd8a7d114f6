#include <doctest.h>

#include <cmath>

#include "plom/error.hpp"
#include "plom/partition.hpp"
#include "test_support.hpp"

using namespace plom;

namespace {

Eigen::MatrixXd block_mi() {
  // Components {0,1,2} and {3,4}, strong inside, one weak cross link 2-3.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
  auto set = [&](int a, int b, double v) { m(a, b) = m(b, a) = v; };
  set(0, 1, 0.8);
  set(0, 2, 0.5);
  set(1, 2, 0.6);
  set(3, 4, 0.9);
  set(2, 3, 0.01);
  return m;
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("Gaussian pairs track the closed-form mutual information") {
  const Eigen::MatrixXd z = test::gaussian(2, 1200, 71);
  for (double rho : {0.5, 0.9}) {
    const Eigen::VectorXd x = z.row(0).transpose();
    const Eigen::VectorXd y = rho * x + std::sqrt(1.0 - rho * rho) * z.row(1).transpose();
    const double exact = -0.5 * std::log(1.0 - rho * rho);
    const double est = pair_mi(x, y);
    CAPTURE(rho);
    CAPTURE(est);
    // The kernel estimate is biased low for strong dependence and high at independence.
    CHECK(est == doctest::Approx(exact).epsilon(0.15).scale(1.0));
  }
  const double indep = pair_mi(z.row(0).transpose(), z.row(1).transpose());
  CHECK(indep >= 0.0);
  CHECK(indep < 0.06);
  CHECK(pair_mi(z.row(0).transpose(), z.row(1).transpose()) ==
        doctest::Approx(pair_mi(z.row(1).transpose(), z.row(0).transpose())));
}

TEST_CASE("mutual information matrix is symmetric with a zero diagonal") {
  Eigen::MatrixXd eta = test::gaussian(4, 300, 72);
  eta.row(1) = 0.8 * eta.row(0) + 0.6 * eta.row(1);
  const MutualInfoMatrix mi = pairwise_mi(eta);
  CHECK((mi.mi - mi.mi.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mi.mi.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(mi.mi.minCoeff() >= 0.0);
  CHECK(mi.mi(0, 1) > 5.0 * mi.mi(2, 3));
  CHECK(mi.mi(0, 1) == doctest::Approx(pair_mi(eta.row(0).transpose(), eta.row(1).transpose())));
}

TEST_CASE("threshold groups are connected components") {
  const Eigen::MatrixXd m = block_mi();
  CHECK(threshold_groups(m, 0.0) == std::vector<Group>{{0, 1, 2, 3, 4}});
  CHECK(threshold_groups(m, 0.02) == std::vector<Group>{{0, 1, 2}, {3, 4}});
  CHECK(threshold_groups(m, 0.55) == std::vector<Group>{{0, 1, 2}, {3, 4}});
  CHECK(threshold_groups(m, 0.65) == std::vector<Group>{{0, 1}, {2}, {3, 4}});
  CHECK(threshold_groups(m, 0.85) == std::vector<Group>{{0}, {1}, {2}, {3, 4}});
  CHECK(threshold_groups(m, 1.0).size() == 5);
}

TEST_CASE("tau by hand") {
  const Eigen::MatrixXd m = block_mi();
  const std::vector<Group> two{{0, 1, 2}, {3, 4}};
  // Node form: component 2 loses 0.01 of 1.11, component 3 loses 0.01 of 0.91.
  CHECK(tau_of(m, two, TauForm::Node) == doctest::Approx(0.01 / 0.91));
  // Global form: 2 * 0.01 cut over 2 * 2.81 total.
  CHECK(tau_of(m, two, TauForm::Global) == doctest::Approx(0.01 / 2.81));
  const std::vector<Group> split_first{{0, 1}, {2}, {3, 4}};
  CHECK(tau_of(m, split_first, TauForm::Node) == doctest::Approx(1.0));
  CHECK(tau_of(m, {{0, 1, 2, 3, 4}}, TauForm::Node) == 0.0);
}

TEST_CASE("selection keeps the largest level under tolerance") {
  MutualInfoMatrix mi;
  mi.mi = block_mi();
  const Partition p = select_partition(mi, 0.0);
  CHECK(p.groups == std::vector<Group>{{0, 1, 2}, {3, 4}});
  CHECK(p.i_ref_opt >= 0.01);
  CHECK(p.i_ref_opt < 0.6);
  CHECK(p.i_ref_low <= p.i_ref_opt);
  CHECK(threshold_groups(mi.mi, p.i_ref_low) == p.groups);
  for (const auto& pt : p.tau_curve)
    if (pt.level > p.i_ref_opt) CHECK(pt.tau > 0.05);
  // A floor above the weak link removes it outright.
  const Partition q = select_partition(mi, 0.02);
  CHECK(q.groups == p.groups);
  CHECK(q.mi_floor == 0.02);
}

TEST_CASE("independent and fully dependent extremes") {
  MutualInfoMatrix none;
  none.mi = Eigen::MatrixXd::Zero(4, 4);
  CHECK(select_partition(none, 0.0).count() == 4);
  const Partition one = select_partition(test::gaussian(1, 50, 73));
  CHECK(one.count() == 1);
}

TEST_CASE("samples from independent blocks are separated") {
  Eigen::MatrixXd eta = test::gaussian(5, 600, 74);
  eta.row(1) = (eta.row(0).array().square() - 1.0).matrix() / std::sqrt(2.0);
  eta.row(2) = 0.7 * eta.row(1) + 0.7 * eta.row(2);
  eta.row(4) = 0.9 * eta.row(3) + 0.44 * eta.row(4);
  const Partition p = select_partition(eta);
  CHECK(p.groups == std::vector<Group>{{0, 1, 2}, {3, 4}});
  CHECK(p.mi_floor > 0.0);
  CHECK(mi_null_floor(eta) == p.mi_floor);
}

TEST_CASE("null estimates are seeded") {
  const Eigen::MatrixXd eta = test::gaussian(3, 200, 75);
  CHECK(null_mi_samples(eta, 8, 5) == null_mi_samples(eta, 8, 5));
  CHECK(null_mi_samples(eta, 8, 5) != null_mi_samples(eta, 8, 6));
}

TEST_CASE("split and assemble invert each other") {
  const Eigen::MatrixXd m = test::gaussian(6, 9, 76);
  Partition p;
  p.groups = {{0, 3}, {1, 2, 5}, {4}};
  const auto parts = split(m, p);
  CHECK(parts[1].row(2) == m.row(5));
  CHECK(assemble(parts, p) == m);
  CHECK(p.sizes() == std::vector<Eigen::Index>{2, 3, 1});
}

TEST_CASE("malformed partitions") {
  Partition p;
  p.groups = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(validate(p, 3), Error);
  p.groups = {{0, 1}};
  try {
    validate(p, 3);
    FAIL("expected PartitionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PartitionMismatch);
  }
  p.groups = {{1, 0}, {2}};
  CHECK_THROWS_AS(validate(p, 3), Error);
  CHECK_NOTHROW(validate(single_group(3), 3));
}

TEST_CASE("tau curve rejects unordered levels") {
  CHECK_THROWS_AS(tau_curve(block_mi(), {0.5, 0.1}), Error);
}

}
