#include "plom/appgen.hpp"

#include <cmath>

#include "plom/error.hpp"
#include "plom/rng.hpp"

namespace plom {

Eigen::MatrixXd mixing_matrix(const AppAConfig& cfg, std::size_t group) {
  const Eigen::Index nu = cfg.group_dims.at(group);
  Rng rng = substream(cfg.b_seed, "appgen-mixing", group);
  Eigen::MatrixXd b(nu, nu);
  for (Eigen::Index i = 0; i < nu; ++i)
    for (Eigen::Index j = 0; j < nu; ++j) b(i, j) = (cfg.b_span * uniform01(rng) + cfg.b_low) / double(nu);
  return b;
}

Eigen::MatrixXd generate(const AppAConfig& cfg, Eigen::Index count) {
  Eigen::Index total = 0, largest = 0;
  for (Eigen::Index d : cfg.group_dims) {
    if (d < 1) throw Error(Errc::ConfigInvalid, "group dimensions must be positive");
    total += d;
    largest = std::max(largest, d);
  }
  if (count < largest + 2)
    throw Error(Errc::TooFewSamples, "need at least " + std::to_string(largest + 2) + " realizations");

  Eigen::MatrixXd out(total, count);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < cfg.group_dims.size(); ++i) {
    const Eigen::Index nu = cfg.group_dims[i];
    const Eigen::MatrixXd b = mixing_matrix(cfg, i);
    Rng rng = substream(cfg.seed, "appgen", i);
    Eigen::MatrixXd unif(nu, count);
    for (Eigen::Index c = 0; c < count; ++c)
      for (Eigen::Index r = 0; r < nu; ++r) unif(r, c) = uniform01(rng);

    Eigen::MatrixXd m = (2.0 * b * unif).array() - 1.0;
    for (Eigen::Index k = 1; k <= nu; ++k) {
      const double coef = std::exp(0.5 * std::lgamma(double(k) + 1.0));
      m.row(k - 1) = coef * m.row(k - 1).array().pow(double(k));
    }
    // The factorial scaling leaves cov badly conditioned, so a second pass
    // removes the rounding left by the first.
    for (int pass = 0; pass < 2; ++pass) {
      m.colwise() -= m.rowwise().mean();
      const Eigen::MatrixXd cov = m * m.transpose() / double(count - 1);
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw Error(Errc::CholeskyFailure, "group " + std::to_string(i + 1) +
                                               " sample covariance is not positive definite; increase the count");
      m = llt.matrixL().solve(m);
    }
    out.middleRows(row, nu) = m;
    row += nu;
  }
  return out;
}

std::vector<std::vector<Eigen::Index>> appa_groups(const AppAConfig& cfg) {
  std::vector<std::vector<Eigen::Index>> groups;
  Eigen::Index start = 0;
  for (Eigen::Index d : cfg.group_dims) {
    std::vector<Eigen::Index> g;
    for (Eigen::Index k = 0; k < d; ++k) g.push_back(start + k);
    groups.push_back(std::move(g));
    start += d;
  }
  return groups;
}

}  // namespace plom
