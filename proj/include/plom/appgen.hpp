#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace plom {

// Non-Gaussian test vector made of independent groups of random monomials
// sqrt(k!) U_k^k of correlated uniforms, centered and whitened per group.
struct AppAConfig {
  std::vector<Eigen::Index> group_dims{10, 20, 30};
  std::uint64_t seed = 1;
  std::uint64_t b_seed = 0;  // the mixing matrices are fixed across realization seeds
  double b_low = 0.85;
  double b_span = 0.15;
};

Eigen::MatrixXd mixing_matrix(const AppAConfig& cfg, std::size_t group);
Eigen::MatrixXd generate(const AppAConfig& cfg, Eigen::Index count);

// Ground-truth partition of generate() output (0-based component indices).
std::vector<std::vector<Eigen::Index>> appa_groups(const AppAConfig& cfg);

}  // namespace plom
