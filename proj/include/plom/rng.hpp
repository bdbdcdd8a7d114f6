#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace plom {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Independent generator for (root seed, stage, index). Every stochastic stage draws
// from its own stream so that adding or reordering stages never shifts another one.
Rng substream(std::uint64_t root, std::string_view stage, std::uint64_t index = 0);

double uniform01(Rng& rng);
Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace plom
