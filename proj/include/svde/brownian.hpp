#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "svde/grid.hpp"
#include "svde/rng.hpp"

namespace svde {

/// A d-dimensional Brownian path sampled at the grid nodes, B(0) = 0.
/// Values are bit-identical for identical (seed, path_index, grid, dim).
struct BrownianPath {
  TimeGrid grid;
  std::size_t dim;
  std::uint64_t seed;
  std::uint64_t path_index;
  std::vector<double> values;  // (N+1) x dim, row i holds B(t_i)

  std::span<const double> at(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  std::span<double> at(std::size_t i) {
    return {values.data() + i * dim, dim};
  }
};

inline BrownianPath sample_brownian(const TimeGrid& grid, std::size_t dim,
                                    std::uint64_t seed, std::uint64_t path_index) {
  if (dim < 1) throw std::invalid_argument("sample_brownian: dimension must be positive");
  BrownianPath path{grid, dim, seed, path_index,
                    std::vector<double>(grid.node_count() * dim, 0.0)};
  rng::NormalSequence normals(seed, path_index);
  const double root_dt = std::sqrt(grid.dt());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double* prev = path.values.data() + i * dim;
    double* next = path.values.data() + (i + 1) * dim;
    for (std::size_t c = 0; c < dim; ++c) next[c] = prev[c] + root_dt * normals.next();
  }
  return path;
}

/// The deterministic zero path, useful for noise-free runs.
inline BrownianPath zero_brownian(const TimeGrid& grid, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("zero_brownian: dimension must be positive");
  return {grid, dim, 0, 0, std::vector<double>(grid.node_count() * dim, 0.0)};
}

}  // namespace svde
