#pragma once

#include <cstdint>
#include <vector>

#include "fibersim/fiber.hpp"

namespace fibersim {

struct RandomFiberSpec {
  int ncoef = 16;           // tangent series length
  double decay = 10.0 / 16.0;  // std of coefficient k is exp(-decay k)
  double gate = 0.61;       // accept when |a_k| <= exp(-gate k), k = 2..ncoef-1
  int N = 16;               // nodes of the returned fibers
  double L = 2.0;
  int max_modes = -1;       // if >= 0, coefficients above this index are zero
};

struct RandomFiberResult {
  std::vector<FiberState> fibers;
  std::uint64_t draws = 0;
};

// Rejection sampling; throws when the acceptance rate stays below 1% over 1e5 draws.
RandomFiberResult generate_random_fibers(const RandomFiberSpec& spec, int count, std::uint64_t seed);

}  // namespace fibersim
