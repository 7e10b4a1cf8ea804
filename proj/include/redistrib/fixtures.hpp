#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "redistrib/mechanism.hpp"

namespace redistrib {

struct KnownMechanism {
  std::string name;
  std::size_t n = 0;
  Mechanism mechanism;
  std::string provenance;
};

/// Every published mechanism for n agents, encoded as a one-hidden-layer ReLU
/// net. Supported n: 3, 4, 5; anything else throws ContractError.
std::vector<KnownMechanism> known_mechanisms(std::size_t n);

/// Pairwise max |h1 - h2| over the sorted grid with `resolution` points per axis.
std::vector<std::vector<double>> distinctness_check(const std::vector<KnownMechanism>& mechanisms,
                                                    std::size_t resolution = 201);

inline constexpr double kDistinctThreshold = 1e-6;

}  // namespace redistrib
