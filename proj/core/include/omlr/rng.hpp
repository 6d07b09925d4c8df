#pragma once

#include <cstdint>
#include <random>

namespace omlr {

using Engine = std::mt19937_64;

/// Named substreams derived from one root seed. Each component of a simulation
/// draws from its own engine so that changing how many variates one component
/// consumes leaves every other component's sequence untouched.
enum class Stream : std::uint64_t {
  labels = 1,
  innovations = 2,
  noise = 3,
  init = 4,
  regressor_init = 5,
  evaluation = 6,
  monte_carlo = 7,
  population_data = 8,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for (root, replication, stream); stable across platforms.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t replication, Stream stream);

Engine make_engine(std::uint64_t root, std::uint64_t replication, Stream stream);

/// One engine per Stream for a single replication.
struct StreamSet {
  Engine labels;
  Engine innovations;
  Engine noise;
  Engine regressor_init;

  StreamSet(std::uint64_t root, std::uint64_t replication);
};

}  // namespace omlr
