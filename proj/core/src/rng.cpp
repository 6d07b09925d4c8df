#include "omlr/rng.hpp"

namespace omlr {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t replication, Stream stream) {
  return mix64(mix64(mix64(root) ^ replication) ^ static_cast<std::uint64_t>(stream));
}

Engine make_engine(std::uint64_t root, std::uint64_t replication, Stream stream) {
  return Engine(derive_seed(root, replication, stream));
}

StreamSet::StreamSet(std::uint64_t root, std::uint64_t replication)
    : labels(make_engine(root, replication, Stream::labels)),
      innovations(make_engine(root, replication, Stream::innovations)),
      noise(make_engine(root, replication, Stream::noise)),
      regressor_init(make_engine(root, replication, Stream::regressor_init)) {}

}  // namespace omlr
