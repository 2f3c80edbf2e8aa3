#ifndef BDS_RNG_HPP
#define BDS_RNG_HPP

#include <cstdint>
#include <random>

namespace bds {

// SplitMix64 step; used to derive independent, reproducible streams from
// (seed, stream id) so parallel replicates never share state.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s) >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace bds

#endif
