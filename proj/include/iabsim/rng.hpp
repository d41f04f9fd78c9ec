#pragma once

#include <cstdint>
#include <random>

namespace iabsim {

using Rng = std::mt19937_64;

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Stream tags keep independent random consumers decoupled, so that e.g. the
// channel draws for a node pair do not depend on how many UEs were placed.
enum class Stream : std::uint64_t {
  kGnbPlacement = 1,
  kUePlacement = 2,
  kDonors = 3,
  kGnbLink = 4,
  kUeLink = 5,
  kTraffic = 6,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  std::uint64_t h = detail::mix64(seed);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(tag));
  h = detail::mix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = detail::mix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream tag, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng{stream_seed(seed, tag, a, b)};
}

}  // namespace iabsim
