#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace corrdet {

// Seed derivation for independent substreams.
//
// Every random stream is identified by a path of integers below the master
// seed, e.g. (n-index, hypothesis, trial).  The path is folded through the
// SplitMix64 finalizer one component at a time, and the result seeds a
// std::mt19937_64.  A trial's draws therefore depend only on (seed, path),
// never on which thread runs it or in which order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::mt19937_64 make_stream(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(master, path));
}

}  // namespace corrdet
