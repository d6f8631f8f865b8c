#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace adrf {

using Rng = std::mt19937_64;

//! splitmix64 finaliser.
inline std::uint64_t
mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Seed for an independent stream identified by (seed, ids...). Streams depend
//! only on their identifiers, never on scheduling order.
inline std::uint64_t
derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids)
{
  std::uint64_t s = mix64(seed);
  for (auto id : ids) {
    s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
  }
  return s;
}

inline Rng
make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {})
{
  return Rng(derive_seed(seed, ids));
}

} // namespace adrf
