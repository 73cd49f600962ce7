#include "trollkit/rng.hpp"

#include <cmath>
#include <numbers>

namespace trollkit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling over the largest multiple of n.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(splitmix64(parent) ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) {
  // FNV-1a over the tag.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(parent, h);
}

}  // namespace trollkit
