#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace trollkit {

/// Seeded random source whose output is identical on every platform.
///
/// std::mt19937_64's sequence is fixed by the standard, but the standard
/// distributions are not, so sampling helpers are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal draw (Box-Muller, one value per call).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent child seed from a parent seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);

}  // namespace trollkit
