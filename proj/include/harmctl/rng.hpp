#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace harm {

// All randomness in the library goes through xoshiro256** seeded by
// splitmix64. Every variate below is derived with explicit arithmetic (no
// std:: distributions) so streams are identical across standard libraries.

std::uint64_t splitmix64(std::uint64_t& state);

// Independent stream seed for (seed, stream), e.g. one per repetition.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a 64-bit.
std::uint64_t hash_string(std::string_view text);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // [0, 1) with 53 bits.
  double uniform();
  // (0, 1), never hits either endpoint.
  double uniform_open();
  // Uniform integer in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n);
  double normal();
  // Marsaglia-Tsang; shape > 0.
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> concentration);
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_{};
};

// Uniform (0,1) value that depends only on (seed, key); used for per-instance
// draws that must not depend on iteration order.
double keyed_uniform(std::uint64_t seed, std::string_view key);

}  // namespace harm
