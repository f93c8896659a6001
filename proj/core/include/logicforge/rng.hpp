#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace logicforge {

// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer, used to decorrelate combined seeds.
std::uint64_t mix64(std::uint64_t x);

// Stable stream seeds: hash of the global seed, a stream tag and an optional
// index. Every randomized stage derives its own stream so stages can run in
// any order (or in parallel) without changing results.
std::uint64_t derive_seed(std::uint64_t global, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t global, std::string_view tag, std::uint64_t n);
std::uint64_t derive_seed(std::uint64_t global, std::string_view a, std::string_view b);

// mt19937_64 raw output is pinned by the standard, but the std distributions
// are not, so bounded draws, reals and normals are implemented by hand to keep
// artifacts bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  // [0, 1) with 53 random bits.
  double real01();

  // Box-Muller; the spare value is cached in the generator state.
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct positions out of [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace logicforge
