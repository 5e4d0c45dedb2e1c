#ifndef SEFUN_RNG_HPP
#define SEFUN_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace sefun {

// Deterministic RNG. mt19937_64 output is pinned by the standard, and we do
// the uint64 -> double mapping ourselves, so streams are identical across
// platforms and standard libraries. Never use std::uniform_*_distribution or
// std::shuffle here; their results are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = (0 - static_cast<std::uint64_t>(n)) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= bound) return static_cast<std::size_t>(r % n);
    }
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sefun

#endif  // SEFUN_RNG_HPP
