#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gdial {

// Seeded random source. The engine is std::mt19937_64 (bit-exact by the
// C++ standard on every platform) and all transforms below avoid libm, so
// a given seed produces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via rejection sampling.
  std::size_t index(std::size_t n);

  // Approximate standard normal: Irwin-Hall sum of 12 uniforms minus 6.
  // Chosen over Box-Muller so corpus generation never touches libm.
  double gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  // Derive an independent stream for a sub-task.
  Rng fork(std::uint64_t salt) { return Rng(next_u64() ^ (salt * 0x9E3779B97F4A7C15ull)); }

  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 gen_;
};

// splitmix64, used for stable id-based hashing (e.g. train/val splits).
std::uint64_t mix64(std::uint64_t x);

}  // namespace gdial
