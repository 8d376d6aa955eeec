#include "gdial/rng.hpp"

#include <sstream>

#include "gdial/errors.hpp"

namespace gdial {

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ContractError("Rng::index: n must be positive");
  std::uint64_t bound = static_cast<std::uint64_t>(n);
  std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod n
  for (;;) {
    std::uint64_t x = gen_();
    if (x >= threshold) return static_cast<std::size_t>(x % bound);
  }
}

std::string Rng::state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
  if (is.fail()) throw ParseError("Rng::set_state: malformed generator state");
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace gdial
