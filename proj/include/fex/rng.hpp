#ifndef FEX_RNG_HPP
#define FEX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace fex {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, for naming RNG streams by purpose ("samples", "theta", ...).
constexpr std::uint64_t rng_key(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic stream with counter-based splitting: child(key) depends only on
// the construction seed and the key, never on how many draws were consumed.
// Uniform/normal draws are generated from raw engine output so sequences are
// identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x51ed2701a3c5e9d1ULL)));
  }
  Rng child(std::uint64_t k1, std::uint64_t k2) const { return child(k1).child(k2); }
  Rng child(std::uint64_t k1, std::uint64_t k2, std::uint64_t k3) const {
    return child(k1).child(k2).child(k3);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  std::size_t uniform_index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fex

#endif  // FEX_RNG_HPP
