#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace xke {

// Seeded random source with portable draw routines. std:: distributions are
// implementation-defined, so every draw here is computed from raw engine
// output to keep artifacts byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      using std::swap;
      swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  // Child stream derived from this generator's seed lineage and a name.
  Rng substream(std::string_view name) const { return Rng(mix(seed_of_engine(), name)); }
  Rng substream(std::uint64_t index) const { return Rng(splitmix(seed_of_engine() ^ splitmix(index + 0x51ed27))); }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t mix(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the name, folded into the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return splitmix(seed ^ splitmix(h));
  }

 private:
  // A copy of the engine state hashed down to 64 bits; deriving substreams
  // does not advance the parent.
  std::uint64_t seed_of_engine() const {
    std::mt19937_64 copy = engine_;
    return splitmix(copy());
  }

  std::mt19937_64 engine_;
};

}  // namespace xke
