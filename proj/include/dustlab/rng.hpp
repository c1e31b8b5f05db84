#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace dustlab {

// splitmix64 step; used only to turn (seed, tag, index) triples into
// well-separated engine seeds, never as the sampling generator itself.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d9f49a609c9591ULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, enough to keep purpose streams apart.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// Deterministically folds an index into a master seed (derived-seed helper
// for families of independent runs).
inline std::uint64_t splitmix_fold(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t s = seed ^ (value * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
  return splitmix64(s);
}

// One deterministic random stream.  Streams are cheap to construct; parallel
// code makes one per work chunk via substream() so results do not depend on
// the thread count.  Double generation is hand-rolled (not std::distribution)
// because libstdc++ gives no cross-version layout guarantee and we promise
// bitwise-reproducible output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static RngStream substream(std::uint64_t master, std::string_view purpose,
                             std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= hash_tag(purpose);
    std::uint64_t b = splitmix64(s);
    s ^= index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t c = splitmix64(s);
    return RngStream(a ^ (b + (c << 1)));
  }

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller.  The spare is cached; within one stream the
  // call sequence is deterministic so caching does not hurt reproducibility.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; all our n are << 2^53.
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dustlab
