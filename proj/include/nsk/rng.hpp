#ifndef NSK_RNG_HPP
#define NSK_RNG_HPP

#include <cmath>
#include <cstdint>

namespace nsk {

// SplitMix64 finalizer (Vigna / Steele-Lea-Flood). Stateless 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: output i is a pure function of (key, i), so any
// worker can be handed its own child stream and the results do not depend
// on scheduling order.
class SplitStream {
 public:
  explicit SplitStream(std::uint64_t key) : key_(key) {}

  // Derive an independent substream. Children of distinct indices, and
  // grandchildren thereof, never share outputs.
  SplitStream child(std::uint64_t index) const {
    return SplitStream(mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in (0, 1), never exactly 0 or 1.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace nsk

#endif
