#pragma once

#include <cstdint>
#include <string_view>

namespace mmbh {

// splitmix64; used both as a standalone generator and as the seed mixer
// for deriving purpose-keyed substreams from a master seed.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives a deterministic substream seed from (master seed, purpose string).
// Documented key derivation: seed XOR fnv1a64(purpose), passed through one
// splitmix64 step.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
  std::uint64_t s = master ^ fnv1a64(purpose);
  return splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master ^ fnv1a64(purpose);
  s ^= 0x9e3779b97f4a7c15ULL * (a + 1);
  splitmix64_next(s);
  s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
  return splitmix64_next(s);
}

// Deterministic generator with platform-independent uniform conversions.
// std::uniform_*_distribution is implementation-defined, so conversions are
// done by hand here to keep outputs byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially close seeds
    splitmix64_next(state_);
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo + 1;
    // rejection-free modulo is fine here: span is tiny vs 2^64 in all uses
    return lo + next_u64() % span;
  }

 private:
  std::uint64_t state_;
};

}  // namespace mmbh
