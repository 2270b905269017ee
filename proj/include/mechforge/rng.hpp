#pragma once

#include <cstdint>
#include <string_view>

namespace mechforge {

/// Deterministic splitmix64 stream. Streams are derived by name or index from
/// a root seed, so every subcommand and worker draws from its own independent
/// sequence regardless of evaluation order or thread count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  /// Child stream keyed by a label ("generators/super", "equilibrium", ...).
  RngStream derive(std::string_view name) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
    for (char c : name) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ULL;
    }
    return RngStream(mix(state_ ^ h));
  }

  /// Child stream keyed by an index (instance number, restart number, ...).
  RngStream substream(std::uint64_t index) const {
    return RngStream(mix(state_ + 0x9E3779B97F4A7C15ULL * (index + 1)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_double(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n). Rejection-free Lemire reduction.
  std::uint64_t next_below(std::uint64_t n) {
    using u128 = unsigned __int128;
    std::uint64_t x = next_u64();
    u128 m = static_cast<u128>(x) * static_cast<u128>(n);
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<u128>(x) * static_cast<u128>(n);
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi] inclusive.
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool next_bool(double p) { return next_double() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace mechforge
