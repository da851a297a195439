// Reproducible random streams.
//
// Every random draw in the planner is addressed by a StreamKey: a 64-bit
// value derived from the master seed by hashing a path of counters
// (planning step, horizon step, purpose, sample index). A sample's noise
// therefore depends only on its address, never on evaluation order or on
// how many worker threads share the ensemble.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bimp {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using RandomEngine = std::mt19937_64;

/// Address of an independent random stream.
class StreamKey {
 public:
  constexpr StreamKey() = default;
  constexpr explicit StreamKey(std::uint64_t seed) : value_(mix64(seed)) {}

  /// Derived key for a sub-stream. Children of distinct indices are
  /// distinct, and child(a).child(b) differs from child(b).child(a).
  [[nodiscard]] constexpr StreamKey child(std::uint64_t index) const noexcept {
    StreamKey k;
    k.value_ = mix64(value_ ^ mix64(index + 0x632be59bd9b4e019ULL));
    return k;
  }

  [[nodiscard]] constexpr StreamKey child(std::initializer_list<std::uint64_t> path) const noexcept {
    StreamKey k = *this;
    for (auto i : path) k = k.child(i);
    return k;
  }

  [[nodiscard]] constexpr std::uint64_t value() const noexcept { return value_; }

  /// Fresh engine positioned at the start of this stream.
  [[nodiscard]] RandomEngine engine() const { return RandomEngine(value_); }

  friend constexpr bool operator==(StreamKey, StreamKey) = default;

 private:
  std::uint64_t value_ = 0x853c49e6748fea9bULL;
};

/// Purpose tags used as the first path element below a horizon step.
enum class StreamPurpose : std::uint64_t {
  kInitialization = 1,
  kProcessNoise = 2,
  kMeasurementNoise = 3,
  kObservationPerturbation = 4,
};

constexpr std::uint64_t tag(StreamPurpose p) noexcept { return static_cast<std::uint64_t>(p); }

}  // namespace bimp
