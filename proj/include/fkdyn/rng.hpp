#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fk {

// Philox4x32-10 counter-based generator: output block is a pure function of
// (key, counter), so any event can be regenerated from its index alone.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> counter);

// Stream purposes keep unrelated uses of one seed in disjoint counter spaces.
enum class Purpose : std::uint32_t {
  Events = 1,
  Coloring = 2,
  Bonds = 3,
  Init = 4,
  Sampling = 5,
  Misc = 6,
};

struct UpdateEvent {
  std::uint32_t edge;
  double u;     // uniform in [0, 1)
  double wait;  // Exp(1) waiting time, unscaled
};

// Event k of replica r under `seed`: every chain that shares (seed, replica)
// sees the same edge marks, uniforms and clock rings.
class EventStream {
 public:
  EventStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t num_edges)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replica_(replica),
        num_edges_(num_edges) {}

  UpdateEvent event(std::uint64_t k) const;
  std::uint32_t num_edges() const { return num_edges_; }
  std::uint32_t replica() const { return replica_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t replica_;
  std::uint32_t num_edges_;
};

// Sequential generator over the same counter space; satisfies
// UniformRandomBitGenerator so it plugs into <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, std::uint32_t replica, Purpose purpose, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replica_(replica),
        tag_(static_cast<std::uint32_t>(purpose) | (substream << 8)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();                          // [0, 1), 53 bits
  std::uint32_t below(std::uint32_t bound);  // unbiased, bound > 0

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t replica_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

// Unbiased integer in [0, bound) by multiply-shift with rejection.
template <class Next>
std::uint32_t lemire_below(std::uint32_t bound, std::uint32_t first, Next&& next) {
  std::uint64_t m = static_cast<std::uint64_t>(first) * bound;
  auto low = static_cast<std::uint32_t>(m);
  if (low < bound) {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(next()) * bound;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

inline double to_unit53(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

// Mixes a 64-bit value (splitmix64 finalizer); used to derive child seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace fk
