#include "fkdyn/rng.hpp"

#include <cmath>

namespace fk {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> c) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return c;
}

UpdateEvent EventStream::event(std::uint64_t k) const {
  const auto lo = static_cast<std::uint32_t>(k);
  const auto hi = static_cast<std::uint32_t>(k >> 32);
  const std::uint32_t tag = static_cast<std::uint32_t>(Purpose::Events);
  const auto w = philox4x32(key_, {lo, hi, replica_, tag});
  UpdateEvent ev;
  std::uint32_t extra = 0;
  ev.edge = lemire_below(num_edges_, w[0], [&] {
    ++extra;
    return philox4x32(key_, {lo, hi, replica_, tag | (extra << 8)})[0];
  });
  ev.u = to_unit53(w[1], w[2]);
  ev.wait = -std::log((static_cast<double>(w[3]) + 0.5) * 0x1.0p-32);
  return ev;
}

CounterRng::result_type CounterRng::operator()() {
  if (used_ == 4) {
    buffer_ = philox4x32(key_, {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                replica_, tag_});
    ++block_;
    used_ = 0;
  }
  return buffer_[used_++];
}

double CounterRng::uniform() {
  const std::uint32_t a = (*this)();
  const std::uint32_t b = (*this)();
  return to_unit53(a, b);
}

std::uint32_t CounterRng::below(std::uint32_t bound) {
  return lemire_below(bound, (*this)(), [this] { return (*this)(); });
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace fk
