#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "fkdyn/graph.hpp"

namespace fk {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Record layout, little-endian, 44-byte header then the edge bitset:
//   u32 d | u32 n | u32 kind | f64 p | f64 q | u64 seed | u64 event_count
//   ceil(|E| / 8) bytes, edge e in bit (e % 8) of byte e / 8.
// kind holds the LatticeKind in its low byte and the periodic mask above it.
struct CheckpointHeader {
  std::uint32_t d = 0;
  std::uint32_t n = 0;
  std::uint32_t kind = 0;
  double p = 0.0;
  double q = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;

  LatticeKind lattice_kind() const { return static_cast<LatticeKind>(kind & 0xffu); }
  unsigned periodic_mask() const { return kind >> 8; }
};

inline constexpr std::size_t kCheckpointHeaderBytes = 44;

std::uint32_t encode_kind(const LatticeGeometry& geometry);

struct Checkpoint {
  CheckpointHeader header;
  EdgeSet omega;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp);
// Decodes one record from the front of `bytes`; |E| comes from rebuilding the geometry.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

void write_checkpoints(const std::filesystem::path& path, const std::vector<Checkpoint>& records);
std::vector<Checkpoint> read_checkpoints(const std::filesystem::path& path);

}  // namespace fk
