#include "fkdyn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fk {

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class T>
T get(std::span<const std::uint8_t> in, std::size_t& at) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  at += sizeof(T);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

std::size_t edges_of(const CheckpointHeader& h) {
  try {
    const auto g = LatticeGeometry::build(static_cast<int>(h.d), static_cast<int>(h.n), h.lattice_kind(),
                                          h.periodic_mask());
    return g.num_edges();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint header does not describe a lattice: ") + e.what());
  }
}

}  // namespace

std::uint32_t encode_kind(const LatticeGeometry& geometry) {
  return static_cast<std::uint32_t>(geometry.kind()) | (geometry.periodic_mask() << 8);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
  const auto& h = cp.header;
  if (cp.omega.size() != edges_of(h)) throw CheckpointError("configuration size does not match the header lattice");
  std::vector<std::uint8_t> out;
  out.reserve(kCheckpointHeaderBytes + (cp.omega.size() + 7) / 8);
  put(out, h.d);
  put(out, h.n);
  put(out, h.kind);
  put(out, h.p);
  put(out, h.q);
  put(out, h.seed);
  put(out, h.event_count);
  std::vector<std::uint8_t> bits((cp.omega.size() + 7) / 8, 0);
  for (std::size_t e = 0; e < cp.omega.size(); ++e)
    if (cp.omega[e]) bits[e / 8] |= static_cast<std::uint8_t>(1u << (e % 8));
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < kCheckpointHeaderBytes) throw CheckpointError("truncated checkpoint header");
  Checkpoint cp;
  auto& h = cp.header;
  std::size_t at = 0;
  h.d = get<std::uint32_t>(bytes, at);
  h.n = get<std::uint32_t>(bytes, at);
  h.kind = get<std::uint32_t>(bytes, at);
  h.p = get<double>(bytes, at);
  h.q = get<double>(bytes, at);
  h.seed = get<std::uint64_t>(bytes, at);
  h.event_count = get<std::uint64_t>(bytes, at);
  const std::size_t E = edges_of(h);
  const std::size_t nbytes = (E + 7) / 8;
  if (bytes.size() < at + nbytes) throw CheckpointError("truncated checkpoint bitset");
  cp.omega.assign(E, 0);
  for (std::size_t e = 0; e < E; ++e) cp.omega[e] = (bytes[at + e / 8] >> (e % 8)) & 1u;
  if (E % 8 != 0 && (bytes[at + nbytes - 1] >> (E % 8)) != 0) throw CheckpointError("padding bits set in checkpoint");
  if (consumed) *consumed = at + nbytes;
  return cp;
}

void write_checkpoints(const std::filesystem::path& path, const std::vector<Checkpoint>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    const auto bytes = encode_checkpoint(r);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw CheckpointError("write failed on " + path.string());
}

std::vector<Checkpoint> read_checkpoints(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<Checkpoint> out;
  std::size_t at = 0;
  while (at < bytes.size()) {
    std::size_t used = 0;
    out.push_back(decode_checkpoint(std::span(bytes).subspan(at), &used));
    at += used;
  }
  return out;
}

}  // namespace fk
