#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/policy/linear_softmax.hpp"

namespace anytime {

// Checkpoint layout, all integers and doubles little-endian:
//   "ANYT"  u32 version  u32 block_count
//   per block: u64 features  u64 actions  f64 values[features * actions]
// Block 0 is the thinking policy, block 1 the summary policy.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PolicyParams thinking;
  PolicyParams summary;
};

namespace detail {
template <typename T>
void write_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::uint64_t bits = 0;
  if constexpr (sizeof(T) == 8) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ValidationError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (sizeof(T) == 8) {
    return std::bit_cast<T>(bits);
  } else {
    return static_cast<T>(bits);
  }
}
}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write("ANYT", 4);
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, 2);
  for (const PolicyParams* p : {&ckpt.thinking, &ckpt.summary}) {
    detail::write_le<std::uint64_t>(out, p->features());
    detail::write_le<std::uint64_t>(out, p->actions());
    for (double v : p->values()) detail::write_le<double>(out, v);
  }
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ANYT", 4) != 0) throw ValidationError("not a checkpoint file");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  const auto blocks = detail::read_le<std::uint32_t>(in);
  if (blocks != 2) throw ValidationError("checkpoint must hold 2 policies, found " + std::to_string(blocks));
  Checkpoint ckpt;
  for (PolicyParams* p : {&ckpt.thinking, &ckpt.summary}) {
    const auto features = detail::read_le<std::uint64_t>(in);
    const auto actions = detail::read_le<std::uint64_t>(in);
    if (features * actions > (std::uint64_t{1} << 32)) throw ValidationError("checkpoint dimensions implausible");
    std::vector<double> values(features * actions);
    for (double& v : values) v = detail::read_le<double>(in);
    *p = PolicyParams(features, actions, std::move(values));
  }
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ckpt);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace anytime
