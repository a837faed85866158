#pragma once

// Counter-based random streams (Philox4x32-10). Every draw is a pure function
// of (master seed, stream tag, counter words), so workers can produce any
// subset of a batch in any order and the results stay bit-identical.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace sgv::rng {

inline constexpr std::uint32_t kMulA = 0xD2511F53u;
inline constexpr std::uint32_t kMulB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Block philox4x32(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    const std::uint64_t pa = static_cast<std::uint64_t>(kMulA) * ctr[0];
    const std::uint64_t pb = static_cast<std::uint64_t>(kMulB) * ctr[2];
    ctr = {static_cast<std::uint32_t>(pb >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(pb),
           static_cast<std::uint32_t>(pa >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(pa)};
  }
  return ctr;
}

// Tags separate independent consumers of one master seed.
enum class Stream : std::uint32_t {
  paths = 0x50415448u,
  bootstrap = 0x424F4F54u,
  cloud = 0x434C4F55u,
  instances = 0x494E5354u,
  suite = 0x53554954u,
};

inline Key make_key(std::uint64_t seed, Stream tag) {
  return {static_cast<std::uint32_t>(seed) ^ static_cast<std::uint32_t>(tag),
          static_cast<std::uint32_t>(seed >> 32)};
}

inline std::pair<std::uint64_t, std::uint64_t> u64_pair(Key key, Block ctr) {
  const Block b = philox4x32(ctr, key);
  return {(static_cast<std::uint64_t>(b[1]) << 32) | b[0],
          (static_cast<std::uint64_t>(b[3]) << 32) | b[2]};
}

// 52-bit uniform strictly inside (0, 1); both endpoints unreachable even
// after rounding, so log and Box-Muller are always safe.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 12) * 0x1.0p-52 + 0x1.0p-53;
}

inline std::pair<double, double> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

inline std::pair<double, double> gaussian_pair(Key key, Block ctr) {
  const auto [w1, w2] = u64_pair(key, ctr);
  return box_muller(to_unit(w1), to_unit(w2));
}

// Fills m standard gaussians for one (path, step); slot index advances per
// pair so arbitrary noise dimensions stay reproducible.
inline void step_gaussians(std::uint64_t seed, std::uint64_t path,
                           std::uint32_t step, std::uint32_t m, double* out) {
  const Key key = make_key(seed, Stream::paths);
  for (std::uint32_t j = 0; j < m; j += 2) {
    const Block ctr = {static_cast<std::uint32_t>(path),
                       static_cast<std::uint32_t>(path >> 32), step, j / 2};
    const auto [z0, z1] = gaussian_pair(key, ctr);
    out[j] = z0;
    if (j + 1 < m) out[j + 1] = z1;
  }
}

// Unbiased-enough map of a 64-bit word onto [0, n) (fixed-point multiply).
inline std::uint64_t bounded(std::uint64_t word, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(word) * n) >> 64);
}

// t-th resample index draw of bootstrap resample r.
inline std::uint64_t bootstrap_index(std::uint64_t seed, std::uint32_t resample,
                                     std::uint64_t draw, std::uint64_t n) {
  const Key key = make_key(seed, Stream::bootstrap);
  const std::uint64_t pair = draw / 2;
  const Block ctr = {resample, static_cast<std::uint32_t>(pair),
                     static_cast<std::uint32_t>(pair >> 32), 0};
  const auto [w1, w2] = u64_pair(key, ctr);
  return bounded((draw % 2 == 0) ? w1 : w2, n);
}

// k-th uniform in (0,1) of a tagged substream, indexed by record id.
inline double indexed_unit(std::uint64_t seed, Stream tag, std::uint64_t id,
                           std::uint32_t k) {
  const Key key = make_key(seed, tag);
  const Block ctr = {static_cast<std::uint32_t>(id),
                     static_cast<std::uint32_t>(id >> 32), k / 2, 1};
  const auto [w1, w2] = u64_pair(key, ctr);
  return to_unit((k % 2 == 0) ? w1 : w2);
}

}  // namespace sgv::rng
