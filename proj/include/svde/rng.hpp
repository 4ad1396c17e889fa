#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace svde::rng {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11 constants).
/// Maps a 128-bit counter and 64-bit key to four 32-bit words. Being a pure
/// function of (counter, key) it gives every path its own reproducible
/// substream regardless of evaluation order or thread count.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

struct GaussianPair {
  double z0;
  double z1;
};

/// Two independent standard normals from block `block` of the substream
/// identified by (seed, stream). Uses Box-Muller on the two 64-bit halves of
/// a Philox block; u1 is shifted into (0,1] so the logarithm is always finite.
inline GaussianPair gaussian_pair(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t block) {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  const auto w = philox4x32(ctr, key);

  const std::uint64_t hi = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t lo = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  constexpr double kScale = 0x1.0p-53;
  const double u1 = static_cast<double>((hi >> 11) + 1) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(lo >> 11) * kScale;        // [0, 1)

  constexpr double kTwoPi = 6.28318530717958647692528676655900577;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

/// Sequential view of the Gaussian substream for one (seed, stream) pair.
/// Draw order is fixed, so consumers that always draw the same count in the
/// same order reproduce bit-identically.
class NormalSequence {
public:
  NormalSequence(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const GaussianPair p = gaussian_pair(seed_, stream_, block_++);
    spare_ = p.z1;
    have_spare_ = true;
    return p.z0;
  }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Uniform draw on [0, n) used for bootstrap resampling; counter-based like
/// the Gaussian stream so resamples are reproducible.
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t block, std::uint64_t n) {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  const auto w = philox4x32(ctr, key);
  const std::uint64_t v = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  return v % n;
}

}  // namespace svde::rng
