#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace patchgauss {

/// Replayable random stream.
///
/// Seeding: the 64-bit value seed ^ mix(index) ^ fnv1a(tag) is fed to a
/// SplitMix64 generator whose first four outputs form the xoshiro256**
/// state. mix(index) is the SplitMix64 finaliser applied to
/// index + 0x9E3779B97F4A7C15 and fnv1a is 64-bit FNV-1a over the tag bytes.
/// The same (seed, index, tag) triple yields the same sequence on every
/// platform, which is what lets datasets be processed in parallel with one
/// stream per (image, operation) and still match a sequential run.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index, std::string_view tag);

  std::uint64_t next_u64();

  /// (next_u64 >> 11) * 2^-53, in [0, 1).
  double next_unit();

  /// Uniform over the inclusive range [lo, hi]. Rejection sampling: draws
  /// below 2^64 mod n are discarded, then lo + draw mod n is returned.
  /// Every accepted value consumes exactly one u64, including lo == hi.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi_inclusive);

  /// Box-Muller on two uniforms u1, u2: r = sqrt(-2 ln(1 - u1)),
  /// emits r cos(2 pi u2) and then r sin(2 pi u2).
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }
  const std::string& tag() const { return tag_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::optional<double> spare_normal_;
  std::uint64_t seed_;
  std::uint64_t index_;
  std::string tag_;
};

RngStream derive_stream(std::uint64_t seed, std::uint64_t index, std::string_view tag);

/// (seed, index) pair from which per-operation streams are derived.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  RngStream derive(std::string_view tag) const { return RngStream(seed, index, tag); }
};

namespace rng_detail {
std::uint64_t splitmix64_finalize(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view bytes);
}  // namespace rng_detail

}  // namespace patchgauss
