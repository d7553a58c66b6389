#include "patchgauss/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "patchgauss/error.hpp"

namespace patchgauss {
namespace rng_detail {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace rng_detail

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t index, std::string_view tag)
    : seed_(seed), index_(index), tag_(tag) {
  using namespace rng_detail;
  std::uint64_t sm = seed ^ splitmix64_finalize(index + kGoldenGamma) ^ fnv1a64(tag);
  for (auto& word : state_) {
    sm += kGoldenGamma;
    word = splitmix64_finalize(sm);
  }
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t RngStream::next_int(std::int64_t lo, std::int64_t hi_inclusive) {
  if (lo > hi_inclusive) {
    throw Error("next_int: empty range [" + std::to_string(lo) + ", " +
                std::to_string(hi_inclusive) + "]");
  }
  const std::uint64_t span = static_cast<std::uint64_t>(hi_inclusive) - static_cast<std::uint64_t>(lo);
  if (span == UINT64_MAX) return static_cast<std::int64_t>(next_u64());
  const std::uint64_t n = span + 1;
  const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t draw = next_u64();
    if (draw >= reject_below) {
      return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + draw % n);
    }
  }
}

double RngStream::next_normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

RngStream derive_stream(std::uint64_t seed, std::uint64_t index, std::string_view tag) {
  return RngStream(seed, index, tag);
}

}  // namespace patchgauss
