#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patchgauss/rng.hpp"
#include "patchgauss/tensor.hpp"

namespace patchgauss {

enum class CorruptionKind {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  brightness,
  contrast,
  defocus_blur,
  pixelate,
};

inline constexpr std::array<CorruptionKind, 7> kAllCorruptions = {
    CorruptionKind::gaussian_noise, CorruptionKind::shot_noise, CorruptionKind::impulse_noise,
    CorruptionKind::brightness,     CorruptionKind::contrast,   CorruptionKind::defocus_blur,
    CorruptionKind::pixelate,
};

std::string_view to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(std::string_view text);

inline constexpr int kSeverityLevels = 5;

/// Five parameters per corruption kind, level 1 first.
///
/// Parameter meaning per kind: gaussian_noise sigma, shot_noise photon
/// count lambda (smaller is stronger), impulse_noise replacement
/// probability, brightness offset, contrast factor (smaller is stronger),
/// defocus_blur disk radius in pixels, pixelate block size in pixels.
class SeverityTable {
 public:
  /// Toolkit defaults; see data/severity_default.txt for the same values.
  static SeverityTable defaults();

  /// Text format: one "kind level parameter" triple per line; blank lines
  /// and lines starting with '#' are ignored. Every kind must list levels
  /// 1..5 exactly once and be strictly monotone in its strength direction.
  static SeverityTable parse(std::string_view text);
  std::string serialize() const;

  double parameter(CorruptionKind kind, int level) const;

  /// True when larger parameters mean stronger corruption.
  static bool increasing_strength(CorruptionKind kind);

 private:
  std::map<CorruptionKind, std::array<double, kSeverityLevels>> levels_;
};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  double parameter = 0.0;
  int level = 0;  ///< 1..5 when built from the severity table, 0 for explicit.

  static CorruptionSpec explicit_parameter(CorruptionKind kind, double parameter);
  static CorruptionSpec from_level(CorruptionKind kind, int level,
                                   const SeverityTable& table = SeverityTable::defaults());
};

/// Throws when the parameter lies outside the kind's domain.
void validate(const CorruptionSpec& spec);

ImageTensor corrupt(const ImageTensor& img, const CorruptionSpec& spec, RngStream& rng);

/// Sample from Poisson(mean) by inverse transform on one uniform.
std::int64_t sample_poisson(double mean, RngStream& rng);

/// Normalised disk of radius r: every offset with dx^2 + dy^2 <= r^2.
struct DiskKernel {
  int radius = 0;  ///< Half-extent of the square support.
  std::vector<double> weights;  ///< (2 * radius + 1)^2, row-major.
};
DiskKernel disk_kernel(double radius);

/// The fixed robustness-evaluation noise levels, in order.
inline constexpr std::array<double, 6> kEvalSigmas = {0.1, 0.2, 0.3, 0.5, 0.8, 1.0};

/// Corrupts every image with gaussian_noise at a given sigma. Image i uses the
/// stream (seed, i, tag), with tag naming the corruption and its parameter.
LabeledDataset corrupt_dataset(const LabeledDataset& dataset, const CorruptionSpec& spec,
                               std::uint64_t seed, unsigned workers = 1);

/// One gaussian_noise-corrupted copy of the dataset per sigma in kEvalSigmas.
std::vector<std::pair<double, LabeledDataset>> gaussian_eval_suite(const LabeledDataset& dataset,
                                                                   std::uint64_t seed,
                                                                   unsigned workers = 1);

}  // namespace patchgauss
