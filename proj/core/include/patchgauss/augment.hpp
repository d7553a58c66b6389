#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "patchgauss/rng.hpp"
#include "patchgauss/tensor.hpp"

namespace patchgauss {

/// Half-open pixel rectangle [start_x, end_x) x [start_y, end_y).
struct PatchRect {
  std::size_t start_x = 0;
  std::size_t start_y = 0;
  std::size_t end_x = 0;
  std::size_t end_y = 0;

  bool contains(std::size_t x, std::size_t y) const {
    return x >= start_x && x < end_x && y >= start_y && y < end_y;
  }
  std::size_t area() const { return (end_x - start_x) * (end_y - start_y); }

  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

enum class AugmentKind { none, gaussian, cutout, patch_gaussian };
enum class PipelineOrder { augment_then_flipcrop, flipcrop_then_augment };

std::string_view to_string(AugmentKind kind);
std::string_view to_string(PipelineOrder order);
AugmentKind parse_augment_kind(std::string_view text);
PipelineOrder parse_pipeline_order(std::string_view text);

struct AugmentSpec {
  AugmentKind kind = AugmentKind::none;
  double sigma_max = 0.0;
  std::size_t patch_size = 1;
  bool sample_up_to = false;
  ChannelMean fill;
  PipelineOrder order = PipelineOrder::augment_then_flipcrop;
  std::size_t pad = 0;

  /// Throws if a field relevant to `kind` is out of range.
  void validate() const;
};

/// Rect for a patch centred at (cx, cy): start = c - floor(patch/2),
/// end = c + ceil(patch/2), clipped to the image on each axis.
PatchRect patch_bounds_at(std::size_t cx, std::size_t cy, std::size_t height, std::size_t width,
                          std::size_t patch);

/// Draws the centre x over [0, width) then y over [0, height) and returns
/// patch_bounds_at for it.
PatchRect sample_patch_bounds(RngStream& rng, std::size_t height, std::size_t width,
                              std::size_t patch);

/// Standard-normal field shaped like `like`, one draw per element in storage
/// order.
ImageTensor normal_field(RngStream& rng, const ImageTensor& like);

ImageTensor apply_gaussian_kernel(const ImageTensor& img, double sigma, const ImageTensor& noise);

/// clip(img + sigma * noise) inside `rect`, `img` elsewhere. Noise is added to
/// the whole image and clipped before the mask is applied.
ImageTensor patch_gaussian_kernel(const ImageTensor& img, const PatchRect& rect, double sigma,
                                  const ImageTensor& noise);

ImageTensor cutout_kernel(const ImageTensor& img, const PatchRect& rect, const ChannelMean& fill);

ImageTensor apply_gaussian(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng);
ImageTensor apply_cutout(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng);

/// Draw order: effective patch size (only when sample_up_to, over
/// [1, patch_size]), centre x, centre y, sigma, then the noise field.
ImageTensor apply_patch_gaussian(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng);

/// Dispatches on spec.kind; `none` returns the image unchanged without
/// touching the stream.
ImageTensor apply_augmentation(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng);

/// Deterministic part of flip_and_crop: optional horizontal mirror, zero
/// padding of `pad` pixels, then the original-size window whose top-left
/// corner sits at (offset_x, offset_y) in padded coordinates.
ImageTensor flip_crop_kernel(const ImageTensor& img, std::size_t pad, bool flip,
                             std::size_t offset_x, std::size_t offset_y);

/// Flip iff next_unit < 0.5, then offsets x and y drawn over [0, 2 * pad].
ImageTensor flip_and_crop(const ImageTensor& img, std::size_t pad, RngStream& rng);

/// Applies the augmentation (stream tag "aug") and flip/crop (tag
/// "flipcrop") in spec.order.
ImageTensor run_pipeline(const ImageTensor& img, const AugmentSpec& spec, StreamKey key);

/// run_pipeline over a dataset, image i keyed by (seed, i). Output is
/// independent of `workers`.
LabeledDataset augment_dataset(const LabeledDataset& dataset, const AugmentSpec& spec,
                               std::uint64_t seed, unsigned workers = 1);

}  // namespace patchgauss
