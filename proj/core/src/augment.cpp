#include "patchgauss/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchgauss/error.hpp"
#include "patchgauss/parallel.hpp"

namespace patchgauss {

std::string_view to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::none: return "none";
    case AugmentKind::gaussian: return "gaussian";
    case AugmentKind::cutout: return "cutout";
    case AugmentKind::patch_gaussian: return "patch_gaussian";
  }
  return "?";
}

std::string_view to_string(PipelineOrder order) {
  switch (order) {
    case PipelineOrder::augment_then_flipcrop: return "augment_then_flipcrop";
    case PipelineOrder::flipcrop_then_augment: return "flipcrop_then_augment";
  }
  return "?";
}

AugmentKind parse_augment_kind(std::string_view text) {
  for (auto kind : {AugmentKind::none, AugmentKind::gaussian, AugmentKind::cutout,
                    AugmentKind::patch_gaussian}) {
    if (text == to_string(kind)) return kind;
  }
  throw Error("unknown augmentation kind '" + std::string(text) + "'");
}

PipelineOrder parse_pipeline_order(std::string_view text) {
  for (auto order : {PipelineOrder::augment_then_flipcrop, PipelineOrder::flipcrop_then_augment}) {
    if (text == to_string(order)) return order;
  }
  throw Error("unknown pipeline order '" + std::string(text) + "'");
}

void AugmentSpec::validate() const {
  const bool noisy = kind == AugmentKind::gaussian || kind == AugmentKind::patch_gaussian;
  const bool patched = kind == AugmentKind::cutout || kind == AugmentKind::patch_gaussian;
  if (noisy && !(sigma_max >= 0.0 && std::isfinite(sigma_max))) {
    throw Error("sigma_max must be finite and >= 0");
  }
  if (patched && patch_size < 1) throw Error("patch_size must be >= 1");
  if (kind == AugmentKind::cutout) {
    if (fill.values.empty()) throw Error("cutout needs a fill colour");
    for (double v : fill.values) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error("cutout fill must lie in [0,1]");
    }
  }
}

PatchRect patch_bounds_at(std::size_t cx, std::size_t cy, std::size_t height, std::size_t width,
                          std::size_t patch) {
  if (patch < 1) throw Error("patch size must be >= 1");
  const auto axis = [patch](std::size_t center, std::size_t extent) {
    const std::size_t below = patch / 2;
    const std::size_t above = patch - below;  // ceil(patch / 2)
    const std::size_t start = center >= below ? center - below : 0;
    const std::size_t end = std::min(extent, center + above);
    return std::pair{start, end};
  };
  const auto [sx, ex] = axis(cx, width);
  const auto [sy, ey] = axis(cy, height);
  return PatchRect{sx, sy, ex, ey};
}

PatchRect sample_patch_bounds(RngStream& rng, std::size_t height, std::size_t width,
                              std::size_t patch) {
  if (patch < 1) throw Error("patch size must be >= 1");
  if (height < 1 || width < 1) throw Error("image must be at least 1x1");
  const auto cx = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(width) - 1));
  const auto cy = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(height) - 1));
  return patch_bounds_at(cx, cy, height, width, patch);
}

ImageTensor normal_field(RngStream& rng, const ImageTensor& like) {
  ImageTensor field(like.height(), like.width(), like.channels());
  for (double& v : field.values()) v = rng.next_normal();
  return field;
}

ImageTensor apply_gaussian_kernel(const ImageTensor& img, double sigma, const ImageTensor& noise) {
  if (!img.same_shape(noise)) throw Error("noise field shape does not match image");
  if (!(sigma >= 0.0)) throw Error("sigma must be >= 0");
  ImageTensor out = img;
  auto values = out.values();
  const auto z = noise.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::min(std::max(values[i] + sigma * z[i], 0.0), 1.0);
  }
  return out;
}

ImageTensor patch_gaussian_kernel(const ImageTensor& img, const PatchRect& rect, double sigma,
                                  const ImageTensor& noise) {
  const ImageTensor noisy = apply_gaussian_kernel(img, sigma, noise);
  ImageTensor out = img;
  const std::size_t end_y = std::min(rect.end_y, img.height());
  const std::size_t end_x = std::min(rect.end_x, img.width());
  for (std::size_t y = rect.start_y; y < end_y; ++y) {
    for (std::size_t x = rect.start_x; x < end_x; ++x) {
      for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = noisy.at(y, x, c);
    }
  }
  return out;
}

ImageTensor cutout_kernel(const ImageTensor& img, const PatchRect& rect, const ChannelMean& fill) {
  if (fill.channels() != img.channels()) throw Error("cutout fill channel count does not match image");
  ImageTensor out = img;
  const std::size_t end_y = std::min(rect.end_y, img.height());
  const std::size_t end_x = std::min(rect.end_x, img.width());
  for (std::size_t y = rect.start_y; y < end_y; ++y) {
    for (std::size_t x = rect.start_x; x < end_x; ++x) {
      for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = fill.values[c];
    }
  }
  return out;
}

ImageTensor apply_gaussian(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng) {
  if (spec.kind != AugmentKind::gaussian) throw Error("apply_gaussian needs kind=gaussian");
  spec.validate();
  const double sigma = spec.sigma_max * rng.next_unit();
  const ImageTensor field = normal_field(rng, img);
  return apply_gaussian_kernel(img, sigma, field);
}

ImageTensor apply_cutout(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng) {
  if (spec.kind != AugmentKind::cutout) throw Error("apply_cutout needs kind=cutout");
  spec.validate();
  const PatchRect rect = sample_patch_bounds(rng, img.height(), img.width(), spec.patch_size);
  return cutout_kernel(img, rect, spec.fill);
}

ImageTensor apply_patch_gaussian(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng) {
  if (spec.kind != AugmentKind::patch_gaussian) {
    throw Error("apply_patch_gaussian needs kind=patch_gaussian");
  }
  spec.validate();
  std::size_t patch = spec.patch_size;
  if (spec.sample_up_to) {
    patch = static_cast<std::size_t>(rng.next_int(1, static_cast<std::int64_t>(spec.patch_size)));
  }
  const PatchRect rect = sample_patch_bounds(rng, img.height(), img.width(), patch);
  const double sigma = spec.sigma_max * rng.next_unit();
  const ImageTensor field = normal_field(rng, img);
  return patch_gaussian_kernel(img, rect, sigma, field);
}

ImageTensor apply_augmentation(const ImageTensor& img, const AugmentSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case AugmentKind::none: return img;
    case AugmentKind::gaussian: return apply_gaussian(img, spec, rng);
    case AugmentKind::cutout: return apply_cutout(img, spec, rng);
    case AugmentKind::patch_gaussian: return apply_patch_gaussian(img, spec, rng);
  }
  throw Error("unknown augmentation kind");
}

ImageTensor flip_crop_kernel(const ImageTensor& img, std::size_t pad, bool flip,
                             std::size_t offset_x, std::size_t offset_y) {
  if (offset_x > 2 * pad || offset_y > 2 * pad) throw Error("crop offset exceeds padding");
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  ImageTensor out(h, w, img.channels(), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    // Source row in unpadded coordinates; outside [0, h) reads zero padding.
    const std::size_t py = y + offset_y;
    if (py < pad || py - pad >= h) continue;
    const std::size_t sy = py - pad;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t px = x + offset_x;
      if (px < pad || px - pad >= w) continue;
      std::size_t sx = px - pad;
      if (flip) sx = w - 1 - sx;
      for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

ImageTensor flip_and_crop(const ImageTensor& img, std::size_t pad, RngStream& rng) {
  const bool flip = rng.next_unit() < 0.5;
  const auto range = static_cast<std::int64_t>(2 * pad);
  const auto ox = static_cast<std::size_t>(rng.next_int(0, range));
  const auto oy = static_cast<std::size_t>(rng.next_int(0, range));
  return flip_crop_kernel(img, pad, flip, ox, oy);
}

ImageTensor run_pipeline(const ImageTensor& img, const AugmentSpec& spec, StreamKey key) {
  RngStream aug_rng = key.derive("aug");
  RngStream flip_rng = key.derive("flipcrop");
  if (spec.order == PipelineOrder::augment_then_flipcrop) {
    return flip_and_crop(apply_augmentation(img, spec, aug_rng), spec.pad, flip_rng);
  }
  return apply_augmentation(flip_and_crop(img, spec.pad, flip_rng), spec, aug_rng);
}

LabeledDataset augment_dataset(const LabeledDataset& dataset, const AugmentSpec& spec,
                               std::uint64_t seed, unsigned workers) {
  validate(dataset);
  spec.validate();
  LabeledDataset out;
  out.labels = dataset.labels;
  out.images.resize(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    out.images[i] = run_pipeline(dataset.images[i], spec, StreamKey{seed, i});
  });
  return out;
}

}  // namespace patchgauss
