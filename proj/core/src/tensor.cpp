#include "patchgauss/tensor.hpp"

#include <algorithm>
#include <string>

#include "patchgauss/error.hpp"

namespace patchgauss {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels,
                         std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != height * width * channels) {
    throw Error("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                std::to_string(height) + "x" + std::to_string(width) + "x" +
                std::to_string(channels));
  }
}

std::vector<double> ImageTensor::plane(std::size_t c) const {
  std::vector<double> out(pixels());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = data_[p * channels_ + c];
  return out;
}

void ImageTensor::set_plane(std::size_t c, std::span<const double> plane) {
  if (plane.size() != pixels()) throw Error("plane size does not match image");
  for (std::size_t p = 0; p < plane.size(); ++p) data_[p * channels_ + c] = plane[p];
}

void validate(const LabeledDataset& dataset) {
  if (dataset.images.size() != dataset.labels.size()) {
    throw Error("dataset has " + std::to_string(dataset.images.size()) + " images but " +
                std::to_string(dataset.labels.size()) + " labels");
  }
  for (const auto& img : dataset.images) {
    if (!img.same_shape(dataset.images.front())) throw Error("dataset images differ in shape");
  }
}

ImageTensor clip_unit(ImageTensor t) {
  for (double& v : t.values()) v = std::min(std::max(v, 0.0), 1.0);
  return t;
}

ChannelMean channel_mean(const LabeledDataset& dataset) {
  if (dataset.empty()) throw Error("empty dataset");
  validate(dataset);
  const std::size_t channels = dataset.images.front().channels();
  std::vector<double> sums(channels, 0.0);
  std::size_t count = 0;
  for (const auto& img : dataset.images) {
    const auto values = img.values();
    for (std::size_t i = 0; i < values.size(); ++i) sums[i % channels] += values[i];
    count += img.pixels();
  }
  if (count == 0) throw Error("empty dataset");
  for (double& s : sums) s /= static_cast<double>(count);
  return ChannelMean{std::move(sums)};
}

}  // namespace patchgauss
