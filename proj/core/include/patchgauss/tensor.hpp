#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace patchgauss {

/// H x W x C image with intensities nominally in [0, 1].
///
/// Storage is row-major with channels interleaved, so element (y, x, c)
/// lives at ((y * width) + x) * channels + c. Values are kept in double
/// precision; byte- and float-valued file formats convert at the I/O edge.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixels() const { return height_ * width_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) { return data_[index(y, x, c)]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data_[index(y, x, c)]; }

  std::size_t index(std::size_t y, std::size_t x, std::size_t c) const {
    return (y * width_ + x) * channels_ + c;
  }

  std::span<double> values() & { return data_; }
  std::span<const double> values() const& { return data_; }
  std::span<const double> values() && = delete;  // would dangle

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Copy of one channel as a dense height x width plane.
  std::vector<double> plane(std::size_t c) const;
  void set_plane(std::size_t c, std::span<const double> plane);

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
};

/// Throws unless images and labels align and every image shares one shape.
void validate(const LabeledDataset& dataset);

/// Per-channel mean intensity of a dataset; the Cutout fill colour.
struct ChannelMean {
  std::vector<double> values;

  std::size_t channels() const { return values.size(); }
};

ImageTensor clip_unit(ImageTensor t);

/// Arithmetic mean over every pixel of every image, per channel.
ChannelMean channel_mean(const LabeledDataset& dataset);

}  // namespace patchgauss
