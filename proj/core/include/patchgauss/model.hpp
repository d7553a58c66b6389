#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "patchgauss/augment.hpp"
#include "patchgauss/classifier.hpp"
#include "patchgauss/io.hpp"

namespace patchgauss {

/// Frozen random 3x3 convolution + ReLU, GxG average pooling, and a trained
/// affine softmax head.
class ToyModel : public Classifier {
 public:
  ToyModel(std::size_t filters, std::size_t channels, std::size_t grid, std::size_t classes);

  std::size_t filter_count() const { return filters_; }
  std::size_t channels() const { return channels_; }
  std::size_t grid() const { return grid_; }
  std::size_t classes() const { return classes_; }
  std::size_t feature_count() const { return filters_ * grid_ * grid_; }

  /// filters x 3 x 3 x channels, indexed [k][dy][dx][c].
  std::span<const double> filter_weights() const { return filter_weights_; }
  std::span<double> mutable_filter_weights() { return filter_weights_; }

  /// (feature_count + 1) x classes, row-major; the last row is the bias.
  std::span<const double> head() const { return head_; }
  std::span<double> mutable_head() { return head_; }

  struct Forward {
    std::vector<double> logits;
    /// H x W x filters, interleaved like ImageTensor.
    std::vector<double> activations;
    std::vector<double> features;
  };
  Forward forward(const ImageTensor& img) const;

  std::vector<double> features(const ImageTensor& img) const;
  std::vector<double> logits_from_features(std::span<const double> features) const;

  int predict(const ImageTensor& img) const override;
  bool has_first_layer() const override { return true; }
  std::vector<double> first_layer(const ImageTensor& img) const override;

  friend bool operator==(const ToyModel& a, const ToyModel& b);

 private:
  std::vector<double> activations(const ImageTensor& img) const;

  std::size_t filters_;
  std::size_t channels_;
  std::size_t grid_;
  std::size_t classes_;
  std::vector<double> filter_weights_;
  std::vector<double> head_;
};

/// Filters ~ N(0, 1 / (9C)) from stream (seed, 0, "filters"); head zero.
ToyModel init_toy_model(std::uint64_t seed, std::size_t filters, std::size_t channels,
                        std::size_t grid, std::size_t classes);

/// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> values);

/// Mean softmax cross-entropy of the head over a batch of feature vectors.
double head_loss(const ToyModel& model, std::span<const std::vector<double>> features,
                 std::span<const int> labels);

/// Gradient of head_loss with respect to every head weight, same layout as
/// ToyModel::head().
std::vector<double> head_gradient(const ToyModel& model,
                                  std::span<const std::vector<double>> features,
                                  std::span<const int> labels);

struct TrainConfig {
  std::size_t epochs = 1;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AugmentSpec augment;
  /// Run SGD on features standardised over the clean training set; the
  /// returned head still acts on raw features.
  bool standardize = true;

  void validate() const;
};

/// Mini-batch SGD on the head (see TrainConfig::standardize). Epoch e shuffles with stream (seed, e,
/// "shuffle"); example i in epoch e is augmented by run_pipeline keyed
/// (seed, e * n + i).
ToyModel train(ToyModel model, const LabeledDataset& dataset, const TrainConfig& config);

enum class SynthKind { low_freq_vs_high_freq };

inline constexpr std::size_t kSynthSide = 32;
/// Grating amplitude per class (low frequency, high frequency).
inline constexpr std::array<double, 2> kSynthAmplitude = {0.45, 0.35};
inline constexpr double kSynthNoiseSigma = 0.05;

/// 32x32x1 gratings. Class 0 uses a lattice frequency of magnitude in [1, 2]
/// (period >= 16 px), class 1 magnitude in [8, 11] (period <= 4 px), so each
/// grating is exactly periodic on the grid. Phase is uniform; background
/// noise sigma 0.05. Labels alternate 0, 1, 0, ...
LabeledDataset synth_dataset(std::uint64_t seed, std::size_t n,
                             SynthKind kind = SynthKind::low_freq_vs_high_freq);

/// "TOYM" checkpoint: magic, u32 version, u32 filters/channels/grid/classes,
/// then a "FILT" and a "HEAD" section each holding a u64 count followed by
/// little-endian float64 values.
Bytes encode_model(const ToyModel& model);
ToyModel decode_model(std::span<const std::uint8_t> bytes);

}  // namespace patchgauss
