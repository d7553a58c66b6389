#pragma once

#include <vector>

#include "patchgauss/tensor.hpp"

namespace patchgauss {

/// What evaluation and Fourier analysis need from a model.
class Classifier {
 public:
  virtual ~Classifier() = default;

  /// Deterministic given the model state; safe to call concurrently.
  virtual int predict(const ImageTensor& img) const = 0;

  virtual bool has_first_layer() const { return false; }

  /// Activations directly after the first convolution, flattened. Only
  /// meaningful when has_first_layer() is true.
  virtual std::vector<double> first_layer(const ImageTensor& img) const;
};

std::vector<int> predict_all(const Classifier& model, const LabeledDataset& dataset,
                             unsigned workers = 1);

}  // namespace patchgauss
