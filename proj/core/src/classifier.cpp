#include "patchgauss/classifier.hpp"

#include "patchgauss/error.hpp"
#include "patchgauss/parallel.hpp"

namespace patchgauss {

std::vector<double> Classifier::first_layer(const ImageTensor&) const {
  throw Error("model does not expose first-layer activations");
}

std::vector<int> predict_all(const Classifier& model, const LabeledDataset& dataset, unsigned workers) {
  std::vector<int> out(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) { out[i] = model.predict(dataset.images[i]); });
  return out;
}

}  // namespace patchgauss
