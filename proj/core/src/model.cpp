#include "patchgauss/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "patchgauss/error.hpp"

namespace patchgauss {
namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  bool tag(const char (&expected)[5]) {
    need(4);
    const bool ok = std::equal(expected, expected + 4, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ += 4;
    return ok;
  }
  std::vector<double> section(const char (&name)[5], std::size_t expected) {
    if (!tag(name)) throw FormatError(std::string("missing ") + name + " section");
    const std::uint64_t count = uint(8);
    if (count != expected) throw FormatError(std::string(name) + " section has the wrong length");
    std::vector<double> out(count);
    for (auto& v : out) v = std::bit_cast<double>(uint(8));
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ToyModel::ToyModel(std::size_t filters, std::size_t channels, std::size_t grid, std::size_t classes)
    : filters_(filters), channels_(channels), grid_(grid), classes_(classes) {
  if (filters < 1 || channels < 1 || grid < 1 || classes < 1) {
    throw Error("toy model needs filters, channels, grid and classes >= 1");
  }
  filter_weights_.assign(filters * 9 * channels, 0.0);
  head_.assign((feature_count() + 1) * classes, 0.0);
}

bool operator==(const ToyModel& a, const ToyModel& b) {
  return a.filters_ == b.filters_ && a.channels_ == b.channels_ && a.grid_ == b.grid_ &&
         a.classes_ == b.classes_ && a.filter_weights_ == b.filter_weights_ && a.head_ == b.head_;
}

std::vector<double> ToyModel::activations(const ImageTensor& img) const {
  if (img.channels() != channels_) {
    throw Error("model expects " + std::to_string(channels_) + " channels, image has " +
                std::to_string(img.channels()));
  }
  if (img.height() < grid_ || img.width() < grid_) throw Error("image smaller than the pooling grid");
  const auto h = static_cast<int>(img.height());
  const auto w = static_cast<int>(img.width());
  const std::size_t c = channels_;
  const std::size_t taps = 9 * c;
  const auto src = img.values();
  std::vector<double> out(img.pixels() * filters_);
  std::vector<double> patch(taps);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Gather the clamped 3x3xC neighbourhood in kernel tap order.
      double* p = patch.data();
      for (int dy = -1; dy <= 1; ++dy) {
        const auto sy = static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1));
        for (int dx = -1; dx <= 1; ++dx) {
          const auto sx = static_cast<std::size_t>(std::clamp(x + dx, 0, w - 1));
          const double* px = &src[(sy * img.width() + sx) * c];
          for (std::size_t ch = 0; ch < c; ++ch) *p++ = px[ch];
        }
      }
      double* dst = &out[(static_cast<std::size_t>(y) * img.width() + static_cast<std::size_t>(x)) * filters_];
      for (std::size_t k = 0; k < filters_; ++k) {
        const double* kernel = &filter_weights_[k * taps];
        double acc = 0.0;
        for (std::size_t t = 0; t < taps; ++t) acc += kernel[t] * patch[t];
        dst[k] = std::max(acc, 0.0);
      }
    }
  }
  return out;
}

ToyModel::Forward ToyModel::forward(const ImageTensor& img) const {
  Forward f;
  f.activations = activations(img);
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  f.features.assign(feature_count(), 0.0);
  for (std::size_t gy = 0; gy < grid_; ++gy) {
    const std::size_t y0 = gy * h / grid_;
    const std::size_t y1 = (gy + 1) * h / grid_;
    for (std::size_t gx = 0; gx < grid_; ++gx) {
      const std::size_t x0 = gx * w / grid_;
      const std::size_t x1 = (gx + 1) * w / grid_;
      const auto count = static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t k = 0; k < filters_; ++k) {
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) sum += f.activations[(y * w + x) * filters_ + k];
        }
        f.features[k * grid_ * grid_ + gy * grid_ + gx] = sum / count;
      }
    }
  }
  f.logits = logits_from_features(f.features);
  return f;
}

std::vector<double> ToyModel::features(const ImageTensor& img) const { return forward(img).features; }

std::vector<double> ToyModel::logits_from_features(std::span<const double> features) const {
  if (features.size() != feature_count()) throw Error("feature vector has the wrong length");
  std::vector<double> logits(head_.end() - static_cast<std::ptrdiff_t>(classes_), head_.end());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double x = features[f];
    if (x == 0.0) continue;
    const double* row = &head_[f * classes_];
    for (std::size_t c = 0; c < classes_; ++c) logits[c] += x * row[c];
  }
  return logits;
}

int ToyModel::predict(const ImageTensor& img) const { return argmax(forward(img).logits); }

std::vector<double> ToyModel::first_layer(const ImageTensor& img) const { return activations(img); }

ToyModel init_toy_model(std::uint64_t seed, std::size_t filters, std::size_t channels,
                        std::size_t grid, std::size_t classes) {
  ToyModel model(filters, channels, grid, classes);
  RngStream rng(seed, 0, "filters");
  const double scale = 1.0 / std::sqrt(9.0 * static_cast<double>(channels));
  for (double& w : model.mutable_filter_weights()) w = scale * rng.next_normal();
  return model;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw Error("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

namespace {

/// Softmax with max subtraction.
std::vector<double> softmax(std::vector<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : logits) v /= total;
  return logits;
}

void check_batch(const ToyModel& model, std::span<const std::vector<double>> features,
                 std::span<const int> labels) {
  if (features.size() != labels.size() || features.empty()) throw Error("batch features and labels must align");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.classes()) throw Error("label out of range");
  }
}

}  // namespace

double head_loss(const ToyModel& model, std::span<const std::vector<double>> features,
                 std::span<const int> labels) {
  check_batch(model, features, labels);
  double loss = 0.0;
  for (std::size_t b = 0; b < features.size(); ++b) {
    const auto logits = model.logits_from_features(features[b]);
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits) total += std::exp(v - peak);
    loss += peak + std::log(total) - logits[static_cast<std::size_t>(labels[b])];
  }
  return loss / static_cast<double>(features.size());
}

std::vector<double> head_gradient(const ToyModel& model, std::span<const std::vector<double>> features,
                                  std::span<const int> labels) {
  check_batch(model, features, labels);
  const std::size_t classes = model.classes();
  const std::size_t nf = model.feature_count();
  std::vector<double> grad((nf + 1) * classes, 0.0);
  const double inv_batch = 1.0 / static_cast<double>(features.size());
  for (std::size_t b = 0; b < features.size(); ++b) {
    auto delta = softmax(model.logits_from_features(features[b]));
    delta[static_cast<std::size_t>(labels[b])] -= 1.0;
    for (std::size_t f = 0; f < nf; ++f) {
      const double x = features[b][f] * inv_batch;
      if (x == 0.0) continue;
      for (std::size_t c = 0; c < classes; ++c) grad[f * classes + c] += x * delta[c];
    }
    for (std::size_t c = 0; c < classes; ++c) grad[nf * classes + c] += inv_batch * delta[c];
  }
  return grad;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be finite and >= 0");
  if (batch_size < 1) throw Error("batch size must be >= 1");
  augment.validate();
}

namespace {

/// Per-feature mean and spread over the clean training set.
struct FeatureScale {
  std::vector<double> mean;
  std::vector<double> scale;
};

FeatureScale feature_scale(const ToyModel& model, const LabeledDataset& dataset) {
  const std::size_t nf = model.feature_count();
  FeatureScale fs{std::vector<double>(nf, 0.0), std::vector<double>(nf, 0.0)};
  std::vector<std::vector<double>> all;
  all.reserve(dataset.size());
  for (const auto& img : dataset.images) all.push_back(model.features(img));
  const auto n = static_cast<double>(all.size());
  for (const auto& f : all) {
    for (std::size_t k = 0; k < nf; ++k) fs.mean[k] += f[k] / n;
  }
  for (const auto& f : all) {
    for (std::size_t k = 0; k < nf; ++k) fs.scale[k] += (f[k] - fs.mean[k]) * (f[k] - fs.mean[k]) / n;
  }
  for (double& s : fs.scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  return fs;
}

}  // namespace

ToyModel train(ToyModel model, const LabeledDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw Error("empty dataset");
  validate(dataset);
  for (int label : dataset.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.classes()) throw Error("label out of range");
  }
  const std::size_t n = dataset.size();
  const std::size_t nf = model.feature_count();
  const std::size_t classes = model.classes();

  // SGD runs on z = (x - mean) / scale. The head over z is an equivalent
  // reparametrisation of the head over x and is folded back at the end.
  FeatureScale fs;
  if (config.standardize) {
    fs = feature_scale(model, dataset);
  } else {
    fs = {std::vector<double>(nf, 0.0), std::vector<double>(nf, 1.0)};
  }
  ToyModel work = model;
  {
    auto v = work.mutable_head();
    const auto w = model.head();
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t c = 0; c < classes; ++c) {
        v[f * classes + c] = w[f * classes + c] * fs.scale[f];
        v[nf * classes + c] += w[f * classes + c] * fs.mean[f];
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::vector<std::vector<double>> batch_features;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle(config.seed, epoch, "shuffle");
    for (std::size_t i = n; i-- > 1;) {
      const auto j = static_cast<std::size_t>(shuffle.next_int(0, static_cast<std::int64_t>(i)));
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      batch_features.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const ImageTensor augmented =
            run_pipeline(dataset.images[idx], config.augment, StreamKey{config.seed, epoch * n + idx});
        auto z = model.features(augmented);
        for (std::size_t f = 0; f < nf; ++f) z[f] = (z[f] - fs.mean[f]) / fs.scale[f];
        batch_features.push_back(std::move(z));
        batch_labels.push_back(dataset.labels[idx]);
      }
      const auto grad = head_gradient(work, batch_features, batch_labels);
      auto head = work.mutable_head();
      for (std::size_t w = 0; w < head.size(); ++w) head[w] -= config.learning_rate * grad[w];
    }
  }

  auto out = model.mutable_head();
  const auto v = work.head();
  for (std::size_t c = 0; c < classes; ++c) out[nf * classes + c] = v[nf * classes + c];
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t c = 0; c < classes; ++c) {
      out[f * classes + c] = v[f * classes + c] / fs.scale[f];
      out[nf * classes + c] -= out[f * classes + c] * fs.mean[f];
    }
  }
  return model;
}

namespace {

/// One lattice frequency per +/- pair with min_mag <= |f| <= max_mag.
std::vector<std::pair<int, int>> lattice_frequencies(double min_mag, double max_mag, int limit) {
  std::vector<std::pair<int, int>> out;
  for (int fy = 0; fy <= limit; ++fy) {
    for (int fx = -limit; fx <= limit; ++fx) {
      if (fy == 0 && fx <= 0) continue;
      const double mag = std::hypot(static_cast<double>(fy), static_cast<double>(fx));
      if (mag >= min_mag && mag <= max_mag) out.emplace_back(fy, fx);
    }
  }
  return out;
}

}  // namespace

LabeledDataset synth_dataset(std::uint64_t seed, std::size_t n, SynthKind kind) {
  if (kind != SynthKind::low_freq_vs_high_freq) throw Error("unknown synthetic dataset kind");
  if (n < 2) throw Error("synthetic dataset needs n >= 2");
  const int limit = static_cast<int>(kSynthSide / 2) - 1;
  const std::array<std::vector<std::pair<int, int>>, 2> bands = {
      lattice_frequencies(1.0, 2.0, limit), lattice_frequencies(8.0, 11.0, limit)};
  LabeledDataset out;
  out.images.reserve(n);
  out.labels.reserve(n);
  const double side = static_cast<double>(kSynthSide);
  for (std::size_t k = 0; k < n; ++k) {
    const int label = static_cast<int>(k % 2);
    RngStream rng(seed, k, "synth");
    const auto& band = bands[static_cast<std::size_t>(label)];
    const auto [fy, fx] = band[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(band.size()) - 1))];
    const double phase = 2.0 * std::numbers::pi * rng.next_unit();
    ImageTensor img(kSynthSide, kSynthSide, 1);
    for (std::size_t y = 0; y < kSynthSide; ++y) {
      for (std::size_t x = 0; x < kSynthSide; ++x) {
        const double arg = 2.0 * std::numbers::pi * (fy * static_cast<double>(y) + fx * static_cast<double>(x)) / side;
        img.at(y, x, 0) = 0.5 + kSynthAmplitude[static_cast<std::size_t>(label)] * std::cos(arg + phase) + kSynthNoiseSigma * rng.next_normal();
      }
    }
    out.images.push_back(clip_unit(std::move(img)));
    out.labels.push_back(label);
  }
  return out;
}

Bytes encode_model(const ToyModel& model) {
  Bytes out = {'T', 'O', 'Y', 'M'};
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.filter_count()));
  put_u32(out, static_cast<std::uint32_t>(model.channels()));
  put_u32(out, static_cast<std::uint32_t>(model.grid()));
  put_u32(out, static_cast<std::uint32_t>(model.classes()));
  const auto section = [&out](const char (&name)[5], std::span<const double> values) {
    out.insert(out.end(), name, name + 4);
    put_u64(out, values.size());
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  };
  section("FILT", model.filter_weights());
  section("HEAD", model.head());
  return out;
}

ToyModel decode_model(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || !in.tag("TOYM")) throw FormatError("bad magic");
  const auto version = in.uint(4);
  if (version != kModelVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto filters = in.uint(4);
  const auto channels = in.uint(4);
  const auto grid = in.uint(4);
  const auto classes = in.uint(4);
  if (filters == 0 || channels == 0 || grid == 0 || classes == 0 || filters > 4096 || channels > 64 ||
      grid > 1024 || classes > 65536) {
    throw FormatError("implausible model shape");
  }
  ToyModel model(filters, channels, grid, classes);
  const auto fw = in.section("FILT", model.filter_weights().size());
  const auto head = in.section("HEAD", model.head().size());
  if (!in.done()) throw FormatError("trailing bytes after checkpoint");
  std::copy(fw.begin(), fw.end(), model.mutable_filter_weights().begin());
  std::copy(head.begin(), head.end(), model.mutable_head().begin());
  return model;
}

}  // namespace patchgauss
