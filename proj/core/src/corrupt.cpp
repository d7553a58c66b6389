#include "patchgauss/corrupt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "patchgauss/augment.hpp"
#include "patchgauss/error.hpp"
#include "patchgauss/parallel.hpp"

namespace patchgauss {
namespace {

std::string format_param(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

void check_parameter(CorruptionKind kind, double p) {
  const auto fail = [&](const char* domain) {
    throw Error(std::string(to_string(kind)) + " parameter " + format_param(p) + " outside " + domain);
  };
  if (!std::isfinite(p)) fail("the finite reals");
  switch (kind) {
    case CorruptionKind::gaussian_noise:
      if (p < 0.0) fail("[0, inf)");
      break;
    case CorruptionKind::shot_noise:
      if (p <= 0.0) fail("(0, inf)");
      break;
    case CorruptionKind::impulse_noise:
      if (p < 0.0 || p > 1.0) fail("[0, 1]");
      break;
    case CorruptionKind::brightness:
      if (p < -1.0 || p > 1.0) fail("[-1, 1]");
      break;
    case CorruptionKind::contrast:
      if (p < 0.0) fail("[0, inf)");
      break;
    case CorruptionKind::defocus_blur:
      if (p < 0.0 || p > 64.0) fail("[0, 64]");
      break;
    case CorruptionKind::pixelate:
      if (!is_integral(p) || p < 1.0) fail("the integers >= 1");
      break;
  }
}

ImageTensor shot_noise(const ImageTensor& img, double lambda, RngStream& rng) {
  ImageTensor out = img;
  for (double& v : out.values()) {
    const double mean = std::max(v, 0.0) * lambda;
    v = std::min(std::max(static_cast<double>(sample_poisson(mean, rng)) / lambda, 0.0), 1.0);
  }
  return out;
}

ImageTensor impulse_noise(const ImageTensor& img, double p, RngStream& rng) {
  ImageTensor out = img;
  for (double& v : out.values()) {
    if (rng.next_unit() < p) v = rng.next_unit() < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

ImageTensor brightness(const ImageTensor& img, double offset) {
  ImageTensor out = img;
  for (double& v : out.values()) v += offset;
  return clip_unit(std::move(out));
}

ImageTensor contrast(const ImageTensor& img, double factor) {
  const std::size_t channels = img.channels();
  std::vector<double> means(channels, 0.0);
  const auto in = img.values();
  for (std::size_t i = 0; i < in.size(); ++i) means[i % channels] += in[i];
  for (double& m : means) m /= static_cast<double>(img.pixels());
  ImageTensor out = img;
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double m = means[i % channels];
    values[i] = (values[i] - m) * factor + m;
  }
  return clip_unit(std::move(out));
}

ImageTensor defocus_blur(const ImageTensor& img, double radius) {
  const DiskKernel kernel = disk_kernel(radius);
  const int r = kernel.radius;
  const int side = 2 * r + 1;
  const auto h = static_cast<int>(img.height());
  const auto w = static_cast<int>(img.width());
  ImageTensor out(img.height(), img.width(), img.channels(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const double wgt = kernel.weights[(dy + r) * side + (dx + r)];
            if (wgt == 0.0) continue;
            const int sx = std::clamp(x + dx, 0, w - 1);
            acc += wgt * img.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return clip_unit(std::move(out));
}

ImageTensor pixelate(const ImageTensor& img, std::size_t block) {
  ImageTensor out(img.height(), img.width(), img.channels(), 0.0);
  for (std::size_t by = 0; by < img.height(); by += block) {
    const std::size_t ey = std::min(by + block, img.height());
    for (std::size_t bx = 0; bx < img.width(); bx += block) {
      const std::size_t ex = std::min(bx + block, img.width());
      const auto count = static_cast<double>((ey - by) * (ex - bx));
      for (std::size_t c = 0; c < img.channels(); ++c) {
        double sum = 0.0;
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) sum += img.at(y, x, c);
        }
        const double mean = sum / count;
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) out.at(y, x, c) = mean;
        }
      }
    }
  }
  return clip_unit(std::move(out));
}

}  // namespace

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::shot_noise: return "shot_noise";
    case CorruptionKind::impulse_noise: return "impulse_noise";
    case CorruptionKind::brightness: return "brightness";
    case CorruptionKind::contrast: return "contrast";
    case CorruptionKind::defocus_blur: return "defocus_blur";
    case CorruptionKind::pixelate: return "pixelate";
  }
  return "?";
}

CorruptionKind parse_corruption_kind(std::string_view text) {
  for (auto kind : kAllCorruptions) {
    if (text == to_string(kind)) return kind;
  }
  throw Error("unknown corruption kind '" + std::string(text) + "'");
}

bool SeverityTable::increasing_strength(CorruptionKind kind) {
  return kind != CorruptionKind::shot_noise && kind != CorruptionKind::contrast;
}

SeverityTable SeverityTable::defaults() {
  SeverityTable t;
  t.levels_[CorruptionKind::gaussian_noise] = {0.04, 0.06, 0.08, 0.09, 0.10};
  t.levels_[CorruptionKind::shot_noise] = {500, 250, 100, 75, 50};
  t.levels_[CorruptionKind::impulse_noise] = {0.01, 0.02, 0.03, 0.05, 0.07};
  t.levels_[CorruptionKind::brightness] = {0.1, 0.2, 0.3, 0.4, 0.5};
  t.levels_[CorruptionKind::contrast] = {0.75, 0.5, 0.4, 0.3, 0.15};
  t.levels_[CorruptionKind::defocus_blur] = {1.0, 1.5, 2.0, 2.5, 3.0};
  t.levels_[CorruptionKind::pixelate] = {2, 3, 4, 5, 6};
  return t;
}

SeverityTable SeverityTable::parse(std::string_view text) {
  std::map<CorruptionKind, std::array<std::optional<double>, kSeverityLevels>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string kind_name;
    int level = 0;
    double param = 0.0;
    std::string extra;
    if (!(fields >> kind_name >> level >> param) || (fields >> extra)) {
      throw Error("severity table line " + std::to_string(line_no) + ": expected 'kind level parameter'");
    }
    const CorruptionKind kind = parse_corruption_kind(kind_name);
    if (level < 1 || level > kSeverityLevels) {
      throw Error("severity table line " + std::to_string(line_no) + ": level must be 1..5");
    }
    auto& slot = seen[kind][level - 1];
    if (slot) {
      throw Error("severity table line " + std::to_string(line_no) + ": duplicate " + kind_name +
                  " level " + std::to_string(level));
    }
    check_parameter(kind, param);
    slot = param;
  }
  SeverityTable t;
  for (auto kind : kAllCorruptions) {
    auto it = seen.find(kind);
    if (it == seen.end()) throw Error("severity table missing kind " + std::string(to_string(kind)));
    std::array<double, kSeverityLevels> values{};
    for (int l = 0; l < kSeverityLevels; ++l) {
      if (!it->second[l]) {
        throw Error("severity table missing " + std::string(to_string(kind)) + " level " +
                    std::to_string(l + 1));
      }
      values[l] = *it->second[l];
    }
    for (int l = 1; l < kSeverityLevels; ++l) {
      const bool ok = increasing_strength(kind) ? values[l] > values[l - 1] : values[l] < values[l - 1];
      if (!ok) throw Error("severity table not monotone for " + std::string(to_string(kind)));
    }
    t.levels_[kind] = values;
  }
  return t;
}

std::string SeverityTable::serialize() const {
  std::string out = "# kind level parameter\n";
  for (const auto& [kind, values] : levels_) {
    for (int l = 0; l < kSeverityLevels; ++l) {
      out += std::string(to_string(kind)) + " " + std::to_string(l + 1) + " " + format_param(values[l]) + "\n";
    }
  }
  return out;
}

double SeverityTable::parameter(CorruptionKind kind, int level) const {
  if (level < 1 || level > kSeverityLevels) throw Error("severity level must be 1..5");
  return levels_.at(kind)[level - 1];
}

CorruptionSpec CorruptionSpec::explicit_parameter(CorruptionKind kind, double parameter) {
  check_parameter(kind, parameter);
  return CorruptionSpec{kind, parameter, 0};
}

CorruptionSpec CorruptionSpec::from_level(CorruptionKind kind, int level, const SeverityTable& table) {
  return CorruptionSpec{kind, table.parameter(kind, level), level};
}

void validate(const CorruptionSpec& spec) { check_parameter(spec.kind, spec.parameter); }

std::int64_t sample_poisson(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw Error("poisson mean must be finite and >= 0");
  const double u = rng.next_unit();
  if (mean == 0.0) return 0;
  // Walk the CDF upward from a start point below which the mass is
  // negligible (< 1e-20), or from zero for small means.
  const double spread = 10.0 * std::sqrt(mean) + 10.0;
  const auto start = static_cast<std::int64_t>(std::max(0.0, std::floor(mean - spread)));
  const auto stop = static_cast<std::int64_t>(std::ceil(mean + spread));
  double pmf = std::exp(static_cast<double>(start) * std::log(mean) - mean -
                        std::lgamma(static_cast<double>(start) + 1.0));
  double cdf = pmf;
  std::int64_t k = start;
  while (u >= cdf && k < stop) {
    ++k;
    pmf *= mean / static_cast<double>(k);
    cdf += pmf;
  }
  return k;
}

DiskKernel disk_kernel(double radius) {
  if (!(radius >= 0.0)) throw Error("disk radius must be >= 0");
  DiskKernel k;
  k.radius = static_cast<int>(std::floor(radius));
  const int side = 2 * k.radius + 1;
  k.weights.assign(static_cast<std::size_t>(side * side), 0.0);
  double total = 0.0;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) {
        k.weights[(dy + k.radius) * side + (dx + k.radius)] = 1.0;
        total += 1.0;
      }
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

ImageTensor corrupt(const ImageTensor& img, const CorruptionSpec& spec, RngStream& rng) {
  validate(spec);
  switch (spec.kind) {
    case CorruptionKind::gaussian_noise: {
      const ImageTensor field = normal_field(rng, img);
      return apply_gaussian_kernel(img, spec.parameter, field);
    }
    case CorruptionKind::shot_noise: return shot_noise(img, spec.parameter, rng);
    case CorruptionKind::impulse_noise: return impulse_noise(img, spec.parameter, rng);
    case CorruptionKind::brightness: return brightness(img, spec.parameter);
    case CorruptionKind::contrast: return contrast(img, spec.parameter);
    case CorruptionKind::defocus_blur: return defocus_blur(img, spec.parameter);
    case CorruptionKind::pixelate: return pixelate(img, static_cast<std::size_t>(spec.parameter));
  }
  throw Error("unknown corruption kind");
}

LabeledDataset corrupt_dataset(const LabeledDataset& dataset, const CorruptionSpec& spec,
                               std::uint64_t seed, unsigned workers) {
  validate(dataset);
  validate(spec);
  const std::string tag = "corrupt:" + std::string(to_string(spec.kind)) + ":" + format_param(spec.parameter);
  LabeledDataset out;
  out.labels = dataset.labels;
  out.images.resize(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    RngStream rng(seed, i, tag);
    out.images[i] = corrupt(dataset.images[i], spec, rng);
  });
  return out;
}

std::vector<std::pair<double, LabeledDataset>> gaussian_eval_suite(const LabeledDataset& dataset,
                                                                   std::uint64_t seed,
                                                                   unsigned workers) {
  if (dataset.empty()) throw Error("empty dataset");
  std::vector<std::pair<double, LabeledDataset>> out;
  out.reserve(kEvalSigmas.size());
  for (double sigma : kEvalSigmas) {
    const auto spec = CorruptionSpec::explicit_parameter(CorruptionKind::gaussian_noise, sigma);
    out.emplace_back(sigma, corrupt_dataset(dataset, spec, seed, workers));
  }
  return out;
}

}  // namespace patchgauss
