#include "patchgauss/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "patchgauss/error.hpp"
#include "patchgauss/io.hpp"
#include "patchgauss/parallel.hpp"

namespace patchgauss {
namespace {

using cplx = std::complex<double>;

/// exp(sign * 2 pi i k / n) for k in [0, n).
std::vector<cplx> twiddles(std::size_t n, double sign) {
  std::vector<cplx> tw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(angle), std::sin(angle)};
  }
  return tw;
}

/// In-place unnormalised DFT along one axis of a row-major h x w grid.
void dft_axis(std::vector<cplx>& grid, std::size_t h, std::size_t w, bool along_rows, double sign) {
  const std::size_t n = along_rows ? w : h;
  const std::size_t lines = along_rows ? h : w;
  const auto tw = twiddles(n, sign);
  std::vector<cplx> in(n);
  for (std::size_t line = 0; line < lines; ++line) {
    const auto at = [&](std::size_t k) -> cplx& {
      return along_rows ? grid[line * w + k] : grid[k * w + line];
    };
    for (std::size_t k = 0; k < n; ++k) in[k] = at(k);
    for (std::size_t u = 0; u < n; ++u) {
      cplx acc = 0.0;
      std::size_t phase = 0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += in[k] * tw[phase];
        phase += u;
        if (phase >= n) phase -= n;
      }
      at(u) = acc;
    }
  }
}

/// Unshifted index of a centred frequency.
std::size_t wrap_index(int f, std::size_t n) {
  const auto ni = static_cast<int>(n);
  return static_cast<std::size_t>(((f % ni) + ni) % ni);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Spectrum::Spectrum(std::size_t height, std::size_t width)
    : height_(height), width_(width), coeffs_(height * width) {
  if (height == 0 || width == 0) throw Error("spectrum needs a non-empty grid");
}

std::size_t Spectrum::offset(int i, int j) const {
  if (!contains(i, j)) {
    throw Error("frequency (" + std::to_string(i) + "," + std::to_string(j) + ") outside the " +
                std::to_string(height_) + "x" + std::to_string(width_) + " grid");
  }
  return static_cast<std::size_t>(i - min_freq_i()) * width_ + static_cast<std::size_t>(j - min_freq_j());
}

std::pair<int, int> Spectrum::conjugate(int i, int j) const {
  const auto wrap = [](int f, int lo, int hi, int n) {
    if (f > hi) f -= n;
    if (f < lo) f += n;
    return f;
  };
  return {wrap(-i, min_freq_i(), max_freq_i(), static_cast<int>(height_)),
          wrap(-j, min_freq_j(), max_freq_j(), static_cast<int>(width_))};
}

double Plane::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

Spectrum dft2(const Plane& plane) {
  const std::size_t h = plane.height;
  const std::size_t w = plane.width;
  if (plane.values.size() != h * w) throw Error("plane data does not match its shape");
  std::vector<cplx> grid(plane.values.begin(), plane.values.end());
  dft_axis(grid, h, w, true, -1.0);
  dft_axis(grid, h, w, false, -1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  Spectrum out(h, w);
  for (int i = out.min_freq_i(); i <= out.max_freq_i(); ++i) {
    for (int j = out.min_freq_j(); j <= out.max_freq_j(); ++j) {
      out.at(i, j) = grid[wrap_index(i, h) * w + wrap_index(j, w)] * scale;
    }
  }
  return out;
}

Plane idft2(const Spectrum& spectrum) {
  const std::size_t h = spectrum.height();
  const std::size_t w = spectrum.width();
  std::vector<cplx> grid(h * w);
  for (int i = spectrum.min_freq_i(); i <= spectrum.max_freq_i(); ++i) {
    for (int j = spectrum.min_freq_j(); j <= spectrum.max_freq_j(); ++j) {
      grid[wrap_index(i, h) * w + wrap_index(j, w)] = spectrum.at(i, j);
    }
  }
  dft_axis(grid, h, w, true, 1.0);
  dft_axis(grid, h, w, false, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  Plane out{h, w, std::vector<double>(h * w)};
  double worst_imag = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.values[k] = grid[k].real() * scale;
    worst_imag = std::max(worst_imag, std::abs(grid[k].imag() * scale));
  }
  if (!(worst_imag < 1e-6)) throw Error("non-real inverse");
  return out;
}

Plane fourier_basis(std::size_t height, std::size_t width, int i, int j) {
  Spectrum s(height, width);
  if (!s.contains(i, j)) {
    throw Error("frequency (" + std::to_string(i) + "," + std::to_string(j) + ") outside the " +
                std::to_string(height) + "x" + std::to_string(width) + " grid");
  }
  const auto [ci, cj] = s.conjugate(i, j);
  s.at(i, j) = 1.0;
  s.at(ci, cj) = 1.0;
  Plane u = idft2(s);
  const double n = u.norm();
  for (double& v : u.values) v /= n;
  return u;
}

std::vector<std::pair<int, int>> half_plane_frequencies(std::size_t height, std::size_t width,
                                                        int max_abs) {
  const Spectrum grid(height, width);
  std::vector<std::pair<int, int>> out;
  for (int i = grid.min_freq_i(); i <= grid.max_freq_i(); ++i) {
    for (int j = grid.min_freq_j(); j <= grid.max_freq_j(); ++j) {
      if (max_abs >= 0 && (std::abs(i) > max_abs || std::abs(j) > max_abs)) continue;
      if (std::pair{i, j} <= grid.conjugate(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

Plane basis_perturbation(const Plane& basis, double norm, double sign) {
  Plane out = basis;
  for (double& v : out.values) v *= sign * norm;
  return out;
}

ImageTensor perturb_with_basis(const ImageTensor& img, const Plane& basis, double norm,
                               RngStream& rng) {
  if (basis.height != img.height() || basis.width != img.width()) {
    throw Error("basis shape does not match image plane");
  }
  const double sign = rng.next_unit() < 0.5 ? -1.0 : 1.0;
  ImageTensor out = img;
  auto values = out.values();
  const std::size_t channels = img.channels();
  for (std::size_t p = 0; p < img.pixels(); ++p) {
    const double delta = sign * norm * basis.values[p];
    for (std::size_t c = 0; c < channels; ++c) values[p * channels + c] += delta;
  }
  return clip_unit(std::move(out));
}

std::string to_string(Probe probe) {
  return probe == Probe::test_error ? "test_error" : "first_layer";
}

Probe parse_probe(const std::string& text) {
  if (text == "test_error") return Probe::test_error;
  if (text == "first_layer") return Probe::first_layer;
  throw Error("unknown probe '" + text + "'");
}

std::string FourierHeatmap::to_csv() const {
  std::string out = "# probe=" + to_string(probe) + " norm=" + format_double(norm) +
                    " seed=" + std::to_string(seed) + "\n";
  const bool layer = probe == Probe::first_layer;
  out += layer ? "i,j,value,absolute\n" : "i,j,value\n";
  for (const auto& cell : cells) {
    out += std::to_string(cell.i) + "," + std::to_string(cell.j) + "," + format_double(cell.value);
    if (layer) out += "," + format_double(cell.absolute);
    out += "\n";
  }
  return out;
}

std::vector<std::uint8_t> FourierHeatmap::to_ppm() const {
  const Spectrum grid(height, width);
  ImageTensor img(height, width, 3, 0.0);
  double peak = 0.0;
  for (const auto& cell : cells) peak = std::max(peak, cell.value);
  for (const auto& cell : cells) {
    const double shade = peak > 0.0 ? cell.value / peak : 0.0;
    const auto [ci, cj] = grid.conjugate(cell.i, cell.j);
    for (auto [fi, fj] : {std::pair{cell.i, cell.j}, std::pair{ci, cj}}) {
      const auto row = static_cast<std::size_t>(fi - grid.min_freq_i());
      const auto col = static_cast<std::size_t>(fj - grid.min_freq_j());
      for (std::size_t c = 0; c < 3; ++c) img.at(row, col, c) = shade;
    }
  }
  return write_ppm(img);
}

FourierHeatmap sensitivity_heatmap(const Classifier& model, const LabeledDataset& dataset,
                                   std::span<const std::pair<int, int>> freqs, double norm,
                                   Probe probe, std::uint64_t seed, unsigned workers) {
  if (dataset.empty()) throw Error("empty dataset");
  validate(dataset);
  if (probe == Probe::first_layer && !model.has_first_layer()) {
    throw Error("model does not expose first-layer activations");
  }
  const ImageTensor& first = dataset.images.front();
  FourierHeatmap map;
  map.probe = probe;
  map.norm = norm;
  map.seed = seed;
  map.height = first.height();
  map.width = first.width();
  map.cells.resize(freqs.size());

  const auto n = static_cast<double>(dataset.size());
  std::vector<std::vector<double>> clean_acts;
  double clean_norm_mean = 0.0;
  if (probe == Probe::first_layer) {
    clean_acts.resize(dataset.size());
    parallel_for(dataset.size(), workers,
                 [&](std::size_t k) { clean_acts[k] = model.first_layer(dataset.images[k]); });
    for (const auto& a : clean_acts) {
      double s = 0.0;
      for (double v : a) s += v * v;
      clean_norm_mean += std::sqrt(s);
    }
    clean_norm_mean /= n;
  }

  parallel_for(freqs.size(), workers, [&](std::size_t f) {
    const auto [fi, fj] = freqs[f];
    const Plane basis = fourier_basis(map.height, map.width, fi, fj);
    const std::string tag = "fourier:" + std::to_string(fi) + "," + std::to_string(fj);
    HeatmapCell cell{fi, fj, 0.0, 0.0};
    std::size_t errors = 0;
    double diff_sum = 0.0;
    for (std::size_t k = 0; k < dataset.size(); ++k) {
      RngStream rng(seed, k, tag);
      const ImageTensor perturbed = perturb_with_basis(dataset.images[k], basis, norm, rng);
      if (probe == Probe::test_error) {
        errors += model.predict(perturbed) != dataset.labels[k];
      } else {
        const auto act = model.first_layer(perturbed);
        double s = 0.0;
        for (std::size_t e = 0; e < act.size(); ++e) {
          const double d = act[e] - clean_acts[k][e];
          s += d * d;
        }
        diff_sum += std::sqrt(s);
      }
    }
    if (probe == Probe::test_error) {
      cell.value = static_cast<double>(errors) / n;
    } else {
      cell.absolute = diff_sum / n;
      if (clean_norm_mean > 0.0) {
        cell.value = cell.absolute / clean_norm_mean;
      } else if (cell.absolute > 0.0) {
        throw Error("clean first-layer activations are all zero");
      }
    }
    map.cells[f] = cell;
  });
  return map;
}

Plane channel_plane(const ImageTensor& img, std::size_t c) {
  return Plane{img.height(), img.width(), img.plane(c)};
}

ImageTensor high_pass(const ImageTensor& img, double radius) {
  if (!(radius >= 0.0)) throw Error("radius must be >= 0");
  ImageTensor out = img;
  if (radius == 0.0) return clip_unit(std::move(out));
  for (std::size_t c = 0; c < img.channels(); ++c) {
    Spectrum s = dft2(channel_plane(img, c));
    for (int i = s.min_freq_i(); i <= s.max_freq_i(); ++i) {
      for (int j = s.min_freq_j(); j <= s.max_freq_j(); ++j) {
        if (std::hypot(static_cast<double>(i), static_cast<double>(j)) < radius) s.at(i, j) = 0.0;
      }
    }
    Plane filtered = idft2(s);
    for (double& v : filtered.values) v += 0.5;  // DC is always inside a positive radius
    out.set_plane(c, filtered.values);
  }
  return clip_unit(std::move(out));
}

}  // namespace patchgauss
