#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "patchgauss/classifier.hpp"
#include "patchgauss/rng.hpp"
#include "patchgauss/tensor.hpp"

namespace patchgauss {

/// Centred 2-D spectrum: the zero frequency sits at row height/2, column
/// width/2 (integer division). Frequency i (vertical) ranges over
/// [-(height/2), height - height/2 - 1], likewise j over the width.
class Spectrum {
 public:
  Spectrum(std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  int min_freq_i() const { return -static_cast<int>(height_ / 2); }
  int max_freq_i() const { return static_cast<int>(height_ - height_ / 2) - 1; }
  int min_freq_j() const { return -static_cast<int>(width_ / 2); }
  int max_freq_j() const { return static_cast<int>(width_ - width_ / 2) - 1; }
  bool contains(int i, int j) const {
    return i >= min_freq_i() && i <= max_freq_i() && j >= min_freq_j() && j <= max_freq_j();
  }

  std::complex<double>& at(int i, int j) { return coeffs_[offset(i, j)]; }
  const std::complex<double>& at(int i, int j) const { return coeffs_[offset(i, j)]; }

  std::span<std::complex<double>> coefficients() & { return coeffs_; }
  std::span<const std::complex<double>> coefficients() const& { return coeffs_; }
  std::span<const std::complex<double>> coefficients() && = delete;

  /// Frequency pair (-i, -j) wrapped back into the centred grid.
  std::pair<int, int> conjugate(int i, int j) const;

 private:
  std::size_t offset(int i, int j) const;

  std::size_t height_;
  std::size_t width_;
  std::vector<std::complex<double>> coeffs_;
};

/// Row-major height x width real plane.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double norm() const;
};

/// Unitary 2-D DFT (1/sqrt(HW) in both directions), exact for any size.
Spectrum dft2(const Plane& plane);

/// Throws "non-real inverse" when the largest imaginary part is >= 1e-6.
Plane idft2(const Spectrum& spectrum);

/// Unit-norm cosine grating cos(2 pi (i y / H + j x / W)), i.e. the real
/// plane whose spectrum holds equal real coefficients at (i, j) and (-i, -j).
Plane fourier_basis(std::size_t height, std::size_t width, int i, int j);

/// One representative (i, j) per conjugate pair of the grid, optionally
/// limited to |i|, |j| <= max_abs. Ordered by i, then j.
std::vector<std::pair<int, int>> half_plane_frequencies(std::size_t height, std::size_t width,
                                                        int max_abs = -1);

/// sign * v * U, the pre-clip perturbation added to every channel.
Plane basis_perturbation(const Plane& basis, double norm, double sign);

/// Draws sign = next_unit < 0.5 ? -1 : +1 once per image and returns
/// clip_unit(img + sign * v * U) with U broadcast over channels.
ImageTensor perturb_with_basis(const ImageTensor& img, const Plane& basis, double norm,
                               RngStream& rng);

enum class Probe { test_error, first_layer };
std::string to_string(Probe probe);
Probe parse_probe(const std::string& text);

struct HeatmapCell {
  int i = 0;
  int j = 0;
  double value = 0.0;
  /// first_layer only: mean absolute activation change, not divided by the
  /// mean clean activation norm.
  double absolute = 0.0;
};

struct FourierHeatmap {
  Probe probe = Probe::test_error;
  double norm = 0.0;
  std::uint64_t seed = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<HeatmapCell> cells;

  /// "# probe=... norm=... seed=..." then "i,j,value" (plus ",absolute" for
  /// the first_layer probe).
  std::string to_csv() const;

  /// Full-grid greyscale rendering, zero frequency at the centre, conjugate
  /// cells mirrored. Black is 0, white is the largest value.
  std::vector<std::uint8_t> to_ppm() const;
};

/// For each frequency: perturbs every image (sign stream keyed by the image
/// index and a tag naming the frequency) and records either the test error
/// or mean ||a(perturbed) - a(clean)|| / mean ||a(clean)|| of the first-layer
/// activations.
FourierHeatmap sensitivity_heatmap(const Classifier& model, const LabeledDataset& dataset,
                                   std::span<const std::pair<int, int>> freqs, double norm,
                                   Probe probe, std::uint64_t seed, unsigned workers = 1);

/// Zeroes every centred coefficient closer than `radius` to the origin, per
/// channel; adds 0.5 back when the DC term was removed, then clips.
ImageTensor high_pass(const ImageTensor& img, double radius);

/// Planar helpers for ImageTensor channels.
Plane channel_plane(const ImageTensor& img, std::size_t c);

}  // namespace patchgauss
