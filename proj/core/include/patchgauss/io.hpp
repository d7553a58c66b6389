#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "patchgauss/tensor.hpp"

namespace patchgauss {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kCifarImageSide = 32;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * kCifarImageSide * kCifarImageSide;
inline constexpr int kCifarClasses = 10;

/// Decodes a CIFAR-10 binary batch: 3073-byte records of one label byte
/// followed by the red, green and blue 32x32 planes.
LabeledDataset read_cifar10_batch(std::span<const std::uint8_t> bytes);

/// "IMGT" container: magic, H, W, C as little-endian u32, then H*W*C
/// little-endian float32 values in interleaved order. Values are narrowed
/// to float32 on encode, so decode(encode(t)) == t for any tensor whose
/// values are float32-representable (everything decode produces).
Bytes encode_tensor(const ImageTensor& t);
ImageTensor decode_tensor(std::span<const std::uint8_t> bytes);

/// Binary P6 PPM, maxval 255, round-half-up quantisation. Requires C = 3.
Bytes write_ppm(const ImageTensor& t);

/// Single-channel images are rendered as grey. Images are tiled row-major
/// into a sheet `columns` wide with a one-pixel black gutter.
Bytes write_contact_sheet(std::span<const ImageTensor> images, std::size_t columns);

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`, so a failed write
/// never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Dataset directory: one IMGT file per image (000000.imgt, ...) plus
/// labels.txt with one integer label per line.
LabeledDataset read_dataset_dir(const std::filesystem::path& dir);
void write_dataset_dir(const std::filesystem::path& dir, const LabeledDataset& dataset);

/// Reads a CIFAR batch file or an IMGT dataset directory.
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace patchgauss
