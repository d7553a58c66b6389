#include "patchgauss/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "patchgauss/error.hpp"

namespace patchgauss {
namespace {

constexpr std::uint8_t kTensorMagic[4] = {'I', 'M', 'G', 'T'};
constexpr std::size_t kTensorHeaderBytes = 16;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
  return v;
}

std::uint8_t quantize(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  if (!(scaled > 0.0)) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.imgt", i);
  return buf;
}

}  // namespace

LabeledDataset read_cifar10_batch(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) throw FormatError("malformed batch");
  constexpr std::size_t plane = kCifarImageSide * kCifarImageSide;
  LabeledDataset out;
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  out.images.reserve(records);
  out.labels.reserve(records);
  for (std::size_t r = 0; r < records; ++r) {
    const auto record = bytes.subspan(r * kCifarRecordBytes, kCifarRecordBytes);
    if (record[0] >= kCifarClasses) throw FormatError("label out of range");
    ImageTensor img(kCifarImageSide, kCifarImageSide, 3);
    auto values = img.values();
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        values[p * 3 + c] = static_cast<double>(record[1 + c * plane + p]) / 255.0;
      }
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(record[0]);
  }
  return out;
}

Bytes encode_tensor(const ImageTensor& t) {
  Bytes out(std::begin(kTensorMagic), std::end(kTensorMagic));
  out.reserve(kTensorHeaderBytes + 4 * t.size());
  put_u32(out, static_cast<std::uint32_t>(t.height()));
  put_u32(out, static_cast<std::uint32_t>(t.width()));
  put_u32(out, static_cast<std::uint32_t>(t.channels()));
  for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

ImageTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin())) {
    throw FormatError("bad magic");
  }
  if (bytes.size() < kTensorHeaderBytes) throw FormatError("truncated header");
  const std::uint64_t h = get_u32(bytes, 4);
  const std::uint64_t w = get_u32(bytes, 8);
  const std::uint64_t c = get_u32(bytes, 12);
  std::uint64_t count = 0;
  std::uint64_t payload = 0;
  if (__builtin_mul_overflow(h, w, &count) || __builtin_mul_overflow(count, c, &count) ||
      __builtin_mul_overflow(count, std::uint64_t{4}, &payload)) {
    throw FormatError("dimension product overflow");
  }
  if (bytes.size() - kTensorHeaderBytes != payload) throw FormatError("length mismatch");
  if (h == 0 || w == 0 || c == 0) throw FormatError("empty tensor shape");
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kTensorHeaderBytes + 4 * i));
  }
  return ImageTensor(h, w, c, std::move(data));
}

Bytes write_ppm(const ImageTensor& t) {
  if (t.channels() != 3) throw Error("PPM export needs 3 channels, got " + std::to_string(t.channels()));
  const std::string header =
      "P6\n" + std::to_string(t.width()) + " " + std::to_string(t.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + t.size());
  for (double v : t.values()) out.push_back(quantize(v));
  return out;
}

Bytes write_contact_sheet(std::span<const ImageTensor> images, std::size_t columns) {
  if (images.empty()) throw Error("contact sheet needs at least one image");
  columns = std::max<std::size_t>(1, std::min(columns, images.size()));
  const auto& first = images.front();
  const std::size_t rows = (images.size() + columns - 1) / columns;
  const std::size_t cell_w = first.width() + 1;
  const std::size_t cell_h = first.height() + 1;
  ImageTensor sheet(rows * cell_h - 1, columns * cell_w - 1, 3, 0.0);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& img = images[n];
    if (!img.same_shape(first)) throw Error("contact sheet images differ in shape");
    const std::size_t oy = (n / columns) * cell_h;
    const std::size_t ox = (n % columns) * cell_w;
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          sheet.at(oy + y, ox + x, c) = img.at(y, x, img.channels() == 3 ? c : 0);
        }
      }
    }
  }
  return write_ppm(sheet);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

LabeledDataset read_dataset_dir(const std::filesystem::path& dir) {
  const auto labels_path = dir / "labels.txt";
  std::ifstream in(labels_path);
  if (!in) throw Error("cannot open " + labels_path.string());
  LabeledDataset out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    int label = 0;
    try {
      label = std::stoi(line, &used);
    } catch (const std::exception&) {
      throw Error("bad label line in " + labels_path.string() + ": " + line);
    }
    if (used != line.size() || label < 0) {
      throw Error("bad label line in " + labels_path.string() + ": " + line);
    }
    out.labels.push_back(label);
  }
  out.images.reserve(out.labels.size());
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    out.images.push_back(decode_tensor(read_file(dir / image_name(i))));
  }
  validate(out);
  return out;
}

void write_dataset_dir(const std::filesystem::path& dir, const LabeledDataset& dataset) {
  validate(dataset);
  namespace fs = std::filesystem;
  auto tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    std::ostringstream labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const Bytes bytes = encode_tensor(dataset.images[i]);
      std::ofstream out(tmp / image_name(i), std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error("write failed in " + tmp.string());
      labels << dataset.labels[i] << '\n';
    }
    std::ofstream out(tmp / "labels.txt");
    out << labels.str();
    if (!out) throw Error("write failed in " + tmp.string());
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return read_dataset_dir(path);
  return read_cifar10_batch(read_file(path));
}

}  // namespace patchgauss
