#include "heterofisher/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace heterofisher {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;  // 0x00000803
constexpr std::uint32_t kLabelsMagic = 2049;  // 0x00000801

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* what) {
  if (offset + 4 > bytes.size())
    throw FormatError(std::string("truncated IDX header: missing ") + what + " at offset " +
                      std::to_string(offset));
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

}  // namespace

RawImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kImagesMagic)
    throw FormatError("bad image magic " + std::to_string(magic) + " at offset 0 (expected 2051)");
  RawImages out;
  out.count = read_be32(bytes, 4, "count");
  out.rows = read_be32(bytes, 8, "rows");
  out.cols = read_be32(bytes, 12, "cols");
  const std::size_t expected = std::size_t(out.count) * out.rows * out.cols;
  if (bytes.size() != 16 + expected)
    throw FormatError("IDX image payload is " + std::to_string(bytes.size() - 16) +
                      " bytes at offset 16, expected " + std::to_string(expected));
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kLabelsMagic)
    throw FormatError("bad label magic " + std::to_string(magic) + " at offset 0 (expected 2049)");
  const std::uint32_t count = read_be32(bytes, 4, "count");
  if (bytes.size() != 8 + std::size_t(count))
    throw FormatError("IDX label payload is " + std::to_string(bytes.size() - 8) +
                      " bytes at offset 8, expected " + std::to_string(count));
  return {bytes.begin() + 8, bytes.end()};
}

std::vector<std::uint8_t> to_idx_bytes(const RawImages& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  append_be32(out, kImagesMagic);
  append_be32(out, images.count);
  append_be32(out, images.rows);
  append_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> to_idx_bytes(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  append_be32(out, kLabelsMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (raw.size() < 2 || raw[0] != 0x1f || raw[1] != 0x8b) return raw;

  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK)  // 15+16: zlib window with gzip wrapper
    throw FormatError("gzip init failed for " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  zs.next_in = raw.data();
  zs.avail_in = static_cast<uInt>(raw.size());
  int rc = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("gzip decode failed for " + path.string());
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

ImageSet load_image_set(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, Split split) {
  const RawImages raw = parse_idx_images(read_file_maybe_gzip(images_path));
  std::vector<std::uint8_t> labels = parse_idx_labels(read_file_maybe_gzip(labels_path));
  if (labels.size() != raw.count)
    throw FormatError("label count " + std::to_string(labels.size()) + " does not match image count " +
                      std::to_string(raw.count));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 9)
      throw FormatError("label value " + std::to_string(labels[i]) + " out of range at index " +
                        std::to_string(i));

  const Index dim = Index(raw.rows) * Index(raw.cols);
  ImageSet set;
  set.split = split;
  set.labels = std::move(labels);
  set.images.resize(dim, raw.count);
  for (Index c = 0; c < Index(raw.count); ++c)
    for (Index p = 0; p < dim; ++p)
      set.images(p, c) = double(raw.pixels[std::size_t(c) * dim + p]);
  return set;
}

const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::kPerPixel: return "per-pixel";
    case Normalization::kPerImage: return "per-image";
    case Normalization::kGlobal: return "global";
  }
  return "?";
}

Normalization normalization_from_string(const std::string& s) {
  if (s == "per-pixel") return Normalization::kPerPixel;
  if (s == "per-image") return Normalization::kPerImage;
  if (s == "global") return Normalization::kGlobal;
  throw std::invalid_argument("unknown normalization mode: " + s);
}

namespace {

constexpr double kStdFloor = 1e-12;

void normalize_each_column(MatrixXd& m) {
  for (Index c = 0; c < m.cols(); ++c) {
    auto col = m.col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    if (sd < kStdFloor)
      col.setZero();
    else
      col = (col.array() - mean) / sd;
  }
}

}  // namespace

void z_normalize(ImageSet& train, ImageSet& test, Normalization mode) {
  if (train.count() == 0) throw std::invalid_argument("z_normalize: empty training set");
  if (test.count() > 0 && test.dim() != train.dim())
    throw std::invalid_argument("z_normalize: train/test feature dimensions differ");

  switch (mode) {
    case Normalization::kPerPixel: {
      const VectorXd mean = train.images.rowwise().mean();
      const VectorXd sd =
          ((train.images.colwise() - mean).array().square().rowwise().mean()).sqrt();
      for (Index p = 0; p < train.dim(); ++p) {
        if (sd[p] < kStdFloor) {
          train.images.row(p).setZero();
          if (test.count() > 0) test.images.row(p).setZero();
        } else {
          train.images.row(p) = (train.images.row(p).array() - mean[p]) / sd[p];
          if (test.count() > 0)
            test.images.row(p) = (test.images.row(p).array() - mean[p]) / sd[p];
        }
      }
      break;
    }
    case Normalization::kPerImage:
      normalize_each_column(train.images);
      normalize_each_column(test.images);
      break;
    case Normalization::kGlobal: {
      const double mean = train.images.mean();
      const double sd = std::sqrt((train.images.array() - mean).square().mean());
      if (sd < kStdFloor) {
        train.images.setZero();
        test.images.setZero();
      } else {
        train.images = (train.images.array() - mean) / sd;
        if (test.count() > 0) test.images = (test.images.array() - mean) / sd;
      }
      break;
    }
  }
}

namespace {

void extract_split(const ImageSet& src, int a, int b, MatrixXd& x, std::vector<int>& y,
                   const char* split_name) {
  std::vector<Index> keep;
  for (Index i = 0; i < src.count(); ++i)
    if (src.labels[std::size_t(i)] == a || src.labels[std::size_t(i)] == b)
      keep.push_back(i);
  bool has_a = false, has_b = false;
  x.resize(src.dim(), Index(keep.size()));
  y.resize(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    x.col(Index(j)) = src.images.col(keep[j]);
    const bool is_b = src.labels[std::size_t(keep[j])] == b;
    y[j] = is_b ? 1 : 0;
    (is_b ? has_b : has_a) = true;
  }
  if (!has_a || !has_b)
    throw std::invalid_argument(std::string("extract_pair: class ") +
                                std::to_string(has_a ? b : a) + " missing from " + split_name +
                                " split");
}

}  // namespace

PairDataset extract_pair(const ImageSet& train, const ImageSet& test, int a, int b) {
  if (a == b) throw std::invalid_argument("extract_pair: classes must differ");
  PairDataset pair;
  pair.class_a = a;
  pair.class_b = b;
  extract_split(train, a, b, pair.train_x, pair.train_y, "train");
  extract_split(test, a, b, pair.test_x, pair.test_y, "test");
  return pair;
}

}  // namespace heterofisher
