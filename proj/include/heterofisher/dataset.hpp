#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "heterofisher/types.hpp"

namespace heterofisher {

/// Raw IDX image tensor: count x rows x cols unsigned bytes in file order.
struct RawImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

RawImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Inverse of the parsers; reproduces the original byte stream exactly.
std::vector<std::uint8_t> to_idx_bytes(const RawImages& images);
std::vector<std::uint8_t> to_idx_bytes(std::span<const std::uint8_t> labels);

/// Reads a file, transparently inflating a gzip wrapper (0x1f 0x8b prefix).
std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path);

enum class Split { kTrain, kTest };

enum class Normalization { kPerPixel, kPerImage, kGlobal };

const char* to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

/// Real-valued image collection; one column per image, n = rows*cols features.
struct ImageSet {
  MatrixXd images;                   // n x count
  std::vector<std::uint8_t> labels;  // 0..9
  Split split = Split::kTrain;

  Index count() const { return images.cols(); }
  Index dim() const { return images.rows(); }
};

/// Loads an images+labels file pair into an ImageSet (pixels as raw 0..255 reals).
ImageSet load_image_set(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, Split split);

/// z-normalizes both splits. kPerPixel (default): test uses training-set
/// per-pixel statistics only; training pixels with std < 1e-12 map to 0 in both
/// splits. kPerImage: each image by its own mean/std. kGlobal: one scalar
/// mean/std from all training pixels. Population (divide-by-v) std throughout.
void z_normalize(ImageSet& train, ImageSet& test,
                 Normalization mode = Normalization::kPerPixel);

/// A binary classification task: labels relabeled a -> 0, b -> 1, original
/// sample order preserved.
struct PairDataset {
  int class_a = 0;
  int class_b = 1;
  MatrixXd train_x;  // n x v_train
  std::vector<int> train_y;
  MatrixXd test_x;
  std::vector<int> test_y;
};

PairDataset extract_pair(const ImageSet& train, const ImageSet& test, int a, int b);

}  // namespace heterofisher
