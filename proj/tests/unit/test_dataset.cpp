#include <doctest.h>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "heterofisher/dataset.hpp"

using namespace heterofisher;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> idx_image_blob() {
  // magic 2051, dims (1, 2, 2), payload {0, 255, 128, 7}
  return {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 128, 7};
}

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "heterofisher_dataset_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse_idx_images decodes the synthetic blob") {
  const RawImages raw = parse_idx_images(idx_image_blob());
  CHECK(raw.count == 1);
  CHECK(raw.rows == 2);
  CHECK(raw.cols == 2);
  CHECK(raw.pixels == std::vector<std::uint8_t>{0, 255, 128, 7});
}

TEST_CASE("parse_idx_images rejects bad magic and truncation") {
  auto blob = idx_image_blob();
  blob[3] = 1;  // label magic 2049 in an image parser
  CHECK_THROWS_AS(parse_idx_images(blob), FormatError);

  auto short_blob = idx_image_blob();
  short_blob.pop_back();
  CHECK_THROWS_WITH_AS(parse_idx_images(short_blob),
                       doctest::Contains("offset 16"), FormatError);
}

TEST_CASE("parse_idx_labels decodes and validates") {
  const std::vector<std::uint8_t> blob = {0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1};
  CHECK(parse_idx_labels(blob) == std::vector<std::uint8_t>{7, 2, 1});

  const std::vector<std::uint8_t> empty = {0, 0, 8, 1, 0, 0, 0, 0};
  CHECK(parse_idx_labels(empty).empty());

  CHECK_THROWS_AS(parse_idx_labels(idx_image_blob()), FormatError);
}

TEST_CASE("IDX round-trips bit-exactly") {
  const auto blob = idx_image_blob();
  CHECK(to_idx_bytes(parse_idx_images(blob)) == blob);

  const std::vector<std::uint8_t> labels = {0, 0, 8, 1, 0, 0, 0, 4, 9, 0, 3, 3};
  CHECK(to_idx_bytes(parse_idx_labels(labels)) == labels);
}

TEST_CASE("gzipped files are read transparently") {
  const fs::path dir = temp_dir();
  const fs::path plain = dir / "blob.idx";
  const fs::path zipped = dir / "blob.idx.gz";
  const auto blob = idx_image_blob();

  std::ofstream(plain, std::ios::binary)
      .write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size()));
  gzFile gz = gzopen(zipped.string().c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, blob.data(), unsigned(blob.size()));
  gzclose(gz);

  CHECK(read_file_maybe_gzip(plain) == blob);
  CHECK(read_file_maybe_gzip(zipped) == blob);
  CHECK_THROWS_AS(read_file_maybe_gzip(dir / "missing.idx"), FormatError);
}

namespace {

ImageSet tiny_set(std::initializer_list<double> pixel_values,
                  std::initializer_list<std::uint8_t> labels, Index dim, Split split) {
  ImageSet set;
  set.split = split;
  set.labels = labels;
  set.images.resize(dim, Index(labels.size()));
  Index i = 0;
  for (double v : pixel_values) {
    set.images(i % dim, i / dim) = v;
    ++i;
  }
  return set;
}

}  // namespace

TEST_CASE("per-pixel z-normalization uses training statistics only") {
  // dim 2: pixel 0 varies {0, 2}, pixel 1 constant
  ImageSet train = tiny_set({0, 5, 2, 5}, {0, 1}, 2, Split::kTrain);
  ImageSet test = tiny_set({1, 9}, {0}, 2, Split::kTest);
  z_normalize(train, test);

  CHECK(train.images(0, 0) == doctest::Approx(-1.0));  // population std of {0,2} is 1
  CHECK(train.images(0, 1) == doctest::Approx(1.0));
  CHECK(train.images(1, 0) == 0.0);  // constant pixel maps to 0
  CHECK(train.images(1, 1) == 0.0);
  CHECK(test.images(0, 0) == doctest::Approx(0.0));  // (1 - 1) / 1
  CHECK(test.images(1, 0) == 0.0);

  ImageSet empty;
  empty.images.resize(2, 0);
  CHECK_THROWS_AS(z_normalize(empty, test), std::invalid_argument);
}

TEST_CASE("normalized training pixels have zero mean and unit std") {
  ImageSet train = tiny_set({0, 1, 2, 3, 4, 5, 6, 8}, {0, 1, 0, 1}, 2, Split::kTrain);
  ImageSet test = tiny_set({1, 1}, {0}, 2, Split::kTest);
  z_normalize(train, test);
  for (Index p = 0; p < 2; ++p) {
    CHECK(std::fabs(train.images.row(p).mean()) < 1e-9);
    const double var = train.images.row(p).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }

  // idempotence on already-normalized data
  ImageSet train2 = train, test2 = test;
  z_normalize(train2, test2);
  CHECK((train2.images - train.images).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("alternative normalization axes") {
  ImageSet train = tiny_set({0, 1, 2, 3, 4, 5, 6, 8}, {0, 1, 0, 1}, 2, Split::kTrain);
  ImageSet test = tiny_set({1, 1}, {0}, 2, Split::kTest);

  ImageSet per_image_train = train, per_image_test = test;
  z_normalize(per_image_train, per_image_test, Normalization::kPerImage);
  for (Index c = 0; c < per_image_train.count(); ++c)
    CHECK(std::fabs(per_image_train.images.col(c).mean()) < 1e-12);
  CHECK(per_image_test.images.col(0).isZero());  // constant image maps to 0

  ImageSet global_train = train, global_test = test;
  z_normalize(global_train, global_test, Normalization::kGlobal);
  CHECK(std::fabs(global_train.images.mean()) < 1e-12);
  CHECK(global_train.images.array().square().mean() == doctest::Approx(1.0));
}

TEST_CASE("extract_pair filters, relabels, and preserves order") {
  ImageSet train = tiny_set({10, 20, 30, 40}, {0, 1, 2, 0}, 1, Split::kTrain);
  ImageSet test = tiny_set({50, 60}, {0, 2}, 1, Split::kTest);

  const PairDataset pair = extract_pair(train, test, 0, 2);
  CHECK(pair.train_y == std::vector<int>{0, 1, 0});
  CHECK(pair.train_x(0, 0) == 10);
  CHECK(pair.train_x(0, 1) == 30);
  CHECK(pair.train_x(0, 2) == 40);
  CHECK(pair.test_y == std::vector<int>{0, 1});

  const PairDataset flipped = extract_pair(train, test, 2, 0);
  CHECK(flipped.train_y == std::vector<int>{1, 0, 1});
  CHECK(flipped.train_x == pair.train_x);

  CHECK_THROWS_AS(extract_pair(train, test, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(extract_pair(train, test, 1, 5), std::invalid_argument);
}

TEST_CASE("label values outside 0..9 are rejected at load time") {
  const fs::path dir = temp_dir();
  const auto blob = idx_image_blob();
  std::ofstream(dir / "img", std::ios::binary)
      .write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size()));
  const std::vector<std::uint8_t> bad_labels = {0, 0, 8, 1, 0, 0, 0, 1, 77};
  std::ofstream(dir / "lab", std::ios::binary)
      .write(reinterpret_cast<const char*>(bad_labels.data()), std::streamsize(bad_labels.size()));
  CHECK_THROWS_AS(load_image_set(dir / "img", dir / "lab", Split::kTrain), FormatError);
}
