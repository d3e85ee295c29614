#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "abel/nn/model.hpp"

namespace abel::harness {

// Gaussian clusters: each class owns `clusters_per_class` centers drawn as
// separation * N(0, I); samples are center + N(0, I). With probability
// label_noise a training label is replaced by a uniformly drawn *different*
// class; test labels are clean.
struct SyntheticBlobs {
  int classes = 4;
  int dim = 16;
  int samples = 4000;
  int test_samples = 2000;
  int clusters_per_class = 1;
  double separation = 3.0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const SyntheticBlobs&) const = default;
};

// Two interleaved spirals in the plane (2 classes), Gaussian jitter `noise`.
struct TwoSpirals {
  int samples = 2000;
  int test_samples = 1000;
  double turns = 1.5;
  double noise = 0.2;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const TwoSpirals&) const = default;
};

// Big-endian IDX files (images magic 0x00000803, labels 0x00000801). Pixels are
// scaled to [0, 1]. subsample > 0 keeps only the first `subsample` examples of
// each split.
struct IdxImages {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  int subsample = 0;
  bool operator==(const IdxImages&) const = default;
};

using DatasetSpec = std::variant<SyntheticBlobs, TwoSpirals, IdxImages>;

struct Split {
  nn::Matrix inputs;
  std::vector<int> labels;
  std::vector<int> clean_labels;  // equal to labels unless label noise was injected
};

struct Dataset {
  Split train;
  Split test;
  int classes = 0;
  int dim = 0;
  // (channels, height, width) when the data are images.
  int channels = 0, height = 0, width = 0;
};

// Loading failure: missing file, bad magic, inconsistent sizes.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic in the spec (including its seed).
Dataset make_dataset(const DatasetSpec& spec);

struct IdxImageFile {
  int count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImageFile read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImageFile& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Gathers rows [indices] into a batch.
nn::Batch gather(const Split& split, std::span<const std::size_t> indices);

}  // namespace abel::harness
