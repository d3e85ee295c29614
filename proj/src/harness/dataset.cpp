#include "abel/harness/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "abel/util/error.hpp"
#include "abel/util/random.hpp"

namespace abel::harness {

namespace {

int other_class(std::mt19937_64& rng, int label, int classes) {
  const auto k = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(classes - 1)));
  return k >= label ? k + 1 : k;
}

Split blob_split(const SyntheticBlobs& s, const std::vector<std::vector<double>>& centers,
                 int n, double noise, std::mt19937_64& rng) {
  Split out;
  out.inputs = nn::Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(s.dim));
  for (int i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(uniform_below(rng, centers.size()));
    const int label = static_cast<int>(c) % s.classes;
    double* row = out.inputs.row(static_cast<std::size_t>(i));
    for (int d = 0; d < s.dim; ++d) row[d] = centers[c][static_cast<std::size_t>(d)] + standard_normal(rng);
    out.clean_labels.push_back(label);
    out.labels.push_back(uniform01(rng) < noise ? other_class(rng, label, s.classes) : label);
  }
  return out;
}

Dataset make_blobs(const SyntheticBlobs& s) {
  if (s.classes < 2 || s.dim < 1 || s.samples < 1 || s.test_samples < 1 ||
      s.clusters_per_class < 1 || !(s.separation >= 0.0) ||
      !(s.label_noise >= 0.0 && s.label_noise < 1.0)) {
    throw InputError("invalid blobs dataset parameters");
  }
  std::mt19937_64 rng(s.seed);
  // Center index c belongs to class c % classes.
  std::vector<std::vector<double>> centers(
      static_cast<std::size_t>(s.classes * s.clusters_per_class),
      std::vector<double>(static_cast<std::size_t>(s.dim)));
  for (auto& c : centers) {
    for (auto& v : c) v = s.separation * standard_normal(rng);
  }
  Dataset ds;
  ds.classes = s.classes;
  ds.dim = s.dim;
  ds.train = blob_split(s, centers, s.samples, s.label_noise, rng);
  ds.test = blob_split(s, centers, s.test_samples, 0.0, rng);
  return ds;
}

Split spiral_split(const TwoSpirals& s, int n, double label_noise, std::mt19937_64& rng) {
  Split out;
  out.inputs = nn::Matrix(static_cast<std::size_t>(n), 2);
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(uniform_below(rng, 2));
    const double r = uniform01(rng);
    const double theta = 2.0 * std::numbers::pi * s.turns * r + (label == 1 ? std::numbers::pi : 0.0);
    out.inputs.at(static_cast<std::size_t>(i), 0) = r * std::cos(theta) + s.noise * standard_normal(rng);
    out.inputs.at(static_cast<std::size_t>(i), 1) = r * std::sin(theta) + s.noise * standard_normal(rng);
    out.clean_labels.push_back(label);
    out.labels.push_back(uniform01(rng) < label_noise ? 1 - label : label);
  }
  return out;
}

Dataset make_spirals(const TwoSpirals& s) {
  if (s.samples < 1 || s.test_samples < 1 || !(s.noise >= 0.0) || !(s.turns > 0.0) ||
      !(s.label_noise >= 0.0 && s.label_noise < 1.0)) {
    throw InputError("invalid spirals dataset parameters");
  }
  std::mt19937_64 rng(s.seed);
  Dataset ds;
  ds.classes = 2;
  ds.dim = 2;
  ds.train = spiral_split(s, s.samples, s.label_noise, rng);
  ds.test = spiral_split(s, s.test_samples, 0.0, rng);
  return ds;
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw LoadError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

Split idx_split(const std::string& images_path, const std::string& labels_path, int subsample,
                int& classes, IdxImageFile& shape) {
  auto images = read_idx_images(images_path);
  auto labels = read_idx_labels(labels_path);
  if (labels.size() != static_cast<std::size_t>(images.count)) {
    throw LoadError("image and label counts differ for " + images_path);
  }
  const int n = subsample > 0 ? std::min(subsample, images.count) : images.count;
  const std::size_t dim = static_cast<std::size_t>(images.rows) * static_cast<std::size_t>(images.cols);
  Split out;
  out.inputs = nn::Matrix(static_cast<std::size_t>(n), dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    for (std::size_t p = 0; p < dim; ++p) out.inputs.at(i, p) = images.pixels[i * dim + p] / 255.0;
    out.labels.push_back(labels[i]);
    classes = std::max(classes, static_cast<int>(labels[i]) + 1);
  }
  out.clean_labels = out.labels;
  shape = std::move(images);
  return out;
}

Dataset make_idx(const IdxImages& s) {
  Dataset ds;
  IdxImageFile train_shape, test_shape;
  ds.train = idx_split(s.train_images, s.train_labels, s.subsample, ds.classes, train_shape);
  ds.test = idx_split(s.test_images, s.test_labels, s.subsample, ds.classes, test_shape);
  if (train_shape.rows != test_shape.rows || train_shape.cols != test_shape.cols) {
    throw LoadError("train and test images have different sizes");
  }
  ds.classes = std::max(ds.classes, 2);
  ds.dim = train_shape.rows * train_shape.cols;
  ds.channels = 1;
  ds.height = train_shape.rows;
  ds.width = train_shape.cols;
  return ds;
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec) {
  return std::visit(
      [](const auto& s) -> Dataset {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SyntheticBlobs>) {
          return make_blobs(s);
        } else if constexpr (std::is_same_v<S, TwoSpirals>) {
          return make_spirals(s);
        } else {
          return make_idx(s);
        }
      },
      spec);
}

IdxImageFile read_idx_images(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (read_be32(in, path) != kImagesMagic) throw LoadError("bad IDX image magic in " + path.string());
  IdxImageFile f;
  f.count = static_cast<int>(read_be32(in, path));
  f.rows = static_cast<int>(read_be32(in, path));
  f.cols = static_cast<int>(read_be32(in, path));
  if (f.count < 0 || f.rows <= 0 || f.cols <= 0) throw LoadError("bad IDX dimensions in " + path.string());
  f.pixels.resize(static_cast<std::size_t>(f.count) * static_cast<std::size_t>(f.rows) *
                  static_cast<std::size_t>(f.cols));
  if (!in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()))) {
    throw LoadError("truncated IDX image data in " + path.string());
  }
  return f;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (read_be32(in, path) != kLabelsMagic) throw LoadError("bad IDX label magic in " + path.string());
  const auto n = read_be32(in, path);
  std::vector<std::uint8_t> labels(n);
  if (!in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n))) {
    throw LoadError("truncated IDX label data in " + path.string());
  }
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const IdxImageFile& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.count));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

nn::Batch gather(const Split& split, std::span<const std::size_t> indices) {
  nn::Batch b;
  b.inputs = nn::Matrix(indices.size(), split.inputs.cols);
  b.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = split.inputs.row(indices[r]);
    std::copy(src, src + split.inputs.cols, b.inputs.row(r));
    b.labels.push_back(split.labels[indices[r]]);
  }
  return b;
}

}  // namespace abel::harness
