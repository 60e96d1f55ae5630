#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cavparse/error.hpp"
#include "cavparse/image.hpp"

namespace cavparse::data {

struct DatasetItem {
  std::string id;
  RasterImage image;
  LabelMap labels;
};

struct Dataset {
  std::vector<DatasetItem> items;
  int class_count = 0;
  std::vector<std::string> class_names;

  std::size_t size() const { return items.size(); }
};

// Aggregates every per-file problem found while loading.
class DatasetError : public InvalidInput {
 public:
  explicit DatasetError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// root/images/*.png|*.ppm, root/labels/<stem>.png, root/classes.txt.
// Items are ordered by identifier (file stem).
Dataset load_dataset(const std::filesystem::path& root, unsigned workers = 1);

// Writes the same layout; images as PNG.
void write_dataset(const Dataset& ds, const std::filesystem::path& root);

std::vector<std::string> read_class_names(const std::filesystem::path& path);

// Seeded shuffle, then the first round(fraction * n) items form the train part.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

// FNV-1a over identifiers, dimensions, pixels and labels.
std::uint64_t dataset_hash(const Dataset& ds);

void validate(const Dataset& ds);

// Class-name presets.
std::vector<std::string> sbd_class_names();
std::vector<std::string> camvid_class_names();
std::vector<std::string> class_preset(const std::string& name);

// Display colours for class indices; distinct for up to 32 classes.
std::vector<Rgb> default_palette(int class_count);

struct SynthConfig {
  int class_count = 5;  // 2..8
  int width = 64;
  int height = 64;
  int count = 250;
  double noise_sigma = 12.0;
  double band_jitter = 0.7;  // boundary offset, fraction of nominal band height
  double wave_amplitude = 0.3;
  int blobs_min = 1;
  int blobs_max = 3;
  double blob_radius_min = 0.06;  // fraction of width
  double blob_radius_max = 0.14;
  std::uint64_t seed = 0;
  std::vector<Rgb> palette;  // empty = built-in
};

// Layout of a synthetic scene: band classes (top to bottom) and foreground
// classes placed as blobs in the lower half.
struct SynthLayout {
  std::vector<int> band_classes;
  std::vector<int> foreground_classes;
  std::vector<std::string> names;
  std::vector<Rgb> palette;
};

SynthLayout synth_layout(const SynthConfig& cfg);

Dataset synth_generate(const SynthConfig& cfg, unsigned workers = 1);

}  // namespace cavparse::data
