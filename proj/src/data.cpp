#include "cavparse/data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "cavparse/image_io.hpp"
#include "cavparse/parallel.hpp"
#include "cavparse/random.hpp"

namespace fs = std::filesystem;

namespace cavparse::data {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "dataset has " + std::to_string(problems.size()) + " problem(s):";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

}  // namespace

DatasetError::DatasetError(std::vector<std::string> problems)
    : InvalidInput(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<std::string> read_class_names(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read class list '" + path.string() + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  if (names.empty() || names.size() >= kIgnore) {
    throw InvalidInput("'" + path.string() + "': class list must have 1..254 entries");
  }
  return names;
}

Dataset load_dataset(const fs::path& root, unsigned workers) {
  const fs::path images_dir = root / "images";
  const fs::path labels_dir = root / "labels";
  const fs::path classes_file = root / "classes.txt";
  for (const auto& dir : {images_dir, labels_dir}) {
    if (!fs::is_directory(dir)) throw InvalidInput("missing directory '" + dir.string() + "'");
  }
  Dataset ds;
  ds.class_names = read_class_names(classes_file);
  ds.class_count = static_cast<int>(ds.class_names.size());

  std::map<std::string, fs::path> images;
  std::vector<std::string> problems;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    if (auto [it, inserted] = images.emplace(stem, entry.path()); !inserted) {
      problems.push_back(entry.path().string() + ": duplicate identifier '" + stem + "' (also " +
                         it->second.string() + ")");
    }
  }
  if (images.empty() && problems.empty()) {
    spdlog::warn("dataset '{}' contains no images", root.string());
    return ds;
  }

  std::vector<std::pair<std::string, fs::path>> ordered(images.begin(), images.end());
  std::vector<DatasetItem> items(ordered.size());
  std::vector<std::string> item_problem(ordered.size());
  parallel_for(ordered.size(), workers, [&](std::size_t i) {
    const auto& [stem, image_path] = ordered[i];
    const fs::path label_path = labels_dir / (stem + ".png");
    try {
      if (!fs::exists(label_path)) {
        item_problem[i] = image_path.string() + ": missing label file " + label_path.string();
        return;
      }
      DatasetItem item;
      item.id = stem;
      item.image = io::read_image(image_path);
      item.labels = io::read_label_png(label_path);
      if (item.image.width() != item.labels.width() || item.image.height() != item.labels.height()) {
        item_problem[i] = label_path.string() + ": dimensions " + std::to_string(item.labels.width()) + "x" +
                          std::to_string(item.labels.height()) + " differ from image " +
                          std::to_string(item.image.width()) + "x" + std::to_string(item.image.height());
        return;
      }
      for (std::size_t p = 0; p < item.labels.size(); ++p) {
        const ClassId v = item.labels[p];
        if (v != kIgnore && v >= ds.class_count) {
          item_problem[i] = label_path.string() + ": label value " + std::to_string(v) +
                            " outside 0.." + std::to_string(ds.class_count - 1) + " (and 255 = void)";
          return;
        }
      }
      items[i] = std::move(item);
    } catch (const std::exception& e) {
      item_problem[i] = e.what();
    }
  });
  for (auto& p : item_problem) {
    if (!p.empty()) problems.push_back(std::move(p));
  }
  if (!problems.empty()) throw DatasetError(std::move(problems));
  ds.items = std::move(items);
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  {
    std::ofstream out(root / "classes.txt");
    for (const auto& name : ds.class_names) out << name << '\n';
    if (!out) throw FormatError("cannot write '" + (root / "classes.txt").string() + "'");
  }
  for (const auto& item : ds.items) {
    io::write_png_rgb(root / "images" / (item.id + ".png"), item.image);
    io::write_label_png(root / "labels" / (item.id + ".png"), item.labels);
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput("split: train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.class_count = ds.class_count;
  out.class_names = ds.class_names;
  out.items.reserve(indices.size());
  for (std::size_t i : indices) out.items.push_back(ds.items.at(i));
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(ds.size(), train_fraction, seed);
  return {subset(ds, train), subset(ds, test)};
}

std::uint64_t dataset_hash(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&ds.class_count, sizeof(ds.class_count));
  for (const auto& item : ds.items) {
    mix(item.id.data(), item.id.size());
    const int dims[2] = {item.image.width(), item.image.height()};
    mix(dims, sizeof(dims));
    mix(item.image.pixels().data(), item.image.size() * sizeof(Rgb));
    mix(item.labels.labels().data(), item.labels.size());
  }
  return h;
}

void validate(const Dataset& ds) {
  if (ds.class_count < 1 || ds.class_count >= kIgnore) throw InvalidInput("dataset: invalid class count");
  if (static_cast<int>(ds.class_names.size()) != ds.class_count) {
    throw InvalidInput("dataset: class names do not match class count");
  }
  for (const auto& item : ds.items) {
    if (item.image.width() != item.labels.width() || item.image.height() != item.labels.height()) {
      throw InvalidInput("dataset item '" + item.id + "': image/label dimensions differ");
    }
    for (ClassId v : item.labels.labels()) {
      if (v != kIgnore && v >= ds.class_count) {
        throw InvalidInput("dataset item '" + item.id + "': label " + std::to_string(v) + " out of range");
      }
    }
  }
}

std::vector<std::string> sbd_class_names() {
  return {"Sky", "Tree", "Road", "Grass", "Water", "Bldg.", "Mt.", "Frgd."};
}

std::vector<std::string> camvid_class_names() {
  return {"Sky", "Building", "Pole", "Road", "Pavement", "Tree",
          "SignSymbol", "Fence", "Car", "Pedestrian", "Bicyclist"};
}

std::vector<std::string> class_preset(const std::string& name) {
  if (name == "sbd") return sbd_class_names();
  if (name == "camvid") return camvid_class_names();
  throw InvalidInput("unknown class preset '" + name + "' (expected sbd or camvid)");
}

std::vector<Rgb> default_palette(int class_count) {
  static const Rgb base[] = {
      {128, 128, 255}, {34, 139, 34},  {128, 64, 128}, {124, 252, 0},  {0, 105, 148},  {192, 128, 64},
      {139, 90, 43},   {220, 20, 60},  {255, 215, 0},  {0, 255, 255},  {255, 105, 180}, {75, 0, 130},
      {255, 140, 0},   {0, 128, 128},  {210, 180, 140}, {128, 0, 0},   {0, 0, 128},    {154, 205, 50},
      {255, 0, 255},   {47, 79, 79},   {240, 230, 140}, {106, 90, 205}, {244, 164, 96},  {0, 191, 255},
      {199, 21, 133},  {85, 107, 47},  {176, 224, 230}, {255, 69, 0},   {46, 139, 87},  {218, 112, 214},
      {100, 149, 237}, {160, 82, 45}};
  std::vector<Rgb> out;
  for (int i = 0; i < class_count; ++i) {
    const Rgb c = base[i % 32];
    const int shade = i / 32;
    out.push_back(Rgb{static_cast<std::uint8_t>((c.r + 37 * shade) % 256),
                      static_cast<std::uint8_t>((c.g + 53 * shade) % 256),
                      static_cast<std::uint8_t>((c.b + 71 * shade) % 256)});
  }
  return out;
}

SynthLayout synth_layout(const SynthConfig& cfg) {
  if (cfg.class_count < 2 || cfg.class_count > 8) throw InvalidInput("synth: class_count must be in 2..8");
  const int m = cfg.class_count;
  const int foreground = m >= 7 ? 2 : (m >= 4 ? 1 : 0);
  const int bands = m - foreground;
  static const std::vector<std::vector<std::string>> band_names = {
      {},
      {},
      {"sky", "ground"},
      {"sky", "tree", "road"},
      {"sky", "tree", "grass", "road"},
      {"sky", "mountain", "tree", "grass", "road"},
      {"sky", "mountain", "building", "tree", "grass", "road"}};
  static const std::map<std::string, Rgb> colors = {
      {"sky", {110, 160, 215}},  {"ground", {120, 110, 90}},  {"tree", {50, 105, 45}},
      {"grass", {95, 145, 60}},  {"road", {115, 115, 120}},  {"mountain", {105, 115, 150}},
      {"building", {150, 120, 100}}, {"object", {190, 60, 50}}, {"vehicle", {215, 175, 45}}};
  SynthLayout layout;
  for (int b = 0; b < bands; ++b) {
    layout.band_classes.push_back(b);
    layout.names.push_back(band_names[bands][b]);
  }
  static const char* fg_names[] = {"object", "vehicle"};
  for (int f = 0; f < foreground; ++f) {
    layout.foreground_classes.push_back(bands + f);
    layout.names.emplace_back(fg_names[f]);
  }
  if (!cfg.palette.empty()) {
    if (static_cast<int>(cfg.palette.size()) != m) throw InvalidInput("synth: palette size must equal class_count");
    layout.palette = cfg.palette;
  } else {
    for (const auto& name : layout.names) layout.palette.push_back(colors.at(name));
  }
  std::set<std::tuple<int, int, int>> distinct;
  for (const Rgb& c : layout.palette) distinct.emplace(c.r, c.g, c.b);
  if (static_cast<int>(distinct.size()) != m) throw InvalidInput("synth: palette entries must be distinct");
  return layout;
}

Dataset synth_generate(const SynthConfig& cfg, unsigned workers) {
  const SynthLayout layout = synth_layout(cfg);
  if (cfg.width < 2 || cfg.height < 2) throw InvalidInput("synth: image must be at least 2x2");
  if (cfg.count < 0) throw InvalidInput("synth: count must be >= 0");
  if (!(cfg.noise_sigma >= 0) || !(cfg.band_jitter >= 0) || !(cfg.wave_amplitude >= 0)) {
    throw InvalidInput("synth: noise sigma, jitter and wave amplitude must be >= 0");
  }
  if (cfg.blobs_min < 0 || cfg.blobs_max < cfg.blobs_min || !(cfg.blob_radius_min > 0) ||
      cfg.blob_radius_max < cfg.blob_radius_min) {
    throw InvalidInput("synth: invalid blob ranges");
  }
  const int w = cfg.width;
  const int h = cfg.height;
  const int bands = static_cast<int>(layout.band_classes.size());

  Dataset ds;
  ds.class_count = cfg.class_count;
  ds.class_names = layout.names;
  ds.items.resize(cfg.count);
  parallel_for(static_cast<std::size_t>(cfg.count), workers, [&](std::size_t index) {
    Rng rng(derive_seed(cfg.seed, index));
    const double band_h = static_cast<double>(h) / bands;
    std::vector<double> base(bands - 1), amp(bands - 1), freq(bands - 1), phase(bands - 1);
    for (int k = 0; k + 1 < bands; ++k) {
      base[k] = (k + 1) * band_h + uniform_real(rng, -cfg.band_jitter, cfg.band_jitter) * band_h;
      amp[k] = uniform_real(rng, 0.0, cfg.wave_amplitude) * band_h;
      freq[k] = uniform_real(rng, 0.5, 2.0);
      phase[k] = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    }
    LabelMap labels(w, h);
    for (int x = 0; x < w; ++x) {
      // Boundaries stay strictly increasing and leave the first row to band 0.
      std::vector<int> boundary(bands - 1);
      int previous = 0;
      for (int k = 0; k + 1 < bands; ++k) {
        const double y = base[k] + amp[k] * std::sin(2.0 * std::numbers::pi * freq[k] * x / w + phase[k]);
        const int lower = previous + 1;
        const int upper = h - (bands - 1 - k);
        boundary[k] = std::clamp(static_cast<int>(std::lround(y)), lower, std::max(lower, upper));
        previous = boundary[k];
      }
      for (int y = 0; y < h; ++y) {
        int band = 0;
        while (band < bands - 1 && y >= boundary[band]) ++band;
        labels.at(x, y) = static_cast<ClassId>(layout.band_classes[band]);
      }
    }
    if (!layout.foreground_classes.empty()) {
      const int blobs = cfg.blobs_min + static_cast<int>(uniform_index(rng, cfg.blobs_max - cfg.blobs_min + 1));
      for (int b = 0; b < blobs; ++b) {
        const int cls = layout.foreground_classes[uniform_index(rng, layout.foreground_classes.size())];
        const double cx = uniform_real(rng, 0.0, w);
        const double cy = uniform_real(rng, 0.55 * h, 0.9 * h);
        const double rx = uniform_real(rng, cfg.blob_radius_min, cfg.blob_radius_max) * w;
        const double ry = uniform_real(rng, cfg.blob_radius_min, cfg.blob_radius_max) * w;
        for (int y = 1; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5 - cx) / rx;
            const double dy = (y + 0.5 - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) labels.at(x, y) = static_cast<ClassId>(cls);
          }
        }
      }
    }
    RasterImage image(w, h);
    for (std::size_t p = 0; p < image.size(); ++p) {
      const Rgb base_color = layout.palette[labels[p]];
      auto channel = [&](std::uint8_t v) {
        if (cfg.noise_sigma == 0) return v;
        const double noisy = v + cfg.noise_sigma * standard_normal(rng);
        return static_cast<std::uint8_t>(std::clamp(std::lround(noisy), 0L, 255L));
      };
      const std::uint8_t r = channel(base_color.r);
      const std::uint8_t g = channel(base_color.g);
      const std::uint8_t bl = channel(base_color.b);
      image[p] = Rgb{r, g, bl};
    }
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05zu", index);
    ds.items[index] = DatasetItem{id, std::move(image), std::move(labels)};
  });
  return ds;
}

}  // namespace cavparse::data
