#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "cavparse/data.hpp"
#include "cavparse/error.hpp"
#include "cavparse/image_io.hpp"
#include "unit/test_util.hpp"

using namespace cavparse;
using namespace cavparse::data;
namespace fs = std::filesystem;

namespace {

void write_classes(const fs::path& root, int m) {
  std::ofstream out(root / "classes.txt");
  for (int i = 0; i < m; ++i) out << "class" << i << "\n";
}

void make_layout(const fs::path& root, int m) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  write_classes(root, m);
}

Dataset numbered(std::size_t n) {
  Dataset ds;
  ds.class_count = 2;
  ds.class_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) ds.items.push_back({std::to_string(1000 + i), RasterImage(1, 1), LabelMap(1, 1)});
  return ds;
}

}  // namespace

TEST(Load, EmptyDirectoryGivesEmptyDataset) {
  testutil::TempDir tmp;
  make_layout(tmp.path(), 3);
  const auto ds = load_dataset(tmp.path());
  EXPECT_EQ(ds.size(), 0u);
  EXPECT_EQ(ds.class_count, 3);
}

TEST(Load, SingleItem) {
  testutil::TempDir tmp;
  make_layout(tmp.path(), 2);
  io::write_png_rgb(tmp.path() / "images" / "a.png", RasterImage(2, 2, {1, 2, 3}));
  LabelMap l(2, 2);
  l[3] = 1;
  io::write_label_png(tmp.path() / "labels" / "a.png", l);
  const auto ds = load_dataset(tmp.path());
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.items[0].id, "a");
  EXPECT_EQ(ds.items[0].labels, l);
  EXPECT_EQ(ds.items[0].image.at(1, 1), (Rgb{1, 2, 3}));
}

TEST(Load, PerFileProblemsAreAggregated) {
  testutil::TempDir tmp;
  make_layout(tmp.path(), 2);
  io::write_png_rgb(tmp.path() / "images" / "bad_value.png", RasterImage(2, 2));
  LabelMap l(2, 2);
  l[0] = 5;  // M + 3
  io::write_label_png(tmp.path() / "labels" / "bad_value.png", l);
  io::write_png_rgb(tmp.path() / "images" / "no_label.png", RasterImage(2, 2));
  io::write_png_rgb(tmp.path() / "images" / "wrong_size.png", RasterImage(3, 2));
  io::write_label_png(tmp.path() / "labels" / "wrong_size.png", LabelMap(2, 2));
  try {
    load_dataset(tmp.path());
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    ASSERT_EQ(e.problems().size(), 3u);
    const std::string all = e.what();
    EXPECT_NE(all.find("bad_value.png"), std::string::npos);
    EXPECT_NE(all.find("label value 5"), std::string::npos);
    EXPECT_NE(all.find("no_label"), std::string::npos);
    EXPECT_NE(all.find("wrong_size"), std::string::npos);
  }
}

TEST(Load, MissingLabelsDirectoryNamesPath) {
  testutil::TempDir tmp;
  fs::create_directories(tmp.path() / "images");
  write_classes(tmp.path(), 2);
  try {
    load_dataset(tmp.path());
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find((tmp.path() / "labels").string()), std::string::npos);
  }
}

TEST(Load, OrderingIsLexicographicAndStable) {
  testutil::TempDir tmp;
  make_layout(tmp.path(), 2);
  for (const char* id : {"b", "a10", "a2", "c"}) {
    io::write_ppm(tmp.path() / "images" / (std::string(id) + ".ppm"), RasterImage(1, 1));
    io::write_label_png(tmp.path() / "labels" / (std::string(id) + ".png"), LabelMap(1, 1));
  }
  const auto a = load_dataset(tmp.path(), 1);
  const auto b = load_dataset(tmp.path(), 3);
  std::vector<std::string> ids;
  for (const auto& it : a.items) ids.push_back(it.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a10", "a2", "b", "c"}));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.items[i].id, b.items[i].id);
}

TEST(Split, Examples) {
  auto [tr, te] = split(numbered(715), 0.8, 1);
  EXPECT_EQ(tr.size(), 572u);
  EXPECT_EQ(te.size(), 143u);
  std::set<std::string> ids;
  for (const auto& it : tr.items) ids.insert(it.id);
  for (const auto& it : te.items) EXPECT_EQ(ids.count(it.id), 0u);
  for (const auto& it : te.items) ids.insert(it.id);
  EXPECT_EQ(ids.size(), 715u);

  auto [tr2, te2] = split(numbered(715), 0.8, 1);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(tr.items[i].id, tr2.items[i].id);

  auto [a, b] = split(numbered(2), 0.5, 9);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(b.size(), 1u);
  EXPECT_THROW(split(numbered(4), 0.0, 1), InvalidInput);
  EXPECT_THROW(split(numbered(4), 1.0, 1), InvalidInput);
}

TEST(Synth, NoiseFreeColoursEqualPalette) {
  SynthConfig cfg;
  cfg.class_count = 2;
  cfg.noise_sigma = 0;
  cfg.count = 5;
  const auto layout = synth_layout(cfg);
  const auto ds = synth_generate(cfg);
  for (const auto& it : ds.items)
    for (std::size_t p = 0; p < it.image.size(); ++p) EXPECT_EQ(it.image[p], layout.palette[it.labels[p]]);
}

TEST(Synth, NearestPaletteRecoversLabelsAtZeroNoise) {
  for (int m = 2; m <= 8; ++m) {
    SynthConfig cfg;
    cfg.class_count = m;
    cfg.noise_sigma = 0;
    cfg.count = 4;
    cfg.seed = m;
    const auto layout = synth_layout(cfg);
    std::set<std::tuple<int, int, int>> distinct;
    for (const auto& c : layout.palette) distinct.insert({c.r, c.g, c.b});
    EXPECT_EQ(distinct.size(), static_cast<std::size_t>(m));
    for (const auto& it : synth_generate(cfg).items) {
      for (std::size_t p = 0; p < it.image.size(); ++p) {
        int best = 0;
        long best_d = -1;
        for (int k = 0; k < m; ++k) {
          const auto& c = layout.palette[k];
          const long d = (c.r - it.image[p].r) * (c.r - it.image[p].r) + (c.g - it.image[p].g) * (c.g - it.image[p].g) +
                         (c.b - it.image[p].b) * (c.b - it.image[p].b);
          if (best_d < 0 || d < best_d) best_d = d, best = k;
        }
        ASSERT_EQ(best, it.labels[p]);
      }
    }
  }
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.count = 6;
  cfg.seed = 4;
  const auto a = synth_generate(cfg, 1), b = synth_generate(cfg, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.items[i].image, b.items[i].image);
    EXPECT_EQ(a.items[i].labels, b.items[i].labels);
  }
  EXPECT_EQ(dataset_hash(a), dataset_hash(b));
  cfg.seed = 5;
  EXPECT_NE(dataset_hash(synth_generate(cfg)), dataset_hash(a));
}

TEST(Synth, TopRowIsSkyAndLabelsComplete) {
  SynthConfig cfg;
  cfg.count = 100;
  cfg.seed = 8;
  const auto ds = synth_generate(cfg);
  for (const auto& it : ds.items) {
    for (int x = 0; x < it.labels.width(); ++x) EXPECT_EQ(it.labels.at(x, 0), 0) << it.id;
    for (std::size_t p = 0; p < it.labels.size(); ++p) EXPECT_LT(it.labels[p], cfg.class_count);
  }
  EXPECT_EQ(ds.class_names.front(), "sky");
}

TEST(Synth, RoundTripThroughDisk) {
  SynthConfig cfg;
  cfg.count = 3;
  const auto ds = synth_generate(cfg);
  testutil::TempDir tmp;
  write_dataset(ds, tmp.path());
  const auto back = load_dataset(tmp.path());
  EXPECT_EQ(dataset_hash(back), dataset_hash(ds));
  EXPECT_EQ(back.class_names, ds.class_names);
}

TEST(Presets, ClassNames) {
  EXPECT_EQ(sbd_class_names(),
            (std::vector<std::string>{"Sky", "Tree", "Road", "Grass", "Water", "Bldg.", "Mt.", "Frgd."}));
  EXPECT_EQ(camvid_class_names().size(), 11u);
  EXPECT_EQ(class_preset("sbd"), sbd_class_names());
  EXPECT_THROW(class_preset("voc"), InvalidInput);
}
