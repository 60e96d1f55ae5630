#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cavparse/context.hpp"
#include "cavparse/fusion.hpp"
#include "cavparse/ganet.hpp"
#include "cavparse/superpixel.hpp"
#include "cavparse/visual.hpp"

namespace cavparse::bundle {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kMagic = "CAVPARSE-BUNDLE";

// Everything needed to reproduce predictions, plus how it was trained.
struct ModelBundle {
  int class_count = 0;
  std::vector<std::string> class_names;
  std::vector<Rgb> palette;
  superpixel::SlicParams slic;
  int grid_side = 3;
  std::string feature_set = "rgb-std-pos-size-hue8-grad8";
  visual::ClassifierBank classifier;
  context::OcpModel ocp;
  fusion::IntegrationNet integration;
  std::vector<ganet::GenerationStats> ga_history;
  // Seeds, split parameters, dataset hash, optional timestamp.
  std::map<std::string, std::string> provenance;

  friend bool operator==(const ModelBundle& a, const ModelBundle& b);
};

bool operator==(const superpixel::SlicParams& a, const superpixel::SlicParams& b);

// Shape consistency across components (shared M, grid side, ...).
void validate(const ModelBundle& b);

std::string serialize(const ModelBundle& b);
ModelBundle deserialize(const std::string& text);

void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

// Base-64 (RFC 4648, padded) of little-endian IEEE-754 doubles.
std::string encode_f64(const std::vector<double>& values);
std::vector<double> decode_f64(const std::string& text, std::size_t expected_count);

std::uint32_t crc32_of(const std::vector<double>& values);

}  // namespace cavparse::bundle
