#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cavparse/bundle.hpp"
#include "cavparse/context.hpp"
#include "cavparse/data.hpp"
#include "cavparse/fusion.hpp"
#include "cavparse/ganet.hpp"
#include "cavparse/metrics.hpp"
#include "cavparse/superpixel.hpp"
#include "cavparse/visual.hpp"

namespace cavparse::pipeline {

struct PipelineConfig {
  superpixel::SlicParams slic;
  int grid_side = 3;
  double ocp_alpha = 1.0;
  visual::TrainConfig classifier;
  int fusion_hidden = 0;  // 0 = 2 * M
  fusion::InputMode fusion_mode = fusion::InputMode::kTriple;
  ganet::GaConfig ga;
  // Seed one initial GA member with the net that reproduces visual-only labels.
  bool warm_start = true;
  // Logit scale of that net; larger values make it harder to move away from.
  double warm_start_gain = 5.0;
  // Share of the training images held out from Layer I to fit the integration layer.
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void validate(const PipelineConfig& cfg);

// Segmentation and visual descriptors of one image.
struct ImageAnalysis {
  superpixel::SuperpixelMap spmap;
  superpixel::BlockGrid blocks;
  visual::FeatureMatrix features;
};

ImageAnalysis analyze_image(const RasterImage& image, const superpixel::SlicParams& slic, int grid_side);

struct TrainReport {
  bundle::ModelBundle bundle;
  std::vector<std::pair<std::string, double>> stage_seconds;  // in run order
  std::size_t layer1_images = 0;
  std::size_t fusion_images = 0;
  std::size_t fusion_samples = 0;
};

// Trains all three layers on `train` (every item is used). When `stage` is
// given it holds the name of the running stage, so callers can report where a
// failure happened.
TrainReport train_model(const data::Dataset& train, const PipelineConfig& cfg, std::string* stage = nullptr);

// Per-superpixel outputs of every stage for one image.
struct StageOutputs {
  ImageAnalysis analysis;
  std::vector<ProbVector> p_vis;
  std::vector<int> visual_class;
  std::vector<context::CavFeatures> cav;
  std::vector<ProbVector> final_prob;
  std::vector<int> final_class;
};

StageOutputs run_stages(const bundle::ModelBundle& model, const RasterImage& image);

// Projects per-superpixel classes onto pixels.
LabelMap paint(const superpixel::SuperpixelMap& spmap, const std::vector<int>& classes);

RasterImage colorize(const LabelMap& labels, const std::vector<Rgb>& palette);

struct EvalReport {
  metrics::ConfusionMatrix final_cm;
  metrics::ConfusionMatrix visual_cm;
};

EvalReport evaluate(const bundle::ModelBundle& model, const data::Dataset& ds, unsigned workers);

}  // namespace cavparse::pipeline
