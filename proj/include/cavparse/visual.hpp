#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cavparse/image.hpp"
#include "cavparse/prob.hpp"
#include "cavparse/superpixel.hpp"

namespace cavparse::visual {

// Layout of the per-superpixel descriptor.
namespace feature {
inline constexpr int kMeanRgb = 0;      // 3, in [0,1]
inline constexpr int kStdRgb = 3;       // 3
inline constexpr int kCentroid = 6;     // 2, x/W and y/H
inline constexpr int kRelativeSize = 8; // 1
inline constexpr int kHueHist = 9;      // 8, L1-normalized over chromatic pixels
inline constexpr int kGradHist = 17;    // 8, magnitude-weighted orientation, L1-normalized
inline constexpr int kDim = 25;
}  // namespace feature

// Row-major (superpixel x dim) matrix.
struct FeatureMatrix {
  int rows = 0;
  int dim = 0;
  std::vector<double> data;

  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<double> row(int i) {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
};

FeatureMatrix extract_features(const RasterImage& image, const superpixel::SuperpixelMap& spmap);

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 500;
  double l2 = 1e-4;
  int batch_size = 0;         // 0 = full batch
  double decay_factor = 1.0;  // learning rate multiplied by this every decay_every epochs
  int decay_every = 0;        // 0 = no decay
  int hidden = 0;             // 0 = logistic; > 0 = one hidden sigmoid layer per classifier
  std::uint64_t seed = 0;
  unsigned workers = 1;

  // Worker count is an execution detail and never changes the result.
  friend bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.learning_rate == b.learning_rate && a.epochs == b.epochs && a.l2 == b.l2 &&
           a.batch_size == b.batch_size && a.decay_factor == b.decay_factor &&
           a.decay_every == b.decay_every && a.hidden == b.hidden && a.seed == b.seed;
  }
};

// "desk": stable defaults for small corpora. "decayed": lr 1e-4 decayed by 0.1
// every 30 epochs.
TrainConfig train_preset(const std::string& name);

// M one-vs-all classifiers over standardized features.
struct ClassifierBank {
  int class_count = 0;
  int feature_dim = 0;
  int hidden = 0;
  std::vector<double> feature_mean;   // D
  std::vector<double> feature_scale;  // D, multiplies (f - mean)
  std::vector<double> weights;        // logistic: M x D; mlp: M x hidden
  std::vector<double> bias;           // M
  std::vector<double> hidden_weights; // mlp only: M x (D x hidden), row-major per class
  std::vector<double> hidden_bias;    // mlp only: M x hidden
  TrainConfig trained_with;

  friend bool operator==(const ClassifierBank&, const ClassifierBank&) = default;
};

// Labels are per-row class indices < class_count. Classes without positives
// become constant-negative classifiers (a warning is logged).
ClassifierBank train_classifier_bank(const FeatureMatrix& features, std::span<const int> labels,
                                     int class_count, const TrainConfig& config);

// Per-class sigmoid scores before normalization.
std::vector<double> classifier_scores(const ClassifierBank& bank, std::span<const double> features);

// L1-normalized sigmoid scores.
ProbVector predict_visual(const ClassifierBank& bank, std::span<const double> features);

std::vector<ProbVector> predict_visual_all(const ClassifierBank& bank, const FeatureMatrix& features);

void validate(const ClassifierBank& bank);

}  // namespace cavparse::visual
