#include <gtest/gtest.h>

#include <cmath>

#include "cavparse/error.hpp"
#include "cavparse/random.hpp"
#include "cavparse/visual.hpp"
#include "unit/test_util.hpp"

using namespace cavparse;
using namespace cavparse::visual;

namespace {

ClassifierBank manual_bank(int m, int d, std::vector<double> bias) {
  ClassifierBank b;
  b.class_count = m;
  b.feature_dim = d;
  b.feature_mean.assign(d, 0.0);
  b.feature_scale.assign(d, 1.0);
  b.weights.assign(static_cast<std::size_t>(m) * d, 0.0);
  b.bias = std::move(bias);
  return b;
}

FeatureMatrix two_blobs(int per_class, std::uint64_t seed, std::vector<int>& labels) {
  Rng rng(seed);
  FeatureMatrix f;
  f.dim = 2;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      const double cx = c == 0 ? -2.0 : 2.0;
      f.data.push_back(cx + 0.5 * standard_normal(rng));
      f.data.push_back(0.5 * standard_normal(rng));
      labels.push_back(c);
      ++f.rows;
    }
  return f;
}

// Perceptron: terminates with zero training errors iff the data is linearly separable
// (within the epoch budget).
bool perceptron_separates(const FeatureMatrix& f, const std::vector<int>& labels) {
  double w0 = 0, w1 = 0, b = 0;
  for (int epoch = 0; epoch < 1000; ++epoch) {
    int errors = 0;
    for (int i = 0; i < f.rows; ++i) {
      const double y = labels[i] == 1 ? 1 : -1;
      if (y * (w0 * f.row(i)[0] + w1 * f.row(i)[1] + b) <= 0) {
        w0 += y * f.row(i)[0];
        w1 += y * f.row(i)[1];
        b += y;
        ++errors;
      }
    }
    if (errors == 0) return true;
  }
  return false;
}

}  // namespace

TEST(Features, ConstantGrayHasNoSpreadOrGradient) {
  const RasterImage img(20, 10, {128, 128, 128});
  std::vector<std::int32_t> a(200);
  for (int i = 0; i < 200; ++i) a[i] = (i % 20) < 10 ? 0 : 1;
  const auto sp = superpixel::from_assignment(20, 10, a);
  const auto f = extract_features(img, sp);
  ASSERT_EQ(f.rows, 2);
  ASSERT_EQ(f.dim, feature::kDim);
  for (int s = 0; s < 2; ++s) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.row(s)[feature::kStdRgb + k], 0.0);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(f.row(s)[feature::kGradHist + k], 0.0);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(f.row(s)[feature::kHueHist + k], 0.0);  // achromatic
  }
}

TEST(Features, WholeImageSuperpixel) {
  const auto img = testutil::random_image(13, 7, 2);
  const auto sp = superpixel::from_assignment(13, 7, std::vector<std::int32_t>(91, 0));
  const auto f = extract_features(img, sp);
  EXPECT_NEAR(f.row(0)[feature::kCentroid], 0.5, 1.0 / 13);
  EXPECT_NEAR(f.row(0)[feature::kCentroid + 1], 0.5, 1.0 / 7);
  EXPECT_DOUBLE_EQ(f.row(0)[feature::kRelativeSize], 1.0);
  double sum = 0;
  for (int k = 0; k < 8; ++k) sum += f.row(0)[feature::kHueHist + k];
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Features, MeanColourByDirectSummation) {
  RasterImage img(8, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) img.at(x, y) = x < 4 ? Rgb{255, 0, 0} : Rgb{0, 0, 255};
  std::vector<std::int32_t> a(32);
  for (int i = 0; i < 32; ++i) a[i] = (i % 8) < 4 ? 0 : 1;
  const auto f = extract_features(img, superpixel::from_assignment(8, 4, a));
  EXPECT_DOUBLE_EQ(f.row(0)[0] - f.row(1)[0], 1.0);
  EXPECT_DOUBLE_EQ(f.row(1)[2] - f.row(0)[2], 1.0);
  EXPECT_DOUBLE_EQ(f.row(0)[1], f.row(1)[1]);

  // Random image: compare channel means against a brute-force sum.
  const auto img2 = testutil::random_image(9, 9, 4);
  std::vector<std::int32_t> b(81);
  for (int i = 0; i < 81; ++i) b[i] = i < 40 ? 0 : 1;
  const auto sp2 = superpixel::from_assignment(9, 9, b);
  const auto f2 = extract_features(img2, sp2);
  double r = 0;
  for (int i = 0; i < 40; ++i) r += img2[i].r;
  EXPECT_NEAR(f2.row(0)[0], r / 40 / 255, 1e-12);
}

TEST(Features, DimensionMismatch) {
  const auto sp = superpixel::from_assignment(2, 2, std::vector<std::int32_t>(4, 0));
  EXPECT_THROW(extract_features(RasterImage(3, 2), sp), InvalidInput);
}

TEST(Classifier, SeparableBlobs) {
  std::vector<int> labels;
  const auto f = two_blobs(100, 9, labels);
  ASSERT_TRUE(perceptron_separates(f, labels));
  const auto bank = train_classifier_bank(f, labels, 2, TrainConfig{});
  int correct = 0;
  for (int i = 0; i < f.rows; ++i) correct += most_probable_class(predict_visual(bank, f.row(i))) == labels[i];
  EXPECT_EQ(correct, f.rows);
}

TEST(Classifier, SingleClassBank) {
  std::vector<int> labels;
  auto f = two_blobs(10, 1, labels);
  std::fill(labels.begin(), labels.end(), 0);
  const auto bank = train_classifier_bank(f, labels, 1, TrainConfig{});
  const auto p = predict_visual(bank, f.row(3));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], 1.0);
}

TEST(Classifier, DuplicatedSamplesGiveSameWeights) {
  std::vector<int> labels;
  const auto f = two_blobs(30, 5, labels);
  FeatureMatrix g = f;
  std::vector<int> glabels = labels;
  g.data.insert(g.data.end(), f.data.begin(), f.data.end());
  glabels.insert(glabels.end(), labels.begin(), labels.end());
  g.rows *= 2;
  TrainConfig cfg;
  cfg.epochs = 200;
  const auto a = train_classifier_bank(f, labels, 2, cfg);
  const auto b = train_classifier_bank(g, glabels, 2, cfg);
  for (std::size_t i = 0; i < a.weights.size(); ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-12);
  for (std::size_t i = 0; i < a.bias.size(); ++i) EXPECT_NEAR(a.bias[i], b.bias[i], 1e-12);
}

TEST(Classifier, ClassPermutationPermutesBank) {
  std::vector<int> labels;
  auto f = two_blobs(40, 3, labels);
  // Third class: shifted blob.
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    f.data.push_back(0.5 * standard_normal(rng));
    f.data.push_back(3 + 0.5 * standard_normal(rng));
    labels.push_back(2);
    ++f.rows;
  }
  const int perm[] = {2, 0, 1};
  std::vector<int> permuted(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) permuted[i] = perm[labels[i]];
  TrainConfig cfg;
  cfg.epochs = 100;
  const auto a = train_classifier_bank(f, labels, 3, cfg);
  const auto b = train_classifier_bank(f, permuted, 3, cfg);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(a.bias[c], b.bias[perm[c]]);
    for (int d = 0; d < 2; ++d) EXPECT_EQ(a.weights[c * 2 + d], b.weights[perm[c] * 2 + d]);
  }
}

TEST(Classifier, MissingClassIsConstantNegative) {
  std::vector<int> labels;
  const auto f = two_blobs(10, 2, labels);
  const auto bank = train_classifier_bank(f, labels, 3, TrainConfig{});
  EXPECT_LT(classifier_scores(bank, f.row(0))[2], 1e-6);
}

TEST(Classifier, Errors) {
  FeatureMatrix empty;
  empty.dim = 2;
  EXPECT_THROW(train_classifier_bank(empty, {}, 2, TrainConfig{}), InvalidInput);
  std::vector<int> labels;
  const auto f = two_blobs(3, 2, labels);
  labels[0] = 7;
  EXPECT_THROW(train_classifier_bank(f, labels, 2, TrainConfig{}), InvalidInput);
  const auto bank = manual_bank(2, 2, {0, 0});
  EXPECT_THROW(predict_visual(bank, std::vector<double>{1, 2, 3}), InvalidInput);
}

TEST(Classifier, MlpVariantLearnsXor) {
  FeatureMatrix f;
  f.dim = 2;
  std::vector<int> labels;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double x = uniform_real(rng, -1, 1), y = uniform_real(rng, -1, 1);
    if (std::abs(x) < 0.1 || std::abs(y) < 0.1) continue;
    f.data.push_back(x);
    f.data.push_back(y);
    labels.push_back((x > 0) != (y > 0));
    ++f.rows;
  }
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.learning_rate = 0.5;
  cfg.epochs = 3000;
  const auto bank = train_classifier_bank(f, labels, 2, cfg);
  int correct = 0;
  for (int i = 0; i < f.rows; ++i) correct += most_probable_class(predict_visual(bank, f.row(i))) == labels[i];
  EXPECT_GT(correct, f.rows * 9 / 10);
}

TEST(Predict, Examples) {
  const std::vector<double> feats{0.3, -0.2};
  auto p = predict_visual(manual_bank(4, 2, {0, 0, 0, 0}), feats);
  for (double x : p) EXPECT_DOUBLE_EQ(x, 0.25);

  p = predict_visual(manual_bank(1, 2, {-3}), feats);
  EXPECT_EQ(p, ProbVector{1.0});

  // sigma(10) / (sigma(10) + 2 sigma(-10)).
  p = predict_visual(manual_bank(3, 2, {10, -10, -10}), feats);
  const double hi = 1 / (1 + std::exp(-10.0)), lo = 1 / (1 + std::exp(10.0));
  EXPECT_NEAR(p[0], hi / (hi + 2 * lo), 1e-15);
  EXPECT_GT(p[0], 0.99);
}

TEST(Predict, BiasMonotonicity) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto bank = manual_bank(3, 2, {uniform_real(rng, -3, 3), uniform_real(rng, -3, 3), uniform_real(rng, -3, 3)});
    for (double& w : bank.weights) w = uniform_real(rng, -1, 1);
    const std::vector<double> x{uniform_real(rng, -1, 1), uniform_real(rng, -1, 1)};
    const double before = predict_visual(bank, x)[1];
    bank.bias[1] += uniform_real(rng, 0, 2);
    EXPECT_GE(predict_visual(bank, x)[1], before);
  }
}

TEST(Presets, DeskAndDecayed) {
  const auto desk = train_preset("desk");
  EXPECT_EQ(desk.learning_rate, 1e-2);
  EXPECT_EQ(desk.epochs, 500);
  EXPECT_EQ(desk.l2, 1e-4);
  const auto decayed = train_preset("decayed");
  EXPECT_EQ(decayed.learning_rate, 1e-4);
  EXPECT_EQ(decayed.decay_factor, 0.1);
  EXPECT_EQ(decayed.decay_every, 30);
  EXPECT_THROW(train_preset("svm"), InvalidInput);
}
