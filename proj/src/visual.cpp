#include "cavparse/visual.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cavparse/parallel.hpp"
#include "cavparse/random.hpp"
#include "cavparse/simd/kernels.hpp"

namespace cavparse::visual {
namespace {

constexpr double kConstantLogit = 20.0;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int hue_bin(Rgb p) {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  if (mx == mn) return -1;
  const double d = mx - mn;
  double h = 0;
  if (mx == p.r) {
    h = 60.0 * std::fmod((p.g - p.b) / d + 6.0, 6.0);
  } else if (mx == p.g) {
    h = 60.0 * ((p.b - p.r) / d + 2.0);
  } else {
    h = 60.0 * ((p.r - p.g) / d + 4.0);
  }
  return std::clamp(static_cast<int>(h / 45.0), 0, 7);
}

struct ClassModel {
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> hidden_weights;
  std::vector<double> hidden_bias;
};

// Balanced binary training for one class on standardized rows.
ClassModel train_one(const std::vector<double>& x, int rows, int dim, std::span<const int> labels,
                     int positive_class, const TrainConfig& cfg) {
  const simd::KernelTable& k = simd::active_kernels();
  std::vector<double> target(rows), sample_weight(rows);
  std::int64_t n_pos = 0;
  for (int i = 0; i < rows; ++i) n_pos += labels[i] == positive_class ? 1 : 0;
  const std::int64_t n_neg = rows - n_pos;

  const int hidden = cfg.hidden;
  ClassModel model;
  model.weights.assign(hidden > 0 ? hidden : dim, 0.0);
  if (hidden > 0) {
    model.hidden_weights.assign(static_cast<std::size_t>(dim) * hidden, 0.0);
    model.hidden_bias.assign(hidden, 0.0);
  }
  if (n_pos == 0 || n_neg == 0) {
    if (n_pos == 0) {
      spdlog::warn("class {} has no positive training samples; using a constant-negative classifier",
                   positive_class);
    }
    model.bias = n_pos == 0 ? -kConstantLogit : kConstantLogit;
    return model;
  }
  for (int i = 0; i < rows; ++i) {
    const bool pos = labels[i] == positive_class;
    target[i] = pos ? 1.0 : 0.0;
    sample_weight[i] = pos ? 0.5 / static_cast<double>(n_pos) : 0.5 / static_cast<double>(n_neg);
  }

  Rng rng(cfg.seed);
  if (hidden > 0) {
    const double hw = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& w : model.hidden_weights) w = uniform_real(rng, -hw, hw);
    const double ow = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& w : model.weights) w = uniform_real(rng, -ow, ow);
  }

  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  const int batch = (cfg.batch_size <= 0 || cfg.batch_size >= rows) ? rows : cfg.batch_size;
  const std::size_t nw = model.weights.size();
  std::vector<double> grad_w(nw), grad_hw(model.hidden_weights.size()), grad_hb(hidden);
  std::vector<double> h(hidden), delta_h(hidden);

  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.decay_every > 0 && epoch > 0 && epoch % cfg.decay_every == 0) lr *= cfg.decay_factor;
    if (batch < rows) {
      for (int i = rows - 1; i > 0; --i) {
        std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
      }
    }
    for (int start = 0; start < rows; start += batch) {
      const int end = std::min(rows, start + batch);
      const double batch_scale = static_cast<double>(rows) / (end - start);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_hw.begin(), grad_hw.end(), 0.0);
      std::fill(grad_hb.begin(), grad_hb.end(), 0.0);
      double grad_b = 0.0;
      for (int s = start; s < end; ++s) {
        const int i = order[s];
        const double* xi = x.data() + static_cast<std::size_t>(i) * dim;
        if (hidden == 0) {
          const double p = sigmoid(k.dot(model.weights.data(), xi, dim) + model.bias);
          const double r = sample_weight[i] * (p - target[i]) * batch_scale;
          k.axpy(r, xi, grad_w.data(), dim);
          grad_b += r;
        } else {
          k.affine(xi, dim, model.hidden_weights.data(), model.hidden_bias.data(), hidden, h.data());
          for (double& v : h) v = sigmoid(v);
          const double p = sigmoid(k.dot(model.weights.data(), h.data(), hidden) + model.bias);
          const double r = sample_weight[i] * (p - target[i]) * batch_scale;
          k.axpy(r, h.data(), grad_w.data(), hidden);
          grad_b += r;
          for (int j = 0; j < hidden; ++j) delta_h[j] = r * model.weights[j] * h[j] * (1.0 - h[j]);
          for (int d = 0; d < dim; ++d) {
            k.axpy(xi[d], delta_h.data(), grad_hw.data() + static_cast<std::size_t>(d) * hidden, hidden);
          }
          k.axpy(1.0, delta_h.data(), grad_hb.data(), hidden);
        }
      }
      for (std::size_t j = 0; j < nw; ++j) {
        model.weights[j] -= lr * (grad_w[j] + cfg.l2 * model.weights[j]);
      }
      model.bias -= lr * grad_b;
      for (std::size_t j = 0; j < grad_hw.size(); ++j) {
        model.hidden_weights[j] -= lr * (grad_hw[j] + cfg.l2 * model.hidden_weights[j]);
      }
      for (int j = 0; j < hidden; ++j) model.hidden_bias[j] -= lr * grad_hb[j];
    }
  }
  return model;
}

}  // namespace

FeatureMatrix extract_features(const RasterImage& image, const superpixel::SuperpixelMap& spmap) {
  if (image.width() != spmap.width || image.height() != spmap.height ||
      spmap.assignment.size() != image.size()) {
    throw InvalidInput("extract_features: superpixel map does not match image dimensions");
  }
  const int n = spmap.count;
  const int width = image.width();
  const int height = image.height();
  FeatureMatrix out;
  out.rows = n;
  out.dim = feature::kDim;
  out.data.assign(static_cast<std::size_t>(n) * feature::kDim, 0.0);

  std::vector<std::int64_t> sum(static_cast<std::size_t>(n) * 3, 0), sumsq(static_cast<std::size_t>(n) * 3, 0);
  std::vector<std::int64_t> chromatic(n, 0);
  std::vector<double> gray(image.size());
  for (std::size_t p = 0; p < image.size(); ++p) {
    const Rgb px = image[p];
    gray[p] = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
    const std::int32_t id = spmap.assignment[p];
    const int c[3] = {px.r, px.g, px.b};
    for (int ch = 0; ch < 3; ++ch) {
      sum[id * 3 + ch] += c[ch];
      sumsq[id * 3 + ch] += static_cast<std::int64_t>(c[ch]) * c[ch];
    }
    if (const int bin = hue_bin(px); bin >= 0) {
      out.data[static_cast<std::size_t>(id) * feature::kDim + feature::kHueHist + bin] += 1.0;
      ++chromatic[id];
    }
  }

  auto g = [&](int x, int y) {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return gray[static_cast<std::size_t>(y) * width + x];
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gx = (g(x + 1, y - 1) + 2 * g(x + 1, y) + g(x + 1, y + 1)) -
                        (g(x - 1, y - 1) + 2 * g(x - 1, y) + g(x - 1, y + 1));
      const double gy = (g(x - 1, y + 1) + 2 * g(x, y + 1) + g(x + 1, y + 1)) -
                        (g(x - 1, y - 1) + 2 * g(x, y - 1) + g(x + 1, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0) theta += std::numbers::pi;
      const int bin = std::clamp(static_cast<int>(theta / (std::numbers::pi / 8.0)), 0, 7);
      const std::int32_t id = spmap.at(x, y);
      out.data[static_cast<std::size_t>(id) * feature::kDim + feature::kGradHist + bin] += mag;
    }
  }

  const double area = static_cast<double>(image.size());
  for (int i = 0; i < n; ++i) {
    auto row = out.row(i);
    const std::int64_t cnt = spmap.pixel_count[i];
    const double dn = static_cast<double>(cnt);
    for (int ch = 0; ch < 3; ++ch) {
      const std::int64_t s = sum[i * 3 + ch];
      const std::int64_t sq = sumsq[i * 3 + ch];
      row[feature::kMeanRgb + ch] = static_cast<double>(s) / dn / 255.0;
      // Exact integer variance numerator: n * sum(x^2) - sum(x)^2.
      const std::int64_t var_num = cnt * sq - s * s;
      row[feature::kStdRgb + ch] = std::sqrt(static_cast<double>(var_num)) / dn / 255.0;
    }
    row[feature::kCentroid] = spmap.centroid[i].x / width;
    row[feature::kCentroid + 1] = spmap.centroid[i].y / height;
    row[feature::kRelativeSize] = dn / area;
    if (chromatic[i] > 0) {
      for (int b = 0; b < 8; ++b) row[feature::kHueHist + b] /= static_cast<double>(chromatic[i]);
    }
    {
      double total = 0;
      for (int b = 0; b < 8; ++b) total += row[feature::kGradHist + b];
      if (total > 0) {
        for (int b = 0; b < 8; ++b) row[feature::kGradHist + b] /= total;
      }
    }
  }
  return out;
}

TrainConfig train_preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "desk") return cfg;
  if (name == "decayed") {
    cfg.learning_rate = 1e-4;
    cfg.decay_factor = 0.1;
    cfg.decay_every = 30;
    cfg.epochs = 90;
    return cfg;
  }
  throw InvalidInput("unknown classifier preset '" + name + "' (expected desk or decayed)");
}

ClassifierBank train_classifier_bank(const FeatureMatrix& features, std::span<const int> labels,
                                     int class_count, const TrainConfig& config) {
  if (features.rows == 0) throw InvalidInput("train_classifier_bank: empty training set");
  if (class_count < 1) throw InvalidInput("train_classifier_bank: class_count must be >= 1");
  if (static_cast<int>(labels.size()) != features.rows) {
    throw InvalidInput("train_classifier_bank: label count does not match feature rows");
  }
  for (int label : labels) {
    if (label < 0 || label >= class_count) {
      throw InvalidInput("train_classifier_bank: label " + std::to_string(label) + " out of range");
    }
  }
  if (config.epochs < 0 || !(config.learning_rate > 0) || config.hidden < 0 || config.l2 < 0) {
    throw InvalidInput("train_classifier_bank: invalid training configuration");
  }

  const int rows = features.rows;
  const int dim = features.dim;
  ClassifierBank bank;
  bank.class_count = class_count;
  bank.feature_dim = dim;
  bank.hidden = config.hidden;
  bank.trained_with = config;
  bank.feature_mean.assign(dim, 0.0);
  bank.feature_scale.assign(dim, 1.0);
  for (int d = 0; d < dim; ++d) {
    double mean = 0;
    for (int i = 0; i < rows; ++i) mean += features.data[static_cast<std::size_t>(i) * dim + d];
    mean /= rows;
    double var = 0;
    for (int i = 0; i < rows; ++i) {
      const double diff = features.data[static_cast<std::size_t>(i) * dim + d] - mean;
      var += diff * diff;
    }
    var /= rows;
    bank.feature_mean[d] = mean;
    bank.feature_scale[d] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  std::vector<double> x(features.data.size());
  for (int i = 0; i < rows; ++i) {
    for (int d = 0; d < dim; ++d) {
      const std::size_t idx = static_cast<std::size_t>(i) * dim + d;
      x[idx] = (features.data[idx] - bank.feature_mean[d]) * bank.feature_scale[d];
    }
  }

  std::vector<ClassModel> models(class_count);
  parallel_for(static_cast<std::size_t>(class_count), config.workers, [&](std::size_t c) {
    models[c] = train_one(x, rows, dim, labels, static_cast<int>(c), config);
  });

  const int out_dim = config.hidden > 0 ? config.hidden : dim;
  bank.weights.reserve(static_cast<std::size_t>(class_count) * out_dim);
  for (const auto& m : models) {
    bank.weights.insert(bank.weights.end(), m.weights.begin(), m.weights.end());
    bank.bias.push_back(m.bias);
    bank.hidden_weights.insert(bank.hidden_weights.end(), m.hidden_weights.begin(), m.hidden_weights.end());
    bank.hidden_bias.insert(bank.hidden_bias.end(), m.hidden_bias.begin(), m.hidden_bias.end());
  }
  return bank;
}

void validate(const ClassifierBank& bank) {
  const auto m = static_cast<std::size_t>(bank.class_count);
  const auto d = static_cast<std::size_t>(bank.feature_dim);
  const auto h = static_cast<std::size_t>(bank.hidden);
  bool ok = bank.class_count >= 1 && bank.feature_dim >= 1 && bank.hidden >= 0 &&
            bank.feature_mean.size() == d && bank.feature_scale.size() == d && bank.bias.size() == m;
  if (ok && h == 0) {
    ok = bank.weights.size() == m * d && bank.hidden_weights.empty() && bank.hidden_bias.empty();
  } else if (ok) {
    ok = bank.weights.size() == m * h && bank.hidden_weights.size() == m * d * h &&
         bank.hidden_bias.size() == m * h;
  }
  if (!ok) throw InvalidInput("classifier bank: inconsistent shapes");
  for (const auto* v : {&bank.feature_mean, &bank.feature_scale, &bank.weights, &bank.bias,
                        &bank.hidden_weights, &bank.hidden_bias}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw InvalidInput("classifier bank: non-finite parameter");
    }
  }
}

std::vector<double> classifier_scores(const ClassifierBank& bank, std::span<const double> features) {
  if (static_cast<int>(features.size()) != bank.feature_dim) {
    throw InvalidInput("predict_visual: feature length " + std::to_string(features.size()) +
                       " != " + std::to_string(bank.feature_dim));
  }
  const simd::KernelTable& k = simd::active_kernels();
  const int dim = bank.feature_dim;
  std::vector<double> x(dim);
  for (int d = 0; d < dim; ++d) x[d] = (features[d] - bank.feature_mean[d]) * bank.feature_scale[d];
  std::vector<double> scores(bank.class_count);
  std::vector<double> h(bank.hidden);
  for (int c = 0; c < bank.class_count; ++c) {
    double z = 0;
    if (bank.hidden == 0) {
      z = k.dot(bank.weights.data() + static_cast<std::size_t>(c) * dim, x.data(), dim) + bank.bias[c];
    } else {
      const std::size_t hs = static_cast<std::size_t>(bank.hidden);
      k.affine(x.data(), dim, bank.hidden_weights.data() + c * dim * hs, bank.hidden_bias.data() + c * hs,
               hs, h.data());
      for (double& v : h) v = sigmoid(v);
      z = k.dot(bank.weights.data() + c * hs, h.data(), hs) + bank.bias[c];
    }
    scores[c] = sigmoid(z);
  }
  return scores;
}

ProbVector predict_visual(const ClassifierBank& bank, std::span<const double> features) {
  ProbVector p = classifier_scores(bank, features);
  normalize_l1(p);
  return p;
}

std::vector<ProbVector> predict_visual_all(const ClassifierBank& bank, const FeatureMatrix& features) {
  std::vector<ProbVector> out(features.rows);
  for (int i = 0; i < features.rows; ++i) out[i] = predict_visual(bank, features.row(i));
  return out;
}

}  // namespace cavparse::visual
