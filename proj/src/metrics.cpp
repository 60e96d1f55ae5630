#include "cavparse/metrics.hpp"

#include <numeric>
#include <string>

namespace cavparse::metrics {
namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InvalidInput("metrics: confusion matrix is empty");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int class_count) : class_count_(class_count) {
  if (class_count < 1 || class_count > kIgnore) {
    throw InvalidInput("ConfusionMatrix: class_count must be in [1, 255)");
  }
  counts_.assign(static_cast<std::size_t>(class_count) * class_count, 0);
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t n) {
  if (truth < 0 || truth >= class_count_ || predicted < 0 || predicted >= class_count_) {
    throw InvalidInput("ConfusionMatrix: class index out of range");
  }
  counts_[static_cast<std::size_t>(truth) * class_count_ + predicted] += n;
}

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height()) {
    throw InvalidInput("accumulate: prediction " + std::to_string(predicted.width()) + "x" +
                       std::to_string(predicted.height()) + " does not match ground truth " +
                       std::to_string(truth.width()) + "x" + std::to_string(truth.height()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kIgnore) continue;
    if (truth[i] >= class_count_ || predicted[i] >= class_count_) {
      throw InvalidInput("accumulate: label value out of range at pixel " + std::to_string(i));
    }
    ++counts_[static_cast<std::size_t>(truth[i]) * class_count_ + predicted[i]];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.class_count_ != class_count_) throw InvalidInput("ConfusionMatrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  std::uint64_t trace = 0;
  for (int c = 0; c < cm.class_count(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(cm.total());
}

namespace {

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
};

// Means of ratios are accumulated in extended precision so that small
// hand-checkable cases round to the nearest double (7/12, not 7/12 - 1 ulp).
double mean_of_ratios(const std::vector<Ratio>& ratios) {
  long double sum = 0;
  int n = 0;
  for (const auto& r : ratios) {
    if (r.den == 0) continue;
    sum += static_cast<long double>(r.num) / static_cast<long double>(r.den);
    ++n;
  }
  return n > 0 ? static_cast<double>(sum / n) : 0.0;
}

std::vector<Ratio> recall_ratios(const ConfusionMatrix& cm) {
  std::vector<Ratio> out(cm.class_count());
  for (int g = 0; g < cm.class_count(); ++g) {
    for (int p = 0; p < cm.class_count(); ++p) out[g].den += cm.at(g, p);
    out[g].num = cm.at(g, g);
  }
  return out;
}

std::vector<Ratio> iou_ratios(const ConfusionMatrix& cm) {
  const int m = cm.class_count();
  std::vector<Ratio> out(m);
  for (int c = 0; c < m; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int k = 0; k < m; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    out[c].num = cm.at(c, c);
    out[c].den = row + col - out[c].num;
  }
  return out;
}

std::vector<std::optional<double>> to_optional(const std::vector<Ratio>& ratios) {
  std::vector<std::optional<double>> out(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i].den > 0) out[i] = static_cast<double>(ratios[i].num) / static_cast<double>(ratios[i].den);
  }
  return out;
}

}  // namespace

std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm) {
  return to_optional(recall_ratios(cm));
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) { return to_optional(iou_ratios(cm)); }

double class_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return mean_of_ratios(recall_ratios(cm));
}

double mean_iou(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return mean_of_ratios(iou_ratios(cm));
}

}  // namespace cavparse::metrics
