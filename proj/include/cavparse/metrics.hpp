#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cavparse/image.hpp"

namespace cavparse::metrics {

// counts[g * M + p] = pixels with ground truth g predicted as p. Void pixels
// are never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  int class_count() const { return class_count_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * class_count_ + predicted];
  }
  std::uint64_t total() const;

  void add(int truth, int predicted, std::uint64_t n = 1);
  void accumulate(const LabelMap& predicted, const LabelMap& truth);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int class_count_;
  std::vector<std::uint64_t> counts_;
};

double pixel_accuracy(const ConfusionMatrix& cm);
// Mean recall over classes with ground-truth pixels.
double class_accuracy(const ConfusionMatrix& cm);
// Mean IoU over classes present in ground truth or prediction.
double mean_iou(const ConfusionMatrix& cm);
// Per-class recall; empty for classes without ground-truth pixels.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm);
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm);

}  // namespace cavparse::metrics
