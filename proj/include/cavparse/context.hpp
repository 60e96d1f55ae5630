#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cavparse/image.hpp"
#include "cavparse/prob.hpp"
#include "cavparse/superpixel.hpp"

namespace cavparse::context {

// Marks a superpixel excluded from co-occurrence counting.
inline constexpr int kNoClass = -1;

// One training image as seen by the prior estimator.
struct OcpImage {
  const superpixel::SuperpixelMap& spmap;
  const superpixel::BlockGrid& blocks;
  std::span<const int> classes;  // per superpixel ground-truth class or kNoClass
};

// Raw co-occurrence counts before smoothing.
struct OcpCounts {
  int class_count = 0;
  int grid_side = 0;
  std::vector<std::uint64_t> local;        // [a][b]
  std::vector<std::uint64_t> global;       // [block_a][a][block_b][b]
  std::vector<std::uint64_t> block_class;  // [block][class]

  OcpCounts() = default;
  OcpCounts(int m, int g);
  OcpCounts& operator+=(const OcpCounts& other);
};

// Smoothed object co-occurrence priors.
struct OcpModel {
  int class_count = 0;
  int grid_side = 0;
  double smoothing_alpha = 0;
  std::vector<double> local;        // M x M, row-stochastic
  std::vector<double> global;       // B x M x B x M, last axis stochastic
  std::vector<double> block_prior;  // B x M, per-block class distribution

  int blocks() const { return grid_side * grid_side; }

  std::span<const double> local_row(int a) const {
    return {local.data() + static_cast<std::size_t>(a) * class_count, static_cast<std::size_t>(class_count)};
  }
  std::span<const double> global_row(int source_block, int source_class, int target_block) const {
    const std::size_t m = class_count;
    const std::size_t b = blocks();
    const std::size_t offset = ((source_block * m + source_class) * b + target_block) * m;
    return {global.data() + offset, m};
  }
  std::span<const double> block_row(int block) const {
    return {block_prior.data() + static_cast<std::size_t>(block) * class_count,
            static_cast<std::size_t>(class_count)};
  }

  friend bool operator==(const OcpModel&, const OcpModel&) = default;
};

struct CavFeatures {
  ProbVector v_local;
  ProbVector v_global;
};

// Majority ground-truth class per superpixel over non-ignored pixels; ties go
// to the lowest class; kNoClass when every pixel is ignored.
std::vector<int> majority_classes(const superpixel::SuperpixelMap& spmap, const LabelMap& labels,
                                  int class_count);

// Local: one count per ordered adjacent pair. Global: one count per ordered
// pair of distinct superpixels in the same image. block_class: one count per
// labelled superpixel.
OcpCounts count_cooccurrence(std::span<const OcpImage> training, int class_count, int grid_side,
                             unsigned workers = 1);

OcpModel smooth_counts(const OcpCounts& counts, double alpha);

OcpModel estimate_ocp(std::span<const OcpImage> training, int class_count, int grid_side, double alpha,
                      unsigned workers = 1);

// Pixel-count weighted OCP rows of the neighbours' predicted classes.
ProbVector local_vote(int j, std::span<const int> predicted, const superpixel::SuperpixelMap& spmap,
                      const OcpModel& ocp);

// Pixel-count weighted block-conditioned rows of every other superpixel.
ProbVector global_vote(int j, std::span<const int> predicted, const superpixel::SuperpixelMap& spmap,
                       const superpixel::BlockGrid& blocks, const OcpModel& ocp);

std::vector<CavFeatures> compute_votes(std::span<const int> predicted,
                                       const superpixel::SuperpixelMap& spmap,
                                       const superpixel::BlockGrid& blocks, const OcpModel& ocp);

// Normalized elementwise mean.
ProbVector fuse_context(std::span<const double> v_local, std::span<const double> v_global);

void validate(const OcpModel& ocp);

}  // namespace cavparse::context
