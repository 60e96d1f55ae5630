#include "cavparse/context.hpp"

#include <cmath>
#include <string>

#include "cavparse/parallel.hpp"
#include "cavparse/simd/kernels.hpp"

namespace cavparse::context {
namespace {

void check_predicted(std::span<const int> predicted, const superpixel::SuperpixelMap& spmap,
                     const OcpModel& ocp) {
  if (static_cast<int>(predicted.size()) != spmap.count) {
    throw InvalidInput("vote: predicted class count does not match superpixel count");
  }
  for (int c : predicted) {
    if (c < 0 || c >= ocp.class_count) throw InvalidInput("vote: predicted class out of range");
  }
}

void smooth_rows(const std::vector<std::uint64_t>& counts, std::size_t width, double alpha,
                 std::vector<double>& out) {
  out.resize(counts.size());
  for (std::size_t start = 0; start < counts.size(); start += width) {
    double total = 0;
    for (std::size_t i = 0; i < width; ++i) total += static_cast<double>(counts[start + i]) + alpha;
    for (std::size_t i = 0; i < width; ++i) {
      out[start + i] = total > 0 ? (static_cast<double>(counts[start + i]) + alpha) / total
                                 : 1.0 / static_cast<double>(width);
    }
  }
}

}  // namespace

OcpCounts::OcpCounts(int m, int g) : class_count(m), grid_side(g) {
  const std::size_t mm = m;
  const std::size_t bb = static_cast<std::size_t>(g) * g;
  local.assign(mm * mm, 0);
  global.assign(bb * mm * bb * mm, 0);
  block_class.assign(bb * mm, 0);
}

OcpCounts& OcpCounts::operator+=(const OcpCounts& other) {
  if (other.class_count != class_count || other.grid_side != grid_side) {
    throw InvalidInput("OcpCounts: shape mismatch in merge");
  }
  for (std::size_t i = 0; i < local.size(); ++i) local[i] += other.local[i];
  for (std::size_t i = 0; i < global.size(); ++i) global[i] += other.global[i];
  for (std::size_t i = 0; i < block_class.size(); ++i) block_class[i] += other.block_class[i];
  return *this;
}

std::vector<int> majority_classes(const superpixel::SuperpixelMap& spmap, const LabelMap& labels,
                                  int class_count) {
  if (labels.width() != spmap.width || labels.height() != spmap.height) {
    throw InvalidInput("majority_classes: label map does not match superpixel map");
  }
  std::vector<std::int64_t> hist(static_cast<std::size_t>(spmap.count) * class_count, 0);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const ClassId c = labels[p];
    if (c == kIgnore) continue;
    if (c >= class_count) throw InvalidInput("majority_classes: label " + std::to_string(c) + " >= M");
    ++hist[static_cast<std::size_t>(spmap.assignment[p]) * class_count + c];
  }
  std::vector<int> out(spmap.count, kNoClass);
  for (int s = 0; s < spmap.count; ++s) {
    std::int64_t best = 0;
    for (int c = 0; c < class_count; ++c) {
      const std::int64_t h = hist[static_cast<std::size_t>(s) * class_count + c];
      if (h > best) {
        best = h;
        out[s] = c;
      }
    }
  }
  return out;
}

OcpCounts count_cooccurrence(std::span<const OcpImage> training, int class_count, int grid_side,
                             unsigned workers) {
  if (training.empty()) throw InvalidInput("estimate_ocp: empty training set");
  if (class_count < 1) throw InvalidInput("estimate_ocp: class_count must be >= 1");
  if (grid_side < 1) throw InvalidInput("estimate_ocp: grid_side must be >= 1");
  const std::size_t m = class_count;
  const std::size_t nb = static_cast<std::size_t>(grid_side) * grid_side;

  std::vector<OcpCounts> per_image(training.size());
  parallel_for(training.size(), workers, [&](std::size_t t) {
    const OcpImage& img = training[t];
    if (static_cast<int>(img.classes.size()) != img.spmap.count ||
        static_cast<int>(img.blocks.block_of.size()) != img.spmap.count ||
        img.blocks.grid_side != grid_side) {
      throw InvalidInput("estimate_ocp: image " + std::to_string(t) + " has inconsistent shapes");
    }
    OcpCounts counts(class_count, grid_side);
    std::vector<std::uint64_t> hist(nb * m, 0);
    for (int s = 0; s < img.spmap.count; ++s) {
      const int a = img.classes[s];
      if (a == kNoClass) continue;
      if (a < 0 || a >= class_count) throw InvalidInput("estimate_ocp: class out of range");
      ++hist[img.blocks.block_of[s] * m + a];
      for (std::int32_t nbr : img.spmap.adjacency[s]) {
        const int b = img.classes[nbr];
        if (b == kNoClass) continue;
        ++counts.local[a * m + b];
      }
    }
    counts.block_class = hist;
    // Ordered pairs of distinct superpixels: product of the (block, class)
    // histogram with itself, minus the diagonal self-pairs.
    for (std::size_t sa = 0; sa < nb * m; ++sa) {
      if (hist[sa] == 0) continue;
      for (std::size_t sb = 0; sb < nb * m; ++sb) {
        std::uint64_t pairs = hist[sa] * hist[sb];
        if (sa == sb) pairs -= hist[sa];
        counts.global[sa * nb * m + sb] += pairs;
      }
    }
    per_image[t] = std::move(counts);
  });

  OcpCounts total(class_count, grid_side);
  for (const auto& c : per_image) total += c;
  return total;
}

OcpModel smooth_counts(const OcpCounts& counts, double alpha) {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw InvalidInput("estimate_ocp: alpha must be >= 0");
  OcpModel model;
  model.class_count = counts.class_count;
  model.grid_side = counts.grid_side;
  model.smoothing_alpha = alpha;
  const std::size_t m = counts.class_count;
  smooth_rows(counts.local, m, alpha, model.local);
  smooth_rows(counts.global, m, alpha, model.global);
  smooth_rows(counts.block_class, m, alpha, model.block_prior);
  return model;
}

OcpModel estimate_ocp(std::span<const OcpImage> training, int class_count, int grid_side, double alpha,
                      unsigned workers) {
  return smooth_counts(count_cooccurrence(training, class_count, grid_side, workers), alpha);
}

ProbVector local_vote(int j, std::span<const int> predicted, const superpixel::SuperpixelMap& spmap,
                      const OcpModel& ocp) {
  check_predicted(predicted, spmap, ocp);
  const std::size_t m = ocp.class_count;
  const auto& neighbors = spmap.adjacency.at(j);
  if (neighbors.empty()) return uniform_prob(m);
  const simd::KernelTable& k = simd::active_kernels();
  ProbVector v(m, 0.0);
  for (std::int32_t nbr : neighbors) {
    k.axpy(static_cast<double>(spmap.pixel_count[nbr]), ocp.local_row(predicted[nbr]).data(), v.data(), m);
  }
  normalize_l1(v);
  return v;
}

ProbVector global_vote(int j, std::span<const int> predicted, const superpixel::SuperpixelMap& spmap,
                       const superpixel::BlockGrid& blocks, const OcpModel& ocp) {
  check_predicted(predicted, spmap, ocp);
  const std::size_t m = ocp.class_count;
  if (spmap.count <= 1) return uniform_prob(m);
  const simd::KernelTable& k = simd::active_kernels();
  const int target_block = blocks.block_of.at(j);
  ProbVector v(m, 0.0);
  for (int s = 0; s < spmap.count; ++s) {
    if (s == j) continue;
    k.axpy(static_cast<double>(spmap.pixel_count[s]),
           ocp.global_row(blocks.block_of[s], predicted[s], target_block).data(), v.data(), m);
  }
  normalize_l1(v);
  return v;
}

std::vector<CavFeatures> compute_votes(std::span<const int> predicted,
                                       const superpixel::SuperpixelMap& spmap,
                                       const superpixel::BlockGrid& blocks, const OcpModel& ocp) {
  if (static_cast<int>(blocks.block_of.size()) != spmap.count || blocks.grid_side != ocp.grid_side) {
    throw InvalidInput("compute_votes: block grid does not match superpixel map / OCP model");
  }
  std::vector<CavFeatures> out(spmap.count);
  for (int j = 0; j < spmap.count; ++j) {
    out[j].v_local = local_vote(j, predicted, spmap, ocp);
    out[j].v_global = global_vote(j, predicted, spmap, blocks, ocp);
  }
  return out;
}

ProbVector fuse_context(std::span<const double> v_local, std::span<const double> v_global) {
  if (v_local.size() != v_global.size() || v_local.empty()) {
    throw InvalidInput("fuse_context: vector lengths differ");
  }
  ProbVector out(v_local.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (v_local[i] + v_global[i]);
  normalize_l1(out);
  return out;
}

void validate(const OcpModel& ocp) {
  const std::size_t m = ocp.class_count;
  const std::size_t b = static_cast<std::size_t>(ocp.grid_side) * ocp.grid_side;
  if (ocp.class_count < 1 || ocp.grid_side < 1 || ocp.local.size() != m * m ||
      ocp.global.size() != b * m * b * m || ocp.block_prior.size() != b * m) {
    throw InvalidInput("OCP model: inconsistent shapes");
  }
  for (const auto* table : {&ocp.local, &ocp.global, &ocp.block_prior}) {
    for (std::size_t start = 0; start < table->size(); start += m) {
      double total = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double v = (*table)[start + i];
        if (!(v >= 0) || !std::isfinite(v)) throw InvalidInput("OCP model: invalid probability");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("OCP model: row does not sum to 1");
    }
  }
}

}  // namespace cavparse::context
