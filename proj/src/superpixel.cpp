#include "cavparse/superpixel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include "cavparse/simd/kernels.hpp"

namespace cavparse::superpixel {
namespace {

const std::array<double, 256>& srgb_linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct LabPlanes {
  std::vector<float> l, a, b;
};

LabPlanes to_lab(const RasterImage& image) {
  LabPlanes planes;
  planes.l.resize(image.size());
  planes.a.resize(image.size());
  planes.b.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    srgb_to_lab(image[i], planes.l[i], planes.a[i], planes.b[i]);
  }
  return planes;
}

// Splits every label into 4-connected components, keeps the largest
// component of each label and any fragment of at least a quarter of the
// label's pixels, and merges the remaining fragments into the neighbouring
// segment with which they share the longest border.
std::vector<std::int32_t> repair_connectivity(int width, int height,
                                              const std::vector<std::int32_t>& labels) {
  const std::size_t n = labels.size();
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::int32_t> comp_label;
  std::vector<std::int64_t> comp_size;
  std::vector<std::size_t> queue;
  queue.reserve(n);
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(comp_label.size());
    const std::int32_t label = labels[start];
    comp_label.push_back(label);
    queue.clear();
    queue.push_back(start);
    comp[start] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      const int x = static_cast<int>(p % width);
      const int y = static_cast<int>(p / width);
      auto visit = [&](std::size_t q) {
        if (comp[q] < 0 && labels[q] == label) {
          comp[q] = id;
          queue.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < width) visit(p + 1);
      if (y > 0) visit(p - width);
      if (y + 1 < height) visit(p + width);
    }
    comp_size.push_back(static_cast<std::int64_t>(queue.size()));
  }

  const std::size_t comps = comp_label.size();
  std::map<std::int32_t, std::int64_t> label_total;
  std::map<std::int32_t, std::int32_t> primary;
  for (std::size_t c = 0; c < comps; ++c) {
    label_total[comp_label[c]] += comp_size[c];
    auto [it, inserted] = primary.emplace(comp_label[c], static_cast<std::int32_t>(c));
    if (!inserted && comp_size[c] > comp_size[it->second]) it->second = static_cast<std::int32_t>(c);
  }

  std::vector<std::int32_t> root(comps, -1);
  std::vector<std::int32_t> orphans;
  for (std::size_t c = 0; c < comps; ++c) {
    const bool is_primary = primary[comp_label[c]] == static_cast<std::int32_t>(c);
    if (is_primary || comp_size[c] * 4 >= label_total[comp_label[c]]) {
      root[c] = static_cast<std::int32_t>(c);
    } else {
      orphans.push_back(static_cast<std::int32_t>(c));
    }
  }
  if (orphans.empty()) return comp;

  std::vector<std::map<std::int32_t, std::int64_t>> border(comps);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      auto touch = [&](std::size_t q) {
        if (comp[p] != comp[q]) {
          ++border[comp[p]][comp[q]];
          ++border[comp[q]][comp[p]];
        }
      };
      if (x + 1 < width) touch(p + 1);
      if (y + 1 < height) touch(p + width);
    }
  }

  while (!orphans.empty()) {
    std::vector<std::int32_t> pending;
    for (std::int32_t c : orphans) {
      std::map<std::int32_t, std::int64_t> by_root;
      for (const auto& [neighbor, length] : border[c]) {
        if (root[neighbor] >= 0) by_root[root[neighbor]] += length;
      }
      if (by_root.empty()) {
        pending.push_back(c);
        continue;
      }
      std::int32_t best = -1;
      std::int64_t best_len = -1;
      for (const auto& [r, length] : by_root) {
        if (length > best_len) {
          best = r;
          best_len = length;
        }
      }
      root[c] = best;
    }
    orphans.swap(pending);
  }

  for (std::size_t p = 0; p < n; ++p) comp[p] = root[comp[p]];
  return comp;
}

}  // namespace

void srgb_to_lab(Rgb rgb, float& l, float& a, float& b) {
  const auto& lin = srgb_linear_table();
  const double r = lin[rgb.r], g = lin[rgb.g], bl = lin[rgb.b];
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * bl) / 0.95047;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * bl;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * bl) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  l = static_cast<float>(116.0 * fy - 16.0);
  a = static_cast<float>(500.0 * (fx - fy));
  b = static_cast<float>(200.0 * (fy - fz));
}

SuperpixelMap slic_segment(const RasterImage& image, const SlicParams& params) {
  if (image.width() < 1 || image.height() < 1 || image.empty()) {
    throw InvalidInput("slic_segment: image smaller than 1x1");
  }
  const int width = image.width();
  const int height = image.height();
  const auto pixels = static_cast<std::int64_t>(image.size());
  if (params.target_count < 1) throw InvalidInput("slic_segment: target_count must be >= 1");
  if (params.target_count > pixels) {
    throw InvalidInput("slic_segment: target_count " + std::to_string(params.target_count) +
                       " exceeds pixel count " + std::to_string(pixels));
  }
  if (params.iterations < 1) throw InvalidInput("slic_segment: iterations must be >= 1");
  if (!(params.compactness >= 0.0) || !std::isfinite(params.compactness)) {
    throw InvalidInput("slic_segment: compactness must be finite and >= 0");
  }

  const int k = params.target_count;
  const double aspect = static_cast<double>(width) / height;
  const int nx = std::clamp(static_cast<int>(std::lround(std::sqrt(k * aspect))), 1, std::min(width, k));
  const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / nx)), 1, height);
  const double cell_w = static_cast<double>(width) / nx;
  const double cell_h = static_cast<double>(height) / ny;
  const double step = std::sqrt(cell_w * cell_h);
  const double radius = std::max(cell_w, cell_h);
  const auto spatial_weight =
      static_cast<float>((params.compactness / step) * (params.compactness / step));

  const LabPlanes lab = to_lab(image);
  const int clusters = nx * ny;
  std::vector<simd::SlicCenter> centers(clusters);
  std::vector<std::int32_t> labels(image.size());
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx) {
      auto& c = centers[gy * nx + gx];
      c.x = static_cast<float>((gx + 0.5) * cell_w);
      c.y = static_cast<float>((gy + 0.5) * cell_h);
      const int px = std::min(width - 1, static_cast<int>(c.x));
      const int py = std::min(height - 1, static_cast<int>(c.y));
      const std::size_t p = static_cast<std::size_t>(py) * width + px;
      c.l = lab.l[p];
      c.a = lab.a[p];
      c.b = lab.b[p];
    }
  }
  for (int y = 0; y < height; ++y) {
    const int gy = std::min(ny - 1, static_cast<int>(y / cell_h));
    for (int x = 0; x < width; ++x) {
      const int gx = std::min(nx - 1, static_cast<int>(x / cell_w));
      labels[static_cast<std::size_t>(y) * width + x] = gy * nx + gx;
    }
  }

  const simd::KernelTable& kernels = simd::active_kernels();
  std::vector<float> best(image.size());
  std::vector<double> sums(static_cast<std::size_t>(clusters) * 5);
  std::vector<std::int64_t> members(clusters);
  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<float>::infinity());
    std::vector<std::int32_t> next = labels;
    for (int c = 0; c < clusters; ++c) {
      const auto& center = centers[c];
      const int x_lo = std::max(0, static_cast<int>(std::floor(center.x - radius)));
      const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(center.x + radius)));
      const int y_lo = std::max(0, static_cast<int>(std::floor(center.y - radius)));
      const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(center.y + radius)));
      if (x_lo > x_hi || y_lo > y_hi) continue;
      for (int y = y_lo; y <= y_hi; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * width + x_lo;
        simd::SlicSpan span;
        span.l = lab.l.data() + row;
        span.a = lab.a.data() + row;
        span.b = lab.b.data() + row;
        span.count = static_cast<std::size_t>(x_hi - x_lo + 1);
        span.x0 = static_cast<float>(x_lo) + 0.5f;
        span.y = static_cast<float>(y) + 0.5f;
        span.best = best.data() + row;
        span.label = next.data() + row;
        kernels.slic_assign(span, center, spatial_weight, c);
      }
    }
    labels.swap(next);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * width + x;
        double* s = &sums[static_cast<std::size_t>(labels[p]) * 5];
        s[0] += lab.l[p];
        s[1] += lab.a[p];
        s[2] += lab.b[p];
        s[3] += x + 0.5;
        s[4] += y + 0.5;
        ++members[labels[p]];
      }
    }
    for (int c = 0; c < clusters; ++c) {
      if (members[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(members[c]);
      const double* s = &sums[static_cast<std::size_t>(c) * 5];
      centers[c] = simd::SlicCenter{static_cast<float>(s[0] * inv), static_cast<float>(s[1] * inv),
                                    static_cast<float>(s[2] * inv), static_cast<float>(s[3] * inv),
                                    static_cast<float>(s[4] * inv)};
    }
  }

  return from_assignment(width, height, repair_connectivity(width, height, labels));
}

SuperpixelMap from_assignment(int width, int height, std::vector<std::int32_t> assignment) {
  if (width < 1 || height < 1 || assignment.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInput("from_assignment: assignment size does not match dimensions");
  }
  std::map<std::int32_t, std::int32_t> renumber;
  for (auto& id : assignment) {
    auto [it, inserted] = renumber.emplace(id, static_cast<std::int32_t>(renumber.size()));
    id = it->second;
  }
  SuperpixelMap spmap;
  spmap.width = width;
  spmap.height = height;
  spmap.assignment = std::move(assignment);
  spmap.count = static_cast<int>(renumber.size());
  compute_stats(spmap);
  build_adjacency(spmap);
  return spmap;
}

void compute_stats(SuperpixelMap& spmap) {
  spmap.pixel_count.assign(spmap.count, 0);
  std::vector<double> sx(spmap.count, 0.0), sy(spmap.count, 0.0);
  for (int y = 0; y < spmap.height; ++y) {
    for (int x = 0; x < spmap.width; ++x) {
      const std::int32_t id = spmap.at(x, y);
      ++spmap.pixel_count[id];
      sx[id] += x + 0.5;
      sy[id] += y + 0.5;
    }
  }
  spmap.centroid.assign(spmap.count, Centroid{});
  for (int i = 0; i < spmap.count; ++i) {
    if (spmap.pixel_count[i] == 0) continue;
    const auto n = static_cast<double>(spmap.pixel_count[i]);
    spmap.centroid[i] = Centroid{sx[i] / n, sy[i] / n};
  }
}

void build_adjacency(SuperpixelMap& spmap) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (int y = 0; y < spmap.height; ++y) {
    for (int x = 0; x < spmap.width; ++x) {
      const std::int32_t a = spmap.at(x, y);
      if (x + 1 < spmap.width && spmap.at(x + 1, y) != a) {
        pairs.emplace_back(a, spmap.at(x + 1, y));
      }
      if (y + 1 < spmap.height && spmap.at(x, y + 1) != a) {
        pairs.emplace_back(a, spmap.at(x, y + 1));
      }
    }
  }
  spmap.adjacency.assign(spmap.count, {});
  for (const auto& [a, b] : pairs) {
    spmap.adjacency[a].push_back(b);
    spmap.adjacency[b].push_back(a);
  }
  for (auto& list : spmap.adjacency) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

int block_of_point(double cx, double cy, int width, int height, int grid_side) {
  if (grid_side < 1) throw InvalidInput("assign_blocks: grid_side must be >= 1");
  const int bx = std::clamp(static_cast<int>(std::floor(cx * grid_side / width)), 0, grid_side - 1);
  const int by = std::clamp(static_cast<int>(std::floor(cy * grid_side / height)), 0, grid_side - 1);
  return by * grid_side + bx;
}

BlockGrid assign_blocks(const SuperpixelMap& spmap, int grid_side) {
  if (grid_side < 1) throw InvalidInput("assign_blocks: grid_side must be >= 1");
  BlockGrid grid;
  grid.grid_side = grid_side;
  grid.block_of.resize(spmap.count);
  for (int i = 0; i < spmap.count; ++i) {
    grid.block_of[i] =
        block_of_point(spmap.centroid[i].x, spmap.centroid[i].y, spmap.width, spmap.height, grid_side);
  }
  return grid;
}

bool is_total_partition(const SuperpixelMap& spmap) {
  if (spmap.assignment.size() != static_cast<std::size_t>(spmap.width) * spmap.height) return false;
  if (static_cast<int>(spmap.pixel_count.size()) != spmap.count) return false;
  std::vector<std::int64_t> seen(spmap.count, 0);
  for (std::int32_t id : spmap.assignment) {
    if (id < 0 || id >= spmap.count) return false;
    ++seen[id];
  }
  std::int64_t total = 0;
  for (int i = 0; i < spmap.count; ++i) {
    if (seen[i] < 1 || seen[i] != spmap.pixel_count[i]) return false;
    total += seen[i];
  }
  return total == static_cast<std::int64_t>(spmap.assignment.size());
}

bool is_adjacency_symmetric(const SuperpixelMap& spmap) {
  if (static_cast<int>(spmap.adjacency.size()) != spmap.count) return false;
  for (int a = 0; a < spmap.count; ++a) {
    for (std::int32_t b : spmap.adjacency[a]) {
      if (b == a || b < 0 || b >= spmap.count) return false;
      const auto& back = spmap.adjacency[b];
      if (!std::binary_search(back.begin(), back.end(), a)) return false;
    }
  }
  return true;
}

bool is_four_connected(const SuperpixelMap& spmap) {
  const std::size_t n = spmap.assignment.size();
  std::vector<char> visited(n, 0);
  std::vector<char> started(spmap.count, 0);
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    const std::int32_t id = spmap.assignment[start];
    if (started[id]) continue;
    started[id] = 1;
    queue.assign(1, start);
    visited[start] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      const int x = static_cast<int>(p % spmap.width);
      const int y = static_cast<int>(p / spmap.width);
      auto visit = [&](std::size_t q) {
        if (!visited[q] && spmap.assignment[q] == id) {
          visited[q] = 1;
          queue.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < spmap.width) visit(p + 1);
      if (y > 0) visit(p - spmap.width);
      if (y + 1 < spmap.height) visit(p + spmap.width);
    }
    if (static_cast<std::int64_t>(queue.size()) != spmap.pixel_count[id]) return false;
  }
  return true;
}

}  // namespace cavparse::superpixel
