#pragma once

#include <cstdint>
#include <vector>

#include "cavparse/image.hpp"

namespace cavparse::superpixel {

struct Centroid {
  // Continuous coordinates: pixel (x, y) covers [x, x+1) x [y, y+1), so a
  // superpixel covering the whole image has centroid (W/2, H/2).
  double x = 0;
  double y = 0;
};

// Total partition of an image into 4-connected superpixels.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> assignment;       // per pixel, in [0, count)
  int count = 0;
  std::vector<std::int64_t> pixel_count;      // per superpixel, >= 1
  std::vector<Centroid> centroid;              // per superpixel
  std::vector<std::vector<std::int32_t>> adjacency;  // sorted ascending, symmetric, irreflexive

  std::int32_t at(int x, int y) const { return assignment[static_cast<std::size_t>(y) * width + x]; }
};

struct BlockGrid {
  int grid_side = 0;
  std::vector<int> block_of;  // per superpixel, in [0, G^2)
};

struct SlicParams {
  int target_count = 400;
  double compactness = 10.0;
  int iterations = 10;
  std::uint64_t seed = 0;
};

// SLIC k-means over CIELAB color + position with grid initialization, then
// connectivity repair. Fills pixel counts, centroids and adjacency.
SuperpixelMap slic_segment(const RasterImage& image, const SlicParams& params);

// Builds a map from an arbitrary per-pixel labelling: ids are renumbered
// by first appearance in raster order; stats and adjacency are computed.
// Does not check connectivity.
SuperpixelMap from_assignment(int width, int height, std::vector<std::int32_t> assignment);

// Recomputes pixel counts and centroids from the assignment.
void compute_stats(SuperpixelMap& spmap);

// Fills spmap.adjacency from the assignment (4-connectivity).
void build_adjacency(SuperpixelMap& spmap);

int block_of_point(double cx, double cy, int width, int height, int grid_side);

BlockGrid assign_blocks(const SuperpixelMap& spmap, int grid_side);

// Validity checks used by tests and loaders.
bool is_total_partition(const SuperpixelMap& spmap);
bool is_adjacency_symmetric(const SuperpixelMap& spmap);
bool is_four_connected(const SuperpixelMap& spmap);

// sRGB (D65) to CIELAB.
void srgb_to_lab(Rgb rgb, float& l, float& a, float& b);

}  // namespace cavparse::superpixel
