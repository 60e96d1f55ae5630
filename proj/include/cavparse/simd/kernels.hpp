#pragma once

// Data-parallel inner loops shared by the pipeline. Every kernel has a scalar
// reference implementation and optional vector variants; variants are
// required to be bit-identical to the reference (no FMA contraction, and the
// scalar reductions follow the same 4-lane blocked summation order), so the
// selected instruction set never changes a trained model.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace cavparse::simd {

struct SlicCenter {
  float l = 0, a = 0, b = 0, x = 0, y = 0;
};

// One row segment of a SLIC search window. x of element i is x0 + i.
struct SlicSpan {
  const float* l = nullptr;
  const float* a = nullptr;
  const float* b = nullptr;
  std::size_t count = 0;
  float x0 = 0;
  float y = 0;
  float* best = nullptr;
  std::int32_t* label = nullptr;
};

struct KernelTable {
  const char* name;

  // dist = (dl^2 + da^2 + db^2) + (dx^2 + dy^2) * spatial_weight; where
  // dist < best[i] strictly, best[i] = dist and label[i] = cluster.
  void (*slic_assign)(const SlicSpan& span, const SlicCenter& center, float spatial_weight,
                      std::int32_t cluster);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // Blocked dot product: four interleaved partial sums combined as
  // (s0 + s1) + (s2 + s3), then the tail added in order.
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y = bias + x^T W, W row-major (in x out), accumulated row by row.
  void (*affine)(const double* x, std::size_t in, const double* w, const double* bias,
                 std::size_t out, double* y);
};

const KernelTable& scalar_kernels();

// Tables compiled into this binary whose instruction set the host supports,
// scalar first.
std::vector<const KernelTable*> available_kernels();

// Currently selected table. First use picks the widest available set, unless
// CAVPARSE_SIMD names one ("scalar", "avx2", "neon").
const KernelTable& active_kernels();

// Returns false if `name` is unknown or unsupported on this host.
bool select_kernels(std::string_view name);

}  // namespace cavparse::simd
