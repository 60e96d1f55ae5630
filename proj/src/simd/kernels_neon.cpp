#include <arm_neon.h>

#include "cavparse/simd/kernels.hpp"

namespace cavparse::simd {
namespace {

void slic_assign(const SlicSpan& s, const SlicCenter& c, float spatial_weight, std::int32_t cluster) {
  const float32x4_t cl = vdupq_n_f32(c.l);
  const float32x4_t ca = vdupq_n_f32(c.a);
  const float32x4_t cb = vdupq_n_f32(c.b);
  const float32x4_t cx = vdupq_n_f32(c.x);
  const float dyf = s.y - c.y;
  const float32x4_t dy2 = vdupq_n_f32(dyf * dyf);
  const float32x4_t sw = vdupq_n_f32(spatial_weight);
  const float lane_init[4] = {0, 1, 2, 3};
  const float32x4_t lane = vld1q_f32(lane_init);
  const int32x4_t id = vdupq_n_s32(cluster);
  std::size_t i = 0;
  for (; i + 4 <= s.count; i += 4) {
    const float32x4_t dl = vsubq_f32(vld1q_f32(s.l + i), cl);
    const float32x4_t da = vsubq_f32(vld1q_f32(s.a + i), ca);
    const float32x4_t db = vsubq_f32(vld1q_f32(s.b + i), cb);
    const float32x4_t xs = vaddq_f32(vdupq_n_f32(s.x0), vaddq_f32(vdupq_n_f32(static_cast<float>(i)), lane));
    const float32x4_t dx = vsubq_f32(xs, cx);
    const float32x4_t color = vaddq_f32(vaddq_f32(vmulq_f32(dl, dl), vmulq_f32(da, da)), vmulq_f32(db, db));
    const float32x4_t space = vaddq_f32(vmulq_f32(dx, dx), dy2);
    const float32x4_t dist = vaddq_f32(color, vmulq_f32(space, sw));
    const float32x4_t best = vld1q_f32(s.best + i);
    const uint32x4_t less = vcltq_f32(dist, best);
    vst1q_f32(s.best + i, vbslq_f32(less, dist, best));
    vst1q_s32(s.label + i, vbslq_s32(less, id, vld1q_s32(s.label + i)));
  }
  for (; i < s.count; ++i) {
    const float dl = s.l[i] - c.l;
    const float da = s.a[i] - c.a;
    const float db = s.b[i] - c.b;
    const float dx = (s.x0 + static_cast<float>(i)) - c.x;
    const float color = (dl * dl + da * da) + db * db;
    const float space = dx * dx + dyf * dyf;
    const float dist = color + space * spatial_weight;
    if (dist < s.best[i]) {
      s.best[i] = dist;
      s.label[i] = cluster;
    }
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  // Two 2-lane registers reproduce the reference's 4-lane partial sums.
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double sum = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
               (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void affine(const double* x, std::size_t in, const double* w, const double* bias, std::size_t out,
            double* y) {
  for (std::size_t j = 0; j < out; ++j) y[j] = bias[j];
  for (std::size_t i = 0; i < in; ++i) axpy(x[i], w + i * out, y, out);
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{"neon", slic_assign, axpy, dot, affine};
  return table;
}

}  // namespace cavparse::simd
