// Compiled with -mavx2 (and deliberately without -mfma).
#include <immintrin.h>

#include "cavparse/simd/kernels.hpp"

namespace cavparse::simd {
namespace {

void slic_assign(const SlicSpan& s, const SlicCenter& c, float spatial_weight, std::int32_t cluster) {
  const __m256 cl = _mm256_set1_ps(c.l);
  const __m256 ca = _mm256_set1_ps(c.a);
  const __m256 cb = _mm256_set1_ps(c.b);
  const __m256 cx = _mm256_set1_ps(c.x);
  const float dyf = s.y - c.y;
  const __m256 dy2 = _mm256_set1_ps(dyf * dyf);
  const __m256 sw = _mm256_set1_ps(spatial_weight);
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256i id = _mm256_set1_epi32(cluster);
  std::size_t i = 0;
  for (; i + 8 <= s.count; i += 8) {
    const __m256 dl = _mm256_sub_ps(_mm256_loadu_ps(s.l + i), cl);
    const __m256 da = _mm256_sub_ps(_mm256_loadu_ps(s.a + i), ca);
    const __m256 db = _mm256_sub_ps(_mm256_loadu_ps(s.b + i), cb);
    const __m256 xs = _mm256_add_ps(_mm256_set1_ps(s.x0), _mm256_add_ps(_mm256_set1_ps(static_cast<float>(i)), lane));
    const __m256 dx = _mm256_sub_ps(xs, cx);
    const __m256 color =
        _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(dl, dl), _mm256_mul_ps(da, da)), _mm256_mul_ps(db, db));
    const __m256 space = _mm256_add_ps(_mm256_mul_ps(dx, dx), dy2);
    const __m256 dist = _mm256_add_ps(color, _mm256_mul_ps(space, sw));
    const __m256 best = _mm256_loadu_ps(s.best + i);
    const __m256 less = _mm256_cmp_ps(dist, best, _CMP_LT_OQ);
    _mm256_storeu_ps(s.best + i, _mm256_blendv_ps(best, dist, less));
    const __m256i old = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(s.label + i));
    const __m256i upd = _mm256_blendv_epi8(old, id, _mm256_castps_si256(less));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(s.label + i), upd);
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
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void affine(const double* x, std::size_t in, const double* w, const double* bias, std::size_t out,
            double* y) {
  for (std::size_t j = 0; j < out; ++j) y[j] = bias[j];
  for (std::size_t i = 0; i < in; ++i) axpy(x[i], w + i * out, y, out);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2", slic_assign, axpy, dot, affine};
  return table;
}

}  // namespace cavparse::simd
