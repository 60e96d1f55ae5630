#include "cavparse/simd/kernels.hpp"

namespace cavparse::simd {
namespace {

void slic_assign(const SlicSpan& s, const SlicCenter& c, float spatial_weight, std::int32_t cluster) {
  for (std::size_t i = 0; i < s.count; ++i) {
    const float dl = s.l[i] - c.l;
    const float da = s.a[i] - c.a;
    const float db = s.b[i] - c.b;
    const float dx = (s.x0 + static_cast<float>(i)) - c.x;
    const float dy = s.y - c.y;
    const float color = (dl * dl + da * da) + db * db;
    const float space = dx * dx + dy * dy;
    const float dist = color + space * spatial_weight;
    if (dist < s.best[i]) {
      s.best[i] = dist;
      s.label[i] = cluster;
    }
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double sum = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void affine(const double* x, std::size_t in, const double* w, const double* bias, std::size_t out,
            double* y) {
  for (std::size_t j = 0; j < out; ++j) y[j] = bias[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    const double* row = w + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", slic_assign, axpy, dot, affine};
  return table;
}

}  // namespace cavparse::simd
