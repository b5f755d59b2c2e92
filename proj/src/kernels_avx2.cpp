#include "nlvn/kernels.hpp"

#include <immintrin.h>

// One __m256d lane holds two complex<double> values in interleaved
// [re0, im0, re1, im1] layout, which is the in-memory layout of
// std::complex<double> arrays. Complex products use the classic
// movedup/permute + fmaddsub pattern.

namespace nlvn::kernels::avx2 {

namespace {

// (x0*y0, x1*y1) for packed complex pairs
inline __m256d cmul(__m256d x, __m256d y) {
  __m256d xr = _mm256_movedup_pd(x);
  __m256d xi = _mm256_permute_pd(x, 0xF);
  __m256d ys = _mm256_permute_pd(y, 0x5);
  return _mm256_fmaddsub_pd(xr, y, _mm256_mul_pd(xi, ys));
}

// (conj(x0)*y0, conj(x1)*y1)
inline __m256d cmul_conj(__m256d x, __m256d y) {
  __m256d xr = _mm256_movedup_pd(x);
  __m256d xi = _mm256_permute_pd(x, 0xF);
  __m256d ys = _mm256_permute_pd(y, 0x5);
  return _mm256_fmsubadd_pd(xr, y, _mm256_mul_pd(xi, ys));
}

} // namespace

void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n) {
  const std::size_t vec = n & ~std::size_t(1);
  for (std::size_t i = 0; i < n; ++i) {
    cplx* row = dst + i * n;
    for (std::size_t j = 0; j < vec; j += 2)
      _mm256_storeu_pd(reinterpret_cast<double*>(row + j), _mm256_setzero_pd());
    if (vec != n) row[n - 1] = cplx(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx aik = a[i * n + k];
      const cplx* brow = b + k * n;
      __m256d av = _mm256_broadcast_pd(reinterpret_cast<const __m128d*>(&aik));
      for (std::size_t j = 0; j < vec; j += 2) {
        double* out = reinterpret_cast<double*>(row + j);
        __m256d bv = _mm256_loadu_pd(reinterpret_cast<const double*>(brow + j));
        __m256d acc = _mm256_loadu_pd(out);
        _mm256_storeu_pd(out, _mm256_add_pd(acc, cmul(av, bv)));
      }
      if (vec != n) row[n - 1] += aik * brow[n - 1];
    }
  }
}

void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len) {
  const std::size_t vec = len & ~std::size_t(1);
  __m256d av = _mm256_broadcast_pd(reinterpret_cast<const __m128d*>(&alpha));
  for (std::size_t i = 0; i < vec; i += 2) {
    double* out = reinterpret_cast<double*>(y + i);
    __m256d xv = _mm256_loadu_pd(reinterpret_cast<const double*>(x + i));
    __m256d yv = _mm256_loadu_pd(out);
    _mm256_storeu_pd(out, _mm256_add_pd(yv, cmul(av, xv)));
  }
  if (vec != len) y[len - 1] += alpha * x[len - 1];
}

void scale(cplx* y, cplx alpha, std::size_t len) {
  const std::size_t vec = len & ~std::size_t(1);
  __m256d av = _mm256_broadcast_pd(reinterpret_cast<const __m128d*>(&alpha));
  for (std::size_t i = 0; i < vec; i += 2) {
    double* out = reinterpret_cast<double*>(y + i);
    __m256d yv = _mm256_loadu_pd(out);
    _mm256_storeu_pd(out, cmul(av, yv));
  }
  if (vec != len) y[len - 1] *= alpha;
}

cplx dotc(const cplx* x, const cplx* y, std::size_t len) {
  const std::size_t vec = len & ~std::size_t(1);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vec; i += 2) {
    __m256d xv = _mm256_loadu_pd(reinterpret_cast<const double*>(x + i));
    __m256d yv = _mm256_loadu_pd(reinterpret_cast<const double*>(y + i));
    acc = _mm256_add_pd(acc, cmul_conj(xv, yv));
  }
  double parts[2];
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  _mm_storeu_pd(parts, _mm_add_pd(lo, hi));
  cplx out(parts[0], parts[1]);
  if (vec != len) out += std::conj(x[len - 1]) * y[len - 1];
  return out;
}

double norm_sq(const cplx* x, std::size_t len) {
  const std::size_t vec = len & ~std::size_t(1);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vec; i += 2) {
    __m256d xv = _mm256_loadu_pd(reinterpret_cast<const double*>(x + i));
    acc = _mm256_fmadd_pd(xv, xv, acc);
  }
  double parts[2];
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  _mm_storeu_pd(parts, _mm_add_pd(lo, hi));
  double out = parts[0] + parts[1];
  if (vec != len)
    out += x[len - 1].real() * x[len - 1].real() + x[len - 1].imag() * x[len - 1].imag();
  return out;
}

} // namespace nlvn::kernels::avx2
