#include "nlvn/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace nlvn::kernels {

namespace {

Backend detect() {
#if defined(NLVN_BUILD_AVX2) && defined(__GNUC__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Backend::avx2;
#endif
  return Backend::scalar;
}

std::atomic<Backend> g_backend{detect()};

} // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

bool avx2_available() {
#if defined(NLVN_BUILD_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void force_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available())
    throw std::runtime_error("kernels: avx2 backend not available on this host");
  g_backend.store(b, std::memory_order_relaxed);
}

void reset_backend() { g_backend.store(detect(), std::memory_order_relaxed); }

void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n) {
#if defined(NLVN_BUILD_AVX2)
  if (active_backend() == Backend::avx2) return avx2::matmul(dst, a, b, n);
#endif
  scalar::matmul(dst, a, b, n);
}

void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len) {
#if defined(NLVN_BUILD_AVX2)
  if (active_backend() == Backend::avx2) return avx2::axpy(y, alpha, x, len);
#endif
  scalar::axpy(y, alpha, x, len);
}

void scale(cplx* y, cplx alpha, std::size_t len) {
#if defined(NLVN_BUILD_AVX2)
  if (active_backend() == Backend::avx2) return avx2::scale(y, alpha, len);
#endif
  scalar::scale(y, alpha, len);
}

cplx dotc(const cplx* x, const cplx* y, std::size_t len) {
#if defined(NLVN_BUILD_AVX2)
  if (active_backend() == Backend::avx2) return avx2::dotc(x, y, len);
#endif
  return scalar::dotc(x, y, len);
}

double norm_sq(const cplx* x, std::size_t len) {
#if defined(NLVN_BUILD_AVX2)
  if (active_backend() == Backend::avx2) return avx2::norm_sq(x, len);
#endif
  return scalar::norm_sq(x, len);
}

} // namespace nlvn::kernels
