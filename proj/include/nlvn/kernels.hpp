#pragma once

#include <complex>
#include <cstddef>

// Low-level array kernels for the dense complex linear algebra that dominates
// the integrator and residual scans. Every operation has a scalar reference
// implementation and (on x86-64 with AVX2+FMA) a vectorized variant; the
// active variant is chosen once at runtime from CPU features and can be
// overridden for equivalence testing.

namespace nlvn::kernels {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

// Backend actually executing right now.
Backend active_backend();
// True when the AVX2 variant was compiled in and the CPU supports it.
bool avx2_available();
// Test hook. Forcing an unavailable backend throws.
void force_backend(Backend b);
// Undo force_backend and return to auto-detection.
void reset_backend();

// dst = a * b, square n x n, row-major. dst must not alias a or b.
void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n);
// y += alpha * x
void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len);
// y *= alpha
void scale(cplx* y, cplx alpha, std::size_t len);
// sum_i conj(x_i) * y_i
cplx dotc(const cplx* x, const cplx* y, std::size_t len);
// sum_i |x_i|^2
double norm_sq(const cplx* x, std::size_t len);

namespace scalar {
void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len);
void scale(cplx* y, cplx alpha, std::size_t len);
cplx dotc(const cplx* x, const cplx* y, std::size_t len);
double norm_sq(const cplx* x, std::size_t len);
} // namespace scalar

#if defined(NLVN_BUILD_AVX2)
namespace avx2 {
void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len);
void scale(cplx* y, cplx alpha, std::size_t len);
cplx dotc(const cplx* x, const cplx* y, std::size_t len);
double norm_sq(const cplx* x, std::size_t len);
} // namespace avx2
#endif

} // namespace nlvn::kernels
