#include "nlvn/kernels.hpp"

namespace nlvn::kernels::scalar {

void matmul(cplx* dst, const cplx* a, const cplx* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cplx* row = dst + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = cplx(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx aik = a[i * n + k];
      const cplx* brow = b + k * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aik * brow[j];
    }
  }
}

void axpy(cplx* y, cplx alpha, const cplx* x, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

void scale(cplx* y, cplx alpha, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] *= alpha;
}

cplx dotc(const cplx* x, const cplx* y, std::size_t len) {
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < len; ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double norm_sq(const cplx* x, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i)
    acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return acc;
}

} // namespace nlvn::kernels::scalar
