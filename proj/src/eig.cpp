#include "nlvn/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace nlvn {

namespace {

std::vector<CVector> columns_of(const std::vector<cplx>& a, std::size_t n) {
  std::vector<CVector> cols(n, CVector(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = a[i * n + j];
  return cols;
}

// Orthonormalize the vectors of one eigenvalue cluster in place. Returns
// false when a vector collapses under projection, i.e. the cluster has fewer
// independent directions than members.
bool orthonormalize_cluster(std::vector<CVector>& vecs, std::size_t begin, std::size_t end) {
  for (std::size_t k = begin; k < end; ++k) {
    CVector& v = vecs[k];
    for (std::size_t p = begin; p < k; ++p) {
      cplx c = vdot(vecs[p], v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * vecs[p][i];
    }
    double n = vnorm(v);
    if (n < 1e-6) return false;
    for (auto& x : v) x /= n;
  }
  return true;
}

} // namespace

EigenSystem herm_eig(const CMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw std::invalid_argument("herm_eig: empty matrix");
  double scale = fro_norm(m);
  if (m.hermiticity_defect() > 1e-8 * (scale > 0.0 ? scale : 1.0))
    throw std::invalid_argument("herm_eig: input is not Hermitian");

  CMatrix sym = hermitize(m);
  std::vector<cplx> a(sym.data(), sym.data() + sym.size());
  std::vector<double> w(n);
  lapack_int info = LAPACKE_zheev(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                  a.data(), static_cast<lapack_int>(n), w.data());
  if (info != 0) throw std::runtime_error("herm_eig: zheev failed");

  EigenSystem out;
  out.hermitian_input = true;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = cplx(w[k], 0.0);
  out.vectors = columns_of(a, n);
  return out;
}

EigenSystem general_eig(const CMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw std::invalid_argument("general_eig: empty matrix");
  std::vector<cplx> a(m.data(), m.data() + m.size());
  std::vector<cplx> w(n);
  std::vector<cplx> vl(n * n); // untouched with jobvl='N', sized defensively
  std::vector<cplx> vr(n * n);
  lapack_int info = LAPACKE_zgeev(LAPACK_ROW_MAJOR, 'N', 'V', static_cast<lapack_int>(n),
                                  a.data(), static_cast<lapack_int>(n), w.data(),
                                  vl.data(), static_cast<lapack_int>(n),
                                  vr.data(), static_cast<lapack_int>(n));
  if (info != 0) throw std::runtime_error("general_eig: zgeev failed");

  double wmax = 0.0;
  for (const auto& v : w) wmax = std::max(wmax, std::abs(v));
  const double tol = 1e-8 * std::max(1.0, wmax);

  // Lexicographic (re, im) with a tolerance band on the real part, so that
  // rounding noise in coinciding real parts cannot scramble the imag order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return w[i].real() < w[j].real();
  });
  std::size_t lo = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k == n || w[order[k]].real() - w[order[k - 1]].real() > tol) {
      std::sort(order.begin() + lo, order.begin() + k, [&](std::size_t i, std::size_t j) {
        if (w[i].imag() != w[j].imag()) return w[i].imag() < w[j].imag();
        return w[i].real() < w[j].real();
      });
      lo = k;
    }
  }

  auto cols = columns_of(vr, n);
  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = w[order[k]];
    out.vectors[k] = std::move(cols[order[k]]);
  }

  std::size_t begin = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k == n || std::abs(out.values[k] - out.values[begin]) > tol) {
      if (!orthonormalize_cluster(out.vectors, begin, k))
        throw std::runtime_error("general_eig: defective eigenvalue cluster");
      begin = k;
    }
  }
  return out;
}

CMatrix herm_exp(const CMatrix& m, cplx c) {
  EigenSystem es = herm_eig(m);
  const std::size_t n = m.dim();
  CMatrix vmat(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) vmat.at(i, j) = es.vectors[j][i];
  CVector d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = std::exp(c * es.values[k].real());
  return vmat * CMatrix::diag(d) * adjoint(vmat);
}

CMatrix matexp_hermitian_phase(const CMatrix& m, double s) {
  return herm_exp(m, cplx(0.0, -s));
}

CMatrix partial_trace(const CMatrix& m, std::size_t d1, std::size_t d2, int keep) {
  if (m.dim() != d1 * d2) throw std::invalid_argument("partial_trace: dimension mismatch");
  if (keep != 1 && keep != 2) throw std::invalid_argument("partial_trace: keep must be 1 or 2");
  if (keep == 1) {
    CMatrix out(d1);
    for (std::size_t i1 = 0; i1 < d1; ++i1)
      for (std::size_t j1 = 0; j1 < d1; ++j1) {
        cplx acc(0.0, 0.0);
        for (std::size_t i2 = 0; i2 < d2; ++i2)
          acc += m.at(i1 * d2 + i2, j1 * d2 + i2);
        out.at(i1, j1) = acc;
      }
    return out;
  }
  CMatrix out(d2);
  for (std::size_t i2 = 0; i2 < d2; ++i2)
    for (std::size_t j2 = 0; j2 < d2; ++j2) {
      cplx acc(0.0, 0.0);
      for (std::size_t i1 = 0; i1 < d1; ++i1)
        acc += m.at(i1 * d2 + i2, i1 * d2 + j2);
      out.at(i2, j2) = acc;
    }
  return out;
}

CMatrix inverse(const CMatrix& m) {
  const std::size_t n = m.dim();
  CMatrix work = m;
  CMatrix inv = CMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(work.at(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      double cand = std::abs(work.at(r, col));
      if (cand > best) { best = cand; piv = r; }
    }
    if (best < 1e-14) throw std::runtime_error("inverse: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(work.at(col, j), work.at(piv, j));
        std::swap(inv.at(col, j), inv.at(piv, j));
      }
    }
    cplx d = work.at(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      work.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      cplx f = work.at(r, col);
      if (f == cplx(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        work.at(r, j) -= f * work.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

} // namespace nlvn
