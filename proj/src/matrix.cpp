#include "nlvn/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace nlvn {

CMatrix::CMatrix(std::size_t n, std::vector<cplx> data) : n_(n), a_(std::move(data)) {
  if (a_.size() != n * n)
    throw std::invalid_argument("CMatrix: data size does not match dimension");
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = cplx(1.0, 0.0);
  return m;
}

CMatrix CMatrix::diag(const CVector& d) {
  CMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
  return m;
}

CMatrix CMatrix::from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
  const std::size_t n = rows.size();
  CMatrix m(n);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n)
      throw std::invalid_argument("CMatrix: ragged initializer");
    std::size_t j = 0;
    for (const auto& v : row) m.a_[i * n + j++] = v;
    ++i;
  }
  return m;
}

double CMatrix::hermiticity_defect() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      cplx d = a_[i * n_ + j] - std::conj(a_[j * n_ + i]);
      acc += std::norm(d);
    }
  return std::sqrt(acc);
}

bool CMatrix::hermitian() const {
  if (!herm_) {
    double scale = std::sqrt(kernels::norm_sq(a_.data(), a_.size()));
    herm_ = hermiticity_defect() <= kHermTol * (scale > 0.0 ? scale : 1.0);
  }
  return *herm_;
}

CMatrix& CMatrix::operator+=(const CMatrix& rhs) {
  if (rhs.n_ != n_) throw std::invalid_argument("CMatrix: dimension mismatch");
  herm_.reset();
  kernels::axpy(a_.data(), cplx(1.0, 0.0), rhs.a_.data(), a_.size());
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& rhs) {
  if (rhs.n_ != n_) throw std::invalid_argument("CMatrix: dimension mismatch");
  herm_.reset();
  kernels::axpy(a_.data(), cplx(-1.0, 0.0), rhs.a_.data(), a_.size());
  return *this;
}

CMatrix& CMatrix::operator*=(cplx alpha) {
  herm_.reset();
  kernels::scale(a_.data(), alpha, a_.size());
  return *this;
}

CMatrix operator+(CMatrix lhs, const CMatrix& rhs) { return lhs += rhs; }
CMatrix operator-(CMatrix lhs, const CMatrix& rhs) { return lhs -= rhs; }
CMatrix operator*(cplx alpha, CMatrix m) { return m *= alpha; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("CMatrix: dimension mismatch");
  CMatrix out(a.dim());
  kernels::matmul(out.mutable_data(), a.data(), b.data(), a.dim());
  return out;
}

CMatrix adjoint(const CMatrix& m) {
  const std::size_t n = m.dim();
  CMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = std::conj(m.at(j, i));
  return out;
}

CMatrix hermitize(const CMatrix& m) {
  CMatrix out = adjoint(m);
  out += m;
  out *= cplx(0.5, 0.0);
  return out;
}

cplx trace(const CMatrix& m) {
  cplx t(0.0, 0.0);
  for (std::size_t i = 0; i < m.dim(); ++i) t += m.at(i, i);
  return t;
}

double fro_norm(const CMatrix& m) {
  return std::sqrt(kernels::norm_sq(m.data(), m.size()));
}

double max_abs(const CMatrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    best = std::max(best, std::abs(m.data()[i]));
  return best;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  CMatrix out = a * b;
  out -= b * a;
  return out;
}

CMatrix outer(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("outer: size mismatch");
  const std::size_t n = u.size();
  CMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = u[i] * std::conj(v[j]);
  return out;
}

CVector matvec(const CMatrix& m, const CVector& v) {
  if (m.dim() != v.size()) throw std::invalid_argument("matvec: size mismatch");
  const std::size_t n = v.size();
  CVector out(n, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) acc += m.at(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

cplx vdot(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("vdot: size mismatch");
  return kernels::dotc(u.data(), v.data(), u.size());
}

double vnorm(const CVector& v) {
  return std::sqrt(kernels::norm_sq(v.data(), v.size()));
}

CVector normalized(const CVector& v) {
  double n = vnorm(v);
  if (n <= 0.0) throw std::invalid_argument("normalized: zero vector");
  CVector out = v;
  kernels::scale(out.data(), cplx(1.0 / n, 0.0), out.size());
  return out;
}

CVector vadd(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("vadd: size mismatch");
  CVector out = u;
  kernels::axpy(out.data(), cplx(1.0, 0.0), v.data(), v.size());
  return out;
}

CVector vscale(cplx alpha, CVector v) {
  kernels::scale(v.data(), alpha, v.size());
  return v;
}

double vec_distance(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("vec_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += std::norm(u[i] - v[i]);
  return std::sqrt(acc);
}

double matrix_distance(const CMatrix& a, const CMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(acc);
}

} // namespace nlvn
