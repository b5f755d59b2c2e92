#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

#include "nlvn/kernels.hpp"

namespace nlvn {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

// Relative Frobenius defect below which a matrix counts as Hermitian.
inline constexpr double kHermTol = 1e-12;

// Dense square complex matrix, row-major. Arithmetic goes through the
// kernel layer. A Hermiticity certificate is computed on demand and cached;
// any mutable access drops the cache.
class CMatrix {
public:
  CMatrix() = default;
  explicit CMatrix(std::size_t n) : n_(n), a_(n * n, cplx(0.0, 0.0)) {}
  CMatrix(std::size_t n, std::vector<cplx> data);

  static CMatrix identity(std::size_t n);
  static CMatrix diag(const CVector& d);
  static CMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows);

  std::size_t dim() const { return n_; }
  std::size_t size() const { return a_.size(); }

  const cplx& at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  cplx& at(std::size_t i, std::size_t j) {
    herm_.reset();
    return a_[i * n_ + j];
  }

  const cplx* data() const { return a_.data(); }
  cplx* mutable_data() {
    herm_.reset();
    return a_.data();
  }
  const std::vector<cplx>& storage() const { return a_; }

  // True iff ||M - M^dagger||_F <= 1e-12 * ||M||_F.
  bool hermitian() const;
  double hermiticity_defect() const;

  CMatrix& operator+=(const CMatrix& rhs);
  CMatrix& operator-=(const CMatrix& rhs);
  CMatrix& operator*=(cplx alpha);

private:
  std::size_t n_ = 0;
  std::vector<cplx> a_;
  mutable std::optional<bool> herm_;
};

CMatrix operator+(CMatrix lhs, const CMatrix& rhs);
CMatrix operator-(CMatrix lhs, const CMatrix& rhs);
CMatrix operator*(cplx alpha, CMatrix m);
CMatrix operator*(const CMatrix& a, const CMatrix& b);

CMatrix adjoint(const CMatrix& m);
// (M + M^dagger) / 2
CMatrix hermitize(const CMatrix& m);
cplx trace(const CMatrix& m);
double fro_norm(const CMatrix& m);
double max_abs(const CMatrix& m);
// a*b - b*a
CMatrix commutator(const CMatrix& a, const CMatrix& b);
// |u><v|
CMatrix outer(const CVector& u, const CVector& v);
CVector matvec(const CMatrix& m, const CVector& v);
// <u|v>, conjugate-linear in u
cplx vdot(const CVector& u, const CVector& v);
double vnorm(const CVector& v);
CVector normalized(const CVector& v);
CVector vadd(const CVector& u, const CVector& v);
CVector vscale(cplx alpha, CVector v);
double vec_distance(const CVector& u, const CVector& v);
double matrix_distance(const CMatrix& a, const CMatrix& b);

} // namespace nlvn
