#pragma once

#include "nlvn/matrix.hpp"

#include <vector>

namespace nlvn {

// Eigendecomposition result. `vectors` holds one normalized eigenvector per
// eigenvalue, stored as columns: vectors[k] pairs with values[k].
struct EigenSystem {
  std::vector<cplx> values;
  std::vector<CVector> vectors;
  bool hermitian_input = false;
};

// Hermitian solve. The input is certified against its Hermiticity defect,
// symmetrized, and handed to the dense solver. Eigenvalues come back real
// (zero imaginary part) in ascending order with an orthonormal basis.
// Throws std::invalid_argument if the defect is too large to symmetrize away.
EigenSystem herm_eig(const CMatrix& m);

// General (non-Hermitian) solve. Eigenvalues are sorted lexicographically by
// (real, imag). Within a cluster of numerically equal eigenvalues the
// returned vectors are orthonormalized; if the cluster's geometric
// multiplicity falls short (a defective matrix), throws std::runtime_error.
EigenSystem general_eig(const CMatrix& m);

// exp(-i * s * M) for Hermitian M, via the spectral decomposition.
CMatrix matexp_hermitian_phase(const CMatrix& m, double s);

// V diag(exp(c * lambda_k)) V^dagger for Hermitian M with arbitrary complex c.
CMatrix herm_exp(const CMatrix& m, cplx c);

// Partial trace of a (d1*d2)x(d1*d2) matrix over the slot NOT kept.
// Index convention: row = i1*d2 + i2 (slot 1 major). keep must be 1 or 2.
CMatrix partial_trace(const CMatrix& m, std::size_t d1, std::size_t d2, int keep);

// Dense inverse via Gauss-Jordan with partial pivoting. Intended for the
// small projector cores (r x r with r = transformation rank). Throws
// std::runtime_error on a singular pivot.
CMatrix inverse(const CMatrix& m);

} // namespace nlvn
