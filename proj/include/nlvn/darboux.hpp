#pragma once

#include "nlvn/matrix.hpp"
#include "nlvn/seed.hpp"

#include <cstddef>

namespace nlvn {

// Idempotent (generally non-Hermitian) projector driving one binary
// transformation, together with the spectral parameters it was built from.
struct Projector {
  CMatrix P;
  cplx mu;
  cplx nu;
  std::size_t rank = 0;
  CVector source_vector; // rank-1 path only
};

// One transformation record U -> U + (mu-nu)[P,H].
struct DarbouxStep {
  Projector projector;
  CMatrix U_in;
  CMatrix U_out;
  CMatrix H;
  std::size_t iteration_index = 0;
};

struct LemmaReport {
  double lemma1 = 0.0; // static square identity; needs P aligned with the pencil eigenspace
  double lemma2 = 0.0; // U[1]^2 - U^2 + (mu-nu)*i*P_dot
  double lemma3 = 0.0; // idempotence of U[1] given U^2 = U and linear P_dot
  // Precondition defects, reported so violated assumptions are visible.
  double u_idempotency_defect = 0.0;
  double pdot_linearity_defect = 0.0;
};

// P = |phi><phi| / <phi|phi>. Rejects zero vectors and the trivial case of
// real mu on the Hermitian branch nu = conj(mu).
Projector build_projector_rank1(const CVector& phi, cplx mu, cplx nu);

// Biorthogonal rank-1 projector P = |phi><chi_row| / (chi_row . phi) for
// independent solutions of the direct (mu) and conjugate (nu) problems.
// chi_row pairs bilinearly with phi, no conjugation.
Projector build_projector_pair(const CVector& phi, const CVector& chi_row,
                               cplx mu, cplx nu);

// P = phi (p chi phi p)^{-1} chi with the inverse taken in the p-invariant
// subspace. p must be idempotent; the restricted core must be invertible
// above the degeneracy floor.
Projector build_projector_general(const CMatrix& phi_block, const CMatrix& chi_block,
                                  const CMatrix& p, cplx mu, cplx nu);

// U + (mu-nu)[P,H].
CMatrix transform_potential(const CMatrix& U, const CMatrix& H, const Projector& proj);

// Row covector transform psi(1 - ((nu-mu)/(lambda-mu)) P). lambda = mu is a pole.
CVector transform_wavefunction(const CVector& psi_row, cplx lambda, const Projector& proj);

// || i*P_dot - (V - mu J)P + P(V - nu J) - (mu-nu) P J P ||_F
double master_residual(const Projector& proj, const CMatrix& P_dot,
                       const CMatrix& V, const CMatrix& J);

// || [ P_perp (U - mu H) P - P (U - nu H) P_perp , H^2 ] ||_F
double constraint_hereditary_residual(const CMatrix& U, const CMatrix& H,
                                      const Projector& proj);

// Residuals of the three stationary-projector identities. P_dot is the time
// derivative of P (finite-difference or the master-equation right side).
LemmaReport lemma_checks(const CMatrix& U, const CMatrix& H, const Projector& proj,
                         const CMatrix& P_dot);

// First transformation from a solved seed.
DarbouxStep first_step(const CMatrix& U0, const CMatrix& H, const SpectralSeed& seed);

// Next step in a chain: builds the projector from next_seed (which must have
// been solved against step.U_out) and transforms step.U_out.
DarbouxStep iterate_darboux(const DarbouxStep& step, const SpectralSeed& next_seed);

// Seed picker for iterated steps: among the eigenvectors of U_prev - mu*H,
// returns the one whose projector couples most strongly to H (largest
// ||[P,H]||_F), so the next transformation is maximally nontrivial.
CVector pick_iteration_seed(const CMatrix& U_prev, const CMatrix& H, cplx mu);

} // namespace nlvn
