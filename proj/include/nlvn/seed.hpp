#pragma once

#include "nlvn/eig.hpp"
#include "nlvn/matrix.hpp"

#include <string>
#include <vector>

namespace nlvn {

// Eigen-data of the pencil U(0) - mu*H at the degenerate eigenvalue, plus the
// combination phi0 = A*basis[0] + B*basis[1] that drives the transformation.
struct SpectralSeed {
  cplx mu;
  cplx z;
  std::vector<CVector> basis;
  cplx A;
  cplx B;
  CVector phi0;
};

// Shifted square Delta_a = U(0)^2 - a*U(0). The closed-form evolution needs
// [Delta_a, H] = 0; `valid` records that within tolerance.
struct ShiftData {
  double a = 0.0;
  CMatrix delta;
  double commutation_defect = 0.0;
  bool valid = false;
};

struct SeedSelection {
  enum class Rule { most_degenerate, match_value, explicit_index };
  Rule rule = Rule::most_degenerate;
  cplx z0;                // match_value target
  std::size_t index = 0;  // explicit cluster index (sorted order)
};

// Cluster width for treating pencil eigenvalues as degenerate.
double seed_cluster_tol(const CMatrix& U0, const CMatrix& H, cplx mu);

// Full eigensystem of U0 - mu*H (general complex pencil).
EigenSystem solve_seed_spectrum(const CMatrix& U0, const CMatrix& H, cplx mu);

// Locates the degenerate eigenvalue per the selection rule and returns a
// canonical orthonormal basis of its eigenspace. The basis is fixed by the
// span alone: reduced row echelon form of the eigenspace, rows ordered by
// descending magnitude of the last nonzero entry (ties broken toward the
// later entry), Gram-Schmidt in that order, phases chosen so the first
// nonzero component is real positive. Throws when no eigenvalue has
// multiplicity >= 2 within cluster_tol.
std::pair<cplx, std::vector<CVector>> pick_degenerate_basis(const EigenSystem& es,
                                                            const SeedSelection& sel,
                                                            double cluster_tol);

// Parameter checks for the equally-spaced-spectrum family. Returns the names
// of all violated rules; empty means the parameter set is admissible.
std::vector<std::string> equally_spaced_violations(double a, double b, double c,
                                                   double m, double k);

// Throwing wrapper: message lists every violated rule by name.
void validate_equally_spaced_scenario(double a, double b, double c, double m, double k);

ShiftData build_shift(const CMatrix& U0, const CMatrix& H, double a);

// Builds the seed from the pencil. |A|^2+|B|^2 must be 1 within 1e-12.
SpectralSeed make_seed(const CMatrix& U0, const CMatrix& H, cplx mu,
                       const SeedSelection& sel, cplx A, cplx B);

// Same, but with an externally supplied eigenbasis (e.g. a fixture that pins
// a published convention). The hint is validated: orthonormal within 1e-10
// and an eigenpair of the pencil within the standard residual tolerance.
SpectralSeed make_seed_with_basis(const CMatrix& U0, const CMatrix& H, cplx mu,
                                  const std::vector<CVector>& basis_hint,
                                  cplx A, cplx B);

} // namespace nlvn
