#pragma once

#include "nlvn/eig.hpp"
#include "nlvn/matrix.hpp"
#include "nlvn/seed.hpp"
#include "nlvn/series.hpp"

#include <vector>

namespace nlvn {

enum class EvolutionKind { plain, gauge, epsilon, homogeneous };

// Everything needed to evaluate the dressed solution at arbitrary times:
// the spectral decomposition of the shifted square, the seed overlaps in
// that eigenbasis, and the frame data of the chosen equation variant.
struct EvolutionContext {
  EvolutionKind kind = EvolutionKind::plain;
  CMatrix H;       // engine Hamiltonian (epsilon-scaled for the epsilon kind)
  CMatrix H_frame; // physical Hamiltonian driving the extra epsilon frame
  CMatrix U0;
  ShiftData shift;
  SpectralSeed seed;
  double lambda_gauge = 0.0;
  double eps = 0.0;
  bool normalize = false; // homogeneous kind: report the solution / Tr U0
  double c0 = 1.0;        // homogeneous kind: coupling of the initial state
  EigenSystem delta_eig;
  std::vector<cplx> overlaps; // <v_k | phi0> in the delta eigenbasis
  cplx beta;                  // -i / mu
  cplx tr_u0;
};

// Plain equation i dU/dt = [H, U^2]. Requires Hermitian H, U0 and a valid
// shift ([U0^2 - a U0, H] = 0); throws std::invalid_argument otherwise.
EvolutionContext make_context(const CMatrix& H, const CMatrix& U0,
                              const SpectralSeed& seed, double a);

// Same flow reported through the gauge map U -> exp(-2i l H t)(U + l) exp(2i l H t).
EvolutionContext make_gauge_context(const CMatrix& H, const CMatrix& U0,
                                    const SpectralSeed& seed, double a, double lambda);

// i dU/dt = [H_phys, U] + eps [H_phys, U^2]. engine_seed must be built
// against the scaled pencil U0 - mu * (eps H_phys).
EvolutionContext make_epsilon_context(const CMatrix& H_phys, const CMatrix& U0,
                                      const SpectralSeed& engine_seed, double a, double eps);

// i dU/dt = C(U) [H, U^2] with C(U) = sqrt(Tr U / Tr U^3).
EvolutionContext make_homogeneous_context(const CMatrix& H, const CMatrix& U0,
                                          const SpectralSeed& seed, double a, bool normalize);

// sqrt(Tr rho / Tr rho^3); both traces must be positive.
double coupling_of(const CMatrix& rho);

// Squared norm of the interaction-picture seed wave, <phi0|exp(...)|phi0>.
// Raw value; throws std::runtime_error on overflow or underflow to zero.
double interaction_norm(const EvolutionContext& ctx, double t);

// Interaction-picture solution U0 + (mu - conj mu) F^{-1} [w w^dagger, H],
// evaluated with a max-exponent shift so large |t| stays finite.
CMatrix interaction_picture_at(const EvolutionContext& ctx, double t);

// Full solution of the context's equation variant at time t.
CMatrix solution_at(const EvolutionContext& ctx, double t);

// The same frames applied to the bare U0: what the solution relaxes to when
// the interaction term has decayed.
CMatrix linear_reference(const EvolutionContext& ctx, double t);

// exp(-2i lambda H t) (u + lambda) exp(2i lambda H t).
CMatrix gauge_shift(const CMatrix& u, const CMatrix& H, double lambda, double t);

// Accumulated phase z(a-z)t/mu + z tau of the dressed seed wave.
cplx alpha_phase(const EvolutionContext& ctx, double t, double tau);

// Seed wave in the full picture: exp(-iaHt) exp(-(i/mu) Delta t) e^{-i alpha} phi0.
CVector wavefunction(const EvolutionContext& ctx, double t, double tau);

// Samples solution_at on the grid. A nonempty iteration_mus list runs the
// chained transformations instead: for each mu_j the next seed wave is
// integrated jointly (RK4, internal step rk4_substep, anchored at t = 0) in
// the flow of the previously dressed solution, and the recorded matrices are
// the final dress. Iterations require the plain kind and an ascending grid.
TimeSeries evolve_series(const EvolutionContext& ctx, const std::vector<double>& times,
                         const std::vector<cplx>& iteration_mus = {},
                         double rk4_substep = 1e-3);

} // namespace nlvn
