#pragma once

#include "nlvn/matrix.hpp"
#include "nlvn/series.hpp"

#include <optional>
#include <vector>

namespace nlvn {

// Right-hand-side families. The tag fixes the equation i dU/dt = RHS(U):
//   quadratic             i dU/dt = [H, U^2]
//   linear_plus_quadratic i dU/dt = [H, U] + eps [H, U^2]
//   homogeneous           i dU/dt = C(U) [H, U^2],  C = sqrt(Tr U / Tr U^3)
//   cubic                 i dU/dt = [H^2 U + H U H + U H^2, U]
//   full_with_tau         i dU/dt = [H, U^2] + i U' H + i H U'   (U' explicit)
enum class RhsKind { quadratic, linear_plus_quadratic, homogeneous, cubic, full_with_tau };

// dU/dt for the given kind, i.e. -i times the bracketed right side.
// linear_plus_quadratic requires eps; full_with_tau requires u_tau (the
// derivative of U with respect to the extra parameter, supplied explicitly:
// this kind is evaluation-only and cannot be integrated here).
CMatrix rhs(RhsKind kind, const CMatrix& H, const CMatrix& U,
            std::optional<double> eps = std::nullopt, const CMatrix* u_tau = nullptr);

struct Rk4Options {
  double step = 1e-3;        // base substep between grid times
  double err_budget = 1e-9;  // per-substep Richardson estimate triggering halving
  bool richardson = true;    // accept the extrapolated value (off: plain RK4)
};

// Classic fourth-order integration from series start = t_grid[0], recording
// at every grid time. Each substep is checked by step doubling; substeps
// whose error estimate exceeds the budget are halved recursively. Hermitian
// initial data is re-symmetrized after every accepted substep and the largest
// discarded defect is logged in metadata["max_resym_defect"].
TimeSeries rk4_integrate(RhsKind kind, const CMatrix& H, const CMatrix& U_init,
                         const std::vector<double>& t_grid,
                         std::optional<double> eps = std::nullopt,
                         const Rk4Options& opts = {});

struct ResidualReport {
  std::vector<double> times;
  std::vector<double> ode_residual;       // |i * d/dt(series) - RHS| (Frobenius)
  std::vector<double> hermiticity_defect;
  std::vector<double> spectrum_drift;     // vs the eigenvalues at the first time
  std::vector<double> trace_drift;
  double max_ode_residual = 0.0;
};

// Differentiates the series (second-order central stencil, one-sided at the
// ends) and measures how well it satisfies the equation of the given kind.
// Needs a uniform grid with at least three points.
ResidualReport residual_of_closed_form(RhsKind kind, const CMatrix& H,
                                       const TimeSeries& series,
                                       std::optional<double> eps = std::nullopt);

// Per-time view of a bipartite solution on C^{d1} (x) C^{d2}, row index
// i1 * d2 + i2. spectrum1[i] holds the eigenvalues of the slot-1 reduced
// matrix divided by the full trace (slot-2 traced out); purity1[i] is the
// unnormalized Tr of its square. balance_residual compares i d/dt purity
// (finite differences) with 2 Tr([reduced of U^2, reduced of U] H_slot).
struct SubsystemReport {
  std::vector<double> times;
  std::vector<std::vector<double>> spectrum1;
  std::vector<std::vector<double>> spectrum2;
  std::vector<double> energy1;
  std::vector<double> energy2;
  std::vector<double> purity1;
  std::vector<double> purity2;
  std::vector<double> balance_residual1;
  std::vector<double> balance_residual2;
  std::vector<double> balance_scale1; // |analytic right side|, for relative gates
  std::vector<double> balance_scale2;
};

SubsystemReport subsystem_monitor(const TimeSeries& series, std::size_t d1, std::size_t d2,
                                  const CMatrix& H1, const CMatrix& H2);

} // namespace nlvn
