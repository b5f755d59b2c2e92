#include "nlvn/evolution.hpp"

#include "nlvn/darboux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlvn {

namespace {

void finish_context(EvolutionContext& ctx) {
  if (!ctx.U0.hermitian() || !ctx.H.hermitian())
    throw std::invalid_argument("closed-form evolution needs Hermitian H and U0");
  if (!ctx.shift.valid)
    throw std::invalid_argument("shifted square does not commute with the Hamiltonian");
  if (ctx.seed.phi0.size() != ctx.U0.dim())
    throw std::invalid_argument("seed dimension mismatch");
  ctx.seed.phi0 = normalized(ctx.seed.phi0);
  ctx.delta_eig = herm_eig(ctx.shift.delta);
  ctx.beta = cplx(0, -1) / ctx.seed.mu;
  ctx.overlaps.clear();
  for (const auto& v : ctx.delta_eig.vectors) ctx.overlaps.push_back(vdot(v, ctx.seed.phi0));
  ctx.tr_u0 = trace(ctx.U0);
}

double overlap_ceiling(const EvolutionContext& ctx) {
  double m = 0.0;
  for (const auto& c : ctx.overlaps) m = std::max(m, std::abs(c));
  return m;
}

// Modes with an overlap this far below the largest are exact zeros up to
// roundoff; including them would multiply noise by huge shifted exponentials.
bool mode_active(const EvolutionContext& ctx, std::size_t k, double ceiling) {
  return std::abs(ctx.overlaps[k]) > 1e-14 * ceiling;
}

CMatrix conjugate_by_phase(const CMatrix& m, const CMatrix& h, double s) {
  CMatrix e = matexp_hermitian_phase(h, s);
  return e * m * adjoint(e);
}

CMatrix apply_frames(const EvolutionContext& ctx, CMatrix m, double engine_t, double t) {
  m = conjugate_by_phase(m, ctx.H, ctx.shift.a * engine_t);
  if (ctx.kind == EvolutionKind::epsilon) m = conjugate_by_phase(m, ctx.H_frame, t);
  if (ctx.kind == EvolutionKind::gauge) m = gauge_shift(m, ctx.H, ctx.lambda_gauge, t);
  if (ctx.kind == EvolutionKind::homogeneous && ctx.normalize)
    m *= cplx(1, 0) / ctx.tr_u0;
  return m;
}

} // namespace

EvolutionContext make_context(const CMatrix& H, const CMatrix& U0,
                              const SpectralSeed& seed, double a) {
  if (H.dim() != U0.dim()) throw std::invalid_argument("make_context: dimension mismatch");
  EvolutionContext ctx;
  ctx.H = H;
  ctx.U0 = U0;
  ctx.seed = seed;
  ctx.shift = build_shift(U0, H, a);
  finish_context(ctx);
  return ctx;
}

EvolutionContext make_gauge_context(const CMatrix& H, const CMatrix& U0,
                                    const SpectralSeed& seed, double a, double lambda) {
  EvolutionContext ctx = make_context(H, U0, seed, a);
  ctx.kind = EvolutionKind::gauge;
  ctx.lambda_gauge = lambda;
  return ctx;
}

EvolutionContext make_epsilon_context(const CMatrix& H_phys, const CMatrix& U0,
                                      const SpectralSeed& engine_seed, double a, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("epsilon must be positive");
  EvolutionContext ctx = make_context(cplx(eps, 0) * H_phys, U0, engine_seed, a);
  ctx.kind = EvolutionKind::epsilon;
  ctx.H_frame = H_phys;
  ctx.eps = eps;
  return ctx;
}

EvolutionContext make_homogeneous_context(const CMatrix& H, const CMatrix& U0,
                                          const SpectralSeed& seed, double a, bool normalize) {
  EvolutionContext ctx = make_context(H, U0, seed, a);
  ctx.kind = EvolutionKind::homogeneous;
  ctx.normalize = normalize;
  ctx.c0 = coupling_of(U0);
  return ctx;
}

double coupling_of(const CMatrix& rho) {
  double t1 = trace(rho).real();
  double t3 = trace(rho * rho * rho).real();
  if (!(t1 > 0) || !(t3 > 0))
    throw std::invalid_argument("coupling needs positive Tr rho and Tr rho^3");
  return std::sqrt(t1 / t3);
}

double interaction_norm(const EvolutionContext& ctx, double t) {
  double sum = 0.0;
  for (std::size_t k = 0; k < ctx.overlaps.size(); ++k) {
    double lam = ctx.delta_eig.values[k].real();
    sum += std::norm(ctx.overlaps[k]) * std::exp(2.0 * ctx.beta.real() * lam * t);
  }
  if (!std::isfinite(sum) || !(sum > 1e-300))
    throw std::runtime_error("interaction norm overflowed or collapsed");
  return sum;
}

CMatrix interaction_picture_at(const EvolutionContext& ctx, double t) {
  const std::size_t n = ctx.U0.dim();
  const double ceiling = overlap_ceiling(ctx);

  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ctx.overlaps.size(); ++k)
    if (mode_active(ctx, k, ceiling))
      shift = std::max(shift, ctx.beta.real() * ctx.delta_eig.values[k].real() * t);
  if (!std::isfinite(shift)) throw std::runtime_error("seed wave has no active modes");

  CVector w(n, cplx(0, 0));
  double fnorm = 0.0;
  for (std::size_t k = 0; k < ctx.overlaps.size(); ++k) {
    if (!mode_active(ctx, k, ceiling)) continue;
    double lam = ctx.delta_eig.values[k].real();
    double expo = ctx.beta.real() * lam * t - shift;
    cplx coef = ctx.overlaps[k] * std::exp(expo) * std::polar(1.0, ctx.beta.imag() * lam * t);
    const CVector& v = ctx.delta_eig.vectors[k];
    for (std::size_t i = 0; i < n; ++i) w[i] += coef * v[i];
    fnorm += std::norm(ctx.overlaps[k]) * std::exp(2.0 * expo);
  }
  if (!std::isfinite(fnorm) || !(fnorm > 1e-300))
    throw std::runtime_error("interaction norm overflowed or collapsed");

  CMatrix out = ctx.U0;
  cplx gain = (ctx.seed.mu - std::conj(ctx.seed.mu)) / fnorm;
  out += gain * commutator(outer(w, w), ctx.H);
  return out;
}

CMatrix solution_at(const EvolutionContext& ctx, double t) {
  const double engine_t = (ctx.kind == EvolutionKind::homogeneous) ? ctx.c0 * t : t;
  return apply_frames(ctx, interaction_picture_at(ctx, engine_t), engine_t, t);
}

CMatrix linear_reference(const EvolutionContext& ctx, double t) {
  const double engine_t = (ctx.kind == EvolutionKind::homogeneous) ? ctx.c0 * t : t;
  return apply_frames(ctx, ctx.U0, engine_t, t);
}

CMatrix gauge_shift(const CMatrix& u, const CMatrix& H, double lambda, double t) {
  CMatrix shifted = u + cplx(lambda, 0) * CMatrix::identity(u.dim());
  return conjugate_by_phase(shifted, H, 2.0 * lambda * t);
}

cplx alpha_phase(const EvolutionContext& ctx, double t, double tau) {
  const cplx z = ctx.seed.z;
  return z * (cplx(ctx.shift.a, 0) - z) * cplx(t, 0) / ctx.seed.mu + z * cplx(tau, 0);
}

CVector wavefunction(const EvolutionContext& ctx, double t, double tau) {
  CVector v = matvec(herm_exp(ctx.shift.delta, ctx.beta * cplx(t, 0)), ctx.seed.phi0);
  v = matvec(matexp_hermitian_phase(ctx.H, ctx.shift.a * t), v);
  cplx phase = std::exp(cplx(0, -1) * alpha_phase(ctx, t, tau));
  return vscale(phase, v);
}

namespace {

using Chain = std::vector<CVector>;

Chain chain_axpy(const Chain& y, double h, const Chain& k) {
  Chain out = y;
  for (std::size_t j = 0; j < out.size(); ++j)
    for (std::size_t i = 0; i < out[j].size(); ++i) out[j][i] += h * k[j][i];
  return out;
}

// One dressing sweep: phi_j sees the j-1 times dressed potential, and its
// projector produces the next dress. Returns the derivative of every chain
// wave; `final_u` (when requested) receives the fully dressed solution.
Chain chain_rhs(const EvolutionContext& ctx, const std::vector<cplx>& mus,
                const CMatrix& h2, double t, const Chain& phis, CMatrix* final_u) {
  CMatrix u = solution_at(ctx, t);
  Chain out(phis.size());
  for (std::size_t j = 0; j < phis.size(); ++j) {
    CMatrix op = ctx.H * u + u * ctx.H - mus[j] * h2;
    out[j] = vscale(cplx(0, -1), matvec(op, phis[j]));
    double nn = vnorm(phis[j]);
    CMatrix p = outer(phis[j], phis[j]);
    p *= cplx(1.0 / (nn * nn), 0);
    u += (mus[j] - std::conj(mus[j])) * commutator(p, ctx.H);
  }
  if (final_u) *final_u = u;
  return out;
}

CMatrix chain_dress(const EvolutionContext& ctx, const std::vector<cplx>& mus,
                    const CMatrix& h2, double t, const Chain& phis) {
  CMatrix u;
  chain_rhs(ctx, mus, h2, t, phis, &u);
  return u;
}

void chain_rk4_step(const EvolutionContext& ctx, const std::vector<cplx>& mus,
                    const CMatrix& h2, double t, double h, Chain& y) {
  Chain k1 = chain_rhs(ctx, mus, h2, t, y, nullptr);
  Chain k2 = chain_rhs(ctx, mus, h2, t + h / 2, chain_axpy(y, h / 2, k1), nullptr);
  Chain k3 = chain_rhs(ctx, mus, h2, t + h / 2, chain_axpy(y, h / 2, k2), nullptr);
  Chain k4 = chain_rhs(ctx, mus, h2, t + h, chain_axpy(y, h, k3), nullptr);
  for (std::size_t j = 0; j < y.size(); ++j) {
    for (std::size_t i = 0; i < y[j].size(); ++i)
      y[j][i] += h / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i]);
    y[j] = normalized(y[j]); // projector is scale-free; keep the wave tame
  }
}

} // namespace

TimeSeries evolve_series(const EvolutionContext& ctx, const std::vector<double>& times,
                         const std::vector<cplx>& iteration_mus, double rk4_substep) {
  TimeSeries out;
  out.times = times;
  out.metadata["iterations"] = static_cast<double>(iteration_mus.size());

  if (iteration_mus.empty()) {
    for (double t : times) out.matrices.push_back(solution_at(ctx, t));
    return out;
  }

  if (ctx.kind != EvolutionKind::plain)
    throw std::invalid_argument("iterated transformations support only the plain equation");
  if (!(rk4_substep > 0)) throw std::invalid_argument("substep must be positive");
  for (const auto& mu : iteration_mus)
    if (mu.imag() == 0.0)
      throw std::invalid_argument("iteration spectral parameters must be non-real");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("iterated runs need a strictly ascending grid");

  // Chain seeds at the anchor t = 0: each from the pencil of the previous dress.
  CMatrix h2 = ctx.H * ctx.H;
  Chain y0;
  {
    CMatrix u = solution_at(ctx, 0.0);
    for (const auto& mu : iteration_mus) {
      CVector v = pick_iteration_seed(u, ctx.H, mu);
      y0.push_back(v);
      CMatrix p = outer(v, v);
      p *= cplx(1.0 / (vnorm(v) * vnorm(v)), 0);
      u += (mu - std::conj(mu)) * commutator(p, ctx.H);
    }
  }

  out.matrices.assign(times.size(), CMatrix());
  auto sweep = [&](bool forward) {
    Chain y = y0;
    double tcur = 0.0;
    auto visit = [&](std::size_t idx) {
      double target = times[idx];
      double span = target - tcur;
      if (span != 0.0) {
        auto nst = static_cast<std::size_t>(std::ceil(std::abs(span) / rk4_substep));
        double h = span / static_cast<double>(nst);
        for (std::size_t s = 0; s < nst; ++s) chain_rk4_step(ctx, iteration_mus, h2, tcur + h * s, h, y);
        tcur = target;
      }
      out.matrices[idx] = chain_dress(ctx, iteration_mus, h2, target, y);
    };
    if (forward) {
      for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= 0.0) visit(i);
    } else {
      for (std::size_t i = times.size(); i-- > 0;)
        if (times[i] < 0.0) visit(i);
    }
  };
  sweep(true);
  sweep(false);
  return out;
}

} // namespace nlvn
