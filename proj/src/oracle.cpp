#include "nlvn/oracle.hpp"

#include "nlvn/eig.hpp"

#include <cmath>
#include <stdexcept>

namespace nlvn {

namespace {

double state_coupling(const CMatrix& u) {
  double t1 = trace(u).real();
  double t3 = trace(u * u * u).real();
  if (!(t1 > 0) || !(t3 > 0))
    throw std::invalid_argument("homogeneous coupling needs positive Tr U and Tr U^3");
  return std::sqrt(t1 / t3);
}

struct Stepper {
  RhsKind kind;
  const CMatrix& H;
  std::optional<double> eps;
  Rk4Options opts;
  bool resym = false;
  double max_defect = 0.0;
  double accepted = 0.0;
  double halvings = 0.0;

  CMatrix f(const CMatrix& u) const { return rhs(kind, H, u, eps); }

  CMatrix rk4_once(const CMatrix& u, double h) const {
    CMatrix k1 = f(u);
    CMatrix k2 = f(u + cplx(h / 2, 0) * k1);
    CMatrix k3 = f(u + cplx(h / 2, 0) * k2);
    CMatrix k4 = f(u + cplx(h, 0) * k3);
    return u + cplx(h / 6, 0) * (k1 + cplx(2, 0) * k2 + cplx(2, 0) * k3 + k4);
  }

  void advance(CMatrix& u, double h, int depth) {
    if (!opts.richardson) {
      u = rk4_once(u, h);
      finish(u);
      return;
    }
    CMatrix whole = rk4_once(u, h);
    CMatrix half = rk4_once(rk4_once(u, h / 2), h / 2);
    double err = fro_norm(whole - half) / 15.0;
    if (err > opts.err_budget) {
      if (depth >= 24)
        throw std::runtime_error("step-size rejection: local error exceeds budget");
      halvings += 1.0;
      advance(u, h / 2, depth + 1);
      advance(u, h / 2, depth + 1);
      return;
    }
    u = half + cplx(1.0 / 15.0, 0) * (half - whole);
    finish(u);
  }

  void finish(CMatrix& u) {
    accepted += 1.0;
    if (resym) {
      max_defect = std::max(max_defect, u.hermiticity_defect());
      u = hermitize(u);
    }
  }
};

void require_uniform(const std::vector<double>& times) {
  if (times.size() < 3)
    throw std::invalid_argument("grid too coarse: need at least three points");
  double h = times[1] - times[0];
  if (h == 0.0) throw std::invalid_argument("grid spacing is zero");
  for (std::size_t i = 2; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw std::invalid_argument("residual evaluation needs a uniform grid");
}

// d/dt by second-order stencils on a uniform grid.
std::vector<CMatrix> differentiate(const std::vector<CMatrix>& m, double h) {
  std::vector<CMatrix> d(m.size());
  const std::size_t n = m.size();
  cplx inv(1.0 / (2 * h), 0);
  d[0] = inv * (cplx(-3, 0) * m[0] + cplx(4, 0) * m[1] - m[2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = inv * (m[i + 1] - m[i - 1]);
  d[n - 1] = inv * (cplx(3, 0) * m[n - 1] - cplx(4, 0) * m[n - 2] + m[n - 3]);
  return d;
}

std::vector<double> scalar_derivative(const std::vector<double>& p, double h) {
  std::vector<double> d(p.size());
  const std::size_t n = p.size();
  d[0] = (-3 * p[0] + 4 * p[1] - p[2]) / (2 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (p[i + 1] - p[i - 1]) / (2 * h);
  d[n - 1] = (3 * p[n - 1] - 4 * p[n - 2] + p[n - 3]) / (2 * h);
  return d;
}

} // namespace

CMatrix rhs(RhsKind kind, const CMatrix& H, const CMatrix& U,
            std::optional<double> eps, const CMatrix* u_tau) {
  if (H.dim() != U.dim()) throw std::invalid_argument("rhs: dimension mismatch");
  const cplx mi(0, -1);
  switch (kind) {
    case RhsKind::quadratic:
      return mi * commutator(H, U * U);
    case RhsKind::linear_plus_quadratic: {
      if (!eps) throw std::invalid_argument("the perturbed linear kind needs eps");
      return mi * (commutator(H, U) + cplx(*eps, 0) * commutator(H, U * U));
    }
    case RhsKind::homogeneous:
      return cplx(state_coupling(U), 0) * (mi * commutator(H, U * U));
    case RhsKind::cubic: {
      CMatrix v = H * H * U + H * U * H + U * H * H;
      return mi * commutator(v, U);
    }
    case RhsKind::full_with_tau: {
      if (!u_tau) throw std::invalid_argument("full_with_tau needs the explicit tau derivative");
      if (u_tau->dim() != U.dim()) throw std::invalid_argument("rhs: tau derivative dimension");
      return mi * commutator(H, U * U) + (*u_tau) * H + H * (*u_tau);
    }
  }
  throw std::invalid_argument("unknown rhs kind");
}

TimeSeries rk4_integrate(RhsKind kind, const CMatrix& H, const CMatrix& U_init,
                         const std::vector<double>& t_grid,
                         std::optional<double> eps, const Rk4Options& opts) {
  if (t_grid.empty()) throw std::invalid_argument("rk4: empty grid");
  if (kind == RhsKind::full_with_tau)
    throw std::invalid_argument("full_with_tau is evaluation-only and cannot be integrated");
  if (!(opts.step > 0)) throw std::invalid_argument("rk4: step must be positive");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    double d0 = t_grid[1] - t_grid[0], di = t_grid[i] - t_grid[i - 1];
    if (di == 0.0 || (di > 0) != (d0 > 0))
      throw std::invalid_argument("rk4: grid must be strictly monotonic");
  }

  Stepper st{kind, H, eps, opts};
  st.resym = U_init.hermitian();

  TimeSeries out;
  out.times = t_grid;
  CMatrix u = U_init;
  out.matrices.push_back(u);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    double span = t_grid[i] - t_grid[i - 1];
    auto nsub = static_cast<std::size_t>(std::ceil(std::abs(span) / opts.step));
    double h = span / static_cast<double>(nsub);
    for (std::size_t s = 0; s < nsub; ++s) st.advance(u, h, 0);
    out.matrices.push_back(u);
  }
  out.metadata["max_resym_defect"] = st.max_defect;
  out.metadata["accepted_steps"] = st.accepted;
  out.metadata["halvings"] = st.halvings;
  return out;
}

ResidualReport residual_of_closed_form(RhsKind kind, const CMatrix& H,
                                       const TimeSeries& series,
                                       std::optional<double> eps) {
  if (kind == RhsKind::full_with_tau)
    throw std::invalid_argument("full_with_tau residuals need explicit tau data");
  require_uniform(series.times);
  if (series.matrices.size() != series.times.size())
    throw std::invalid_argument("series times and matrices disagree");

  ResidualReport rep;
  rep.times = series.times;
  double h = series.times[1] - series.times[0];
  std::vector<CMatrix> deriv = differentiate(series.matrices, h);

  std::vector<double> base;
  {
    EigenSystem es = herm_eig(hermitize(series.matrices[0]));
    for (const auto& v : es.values) base.push_back(v.real());
  }
  cplx tr0 = trace(series.matrices[0]);

  for (std::size_t i = 0; i < series.matrices.size(); ++i) {
    const CMatrix& m = series.matrices[i];
    rep.ode_residual.push_back(fro_norm(deriv[i] - rhs(kind, H, m, eps)));
    rep.hermiticity_defect.push_back(m.hermiticity_defect());
    EigenSystem es = herm_eig(hermitize(m));
    double drift = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k)
      drift = std::max(drift, std::abs(es.values[k].real() - base[k]));
    rep.spectrum_drift.push_back(drift);
    rep.trace_drift.push_back(std::abs(trace(m) - tr0));
    rep.max_ode_residual = std::max(rep.max_ode_residual, rep.ode_residual.back());
  }
  return rep;
}

SubsystemReport subsystem_monitor(const TimeSeries& series, std::size_t d1, std::size_t d2,
                                  const CMatrix& H1, const CMatrix& H2) {
  require_uniform(series.times);
  if (series.matrices.size() != series.times.size())
    throw std::invalid_argument("series times and matrices disagree");
  if (H1.dim() != d1 || H2.dim() != d2)
    throw std::invalid_argument("subsystem Hamiltonian dimensions disagree with the split");

  SubsystemReport rep;
  rep.times = series.times;
  const std::size_t n = series.times.size();

  std::vector<CMatrix> red1(n), red2(n), red1sq(n), red2sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CMatrix& m = series.matrices[i];
    if (m.dim() != d1 * d2)
      throw std::invalid_argument("subsystem split disagrees with the matrix dimension");
    red1[i] = partial_trace(m, d1, d2, 1);
    red2[i] = partial_trace(m, d1, d2, 2);
    CMatrix msq = m * m;
    red1sq[i] = partial_trace(msq, d1, d2, 1);
    red2sq[i] = partial_trace(msq, d1, d2, 2);

    double total = trace(m).real();
    if (std::abs(total) < 1e-12)
      throw std::invalid_argument("subsystem normalization needs a nonzero trace");

    std::vector<double> s1, s2;
    for (const auto& v : herm_eig(hermitize(red1[i])).values) s1.push_back(v.real() / total);
    for (const auto& v : herm_eig(hermitize(red2[i])).values) s2.push_back(v.real() / total);
    rep.spectrum1.push_back(s1);
    rep.spectrum2.push_back(s2);

    rep.energy1.push_back(trace(H1 * red1[i]).real());
    rep.energy2.push_back(trace(H2 * red2[i]).real());
    rep.purity1.push_back(trace(red1[i] * red1[i]).real());
    rep.purity2.push_back(trace(red2[i] * red2[i]).real());
  }

  double h = series.times[1] - series.times[0];
  std::vector<double> dp1 = scalar_derivative(rep.purity1, h);
  std::vector<double> dp2 = scalar_derivative(rep.purity2, h);
  for (std::size_t i = 0; i < n; ++i) {
    cplx rhs1 = cplx(2, 0) * trace(commutator(red1sq[i], red1[i]) * H1);
    cplx rhs2 = cplx(2, 0) * trace(commutator(red2sq[i], red2[i]) * H2);
    rep.balance_residual1.push_back(std::abs(cplx(0, 1) * cplx(dp1[i], 0) - rhs1));
    rep.balance_residual2.push_back(std::abs(cplx(0, 1) * cplx(dp2[i], 0) - rhs2));
    rep.balance_scale1.push_back(std::abs(rhs1));
    rep.balance_scale2.push_back(std::abs(rhs2));
  }
  return rep;
}

} // namespace nlvn
