#include "nlvn/darboux.hpp"

#include "nlvn/eig.hpp"

#include <cmath>
#include <stdexcept>

namespace nlvn {

namespace {

// Orthonormal basis of range(p) by column-pivoted Gram-Schmidt. For an
// idempotent p this spans exactly the invariant subspace (p acts as the
// identity on it).
std::vector<CVector> range_basis(const CMatrix& p) {
  const std::size_t n = p.dim();
  double scale = fro_norm(p);
  std::vector<CVector> cols(n, CVector(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = p.at(i, j);

  std::vector<CVector> basis;
  for (std::size_t pass = 0; pass < n; ++pass) {
    std::size_t best = 0;
    double bestn = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      double nj = vnorm(cols[j]);
      if (nj > bestn) { bestn = nj; best = j; }
    }
    if (bestn <= 1e-10 * (scale > 0 ? scale : 1.0)) break;
    CVector v = normalized(cols[best]);
    basis.push_back(v);
    for (auto& c : cols) {
      cplx ip = vdot(v, c);
      for (std::size_t i = 0; i < n; ++i) c[i] -= ip * v[i];
    }
  }
  return basis;
}

CMatrix from_columns(const std::vector<CVector>& cols, std::size_t n) {
  CMatrix out(n); // n x n with zero-padded right block when fewer columns
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) out.at(i, j) = cols[j][i];
  return out;
}

} // namespace

Projector build_projector_rank1(const CVector& phi, cplx mu, cplx nu) {
  double nn = 0.0;
  for (const auto& x : phi) nn += std::norm(x);
  if (nn < 1e-13) throw std::invalid_argument("projector seed vector is numerically zero");
  if (nu == std::conj(mu) && std::abs(mu.imag()) == 0.0)
    throw std::invalid_argument("real mu on the Hermitian branch gives a trivial transformation");

  Projector out;
  out.mu = mu;
  out.nu = nu;
  out.rank = 1;
  out.source_vector = phi;
  out.P = outer(phi, phi);
  out.P *= cplx(1.0 / nn, 0.0);
  return out;
}

Projector build_projector_pair(const CVector& phi, const CVector& chi_row,
                               cplx mu, cplx nu) {
  if (phi.size() != chi_row.size())
    throw std::invalid_argument("projector pair: size mismatch");
  const std::size_t n = phi.size();
  cplx pairing(0, 0);
  for (std::size_t i = 0; i < n; ++i) pairing += chi_row[i] * phi[i];
  double scale = vnorm(phi) * vnorm(chi_row);
  if (std::abs(pairing) < 1e-12 * (scale > 0 ? scale : 1.0))
    throw std::invalid_argument("projector pair: phi and chi are numerically unpaired");

  Projector out;
  out.mu = mu;
  out.nu = nu;
  out.rank = 1;
  out.source_vector = phi;
  out.P = CMatrix(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.P.at(i, j) = phi[i] * chi_row[j] / pairing;
  return out;
}

Projector build_projector_general(const CMatrix& phi_block, const CMatrix& chi_block,
                                  const CMatrix& p, cplx mu, cplx nu) {
  const std::size_t n = p.dim();
  if (phi_block.dim() != n || chi_block.dim() != n)
    throw std::invalid_argument("projector blocks must share the ambient dimension");
  if (matrix_distance(p * p, p) > 1e-12 * (1.0 + fro_norm(p)))
    throw std::invalid_argument("p is not idempotent");

  auto basis = range_basis(p);
  const std::size_t r = basis.size();
  if (r == 0) throw std::invalid_argument("p has empty range");

  // p = R L with R orthonormal (n x r) and L = R^dagger p, L R = I_r.
  CMatrix rmat = from_columns(basis, n);
  CMatrix lmat(n);
  {
    CMatrix rad = adjoint(rmat);
    lmat = rad * p;
  }

  // Core of p chi phi p in the invariant subspace: L chi phi R (top-left r x r).
  CMatrix full = lmat * chi_block * phi_block * rmat;
  CMatrix core(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) core.at(i, j) = full.at(i, j);

  // Degeneracy floor on the smallest restricted singular value.
  EigenSystem sv = herm_eig(adjoint(core) * core);
  double smin = std::sqrt(std::max(0.0, sv.values.front().real()));
  double cscale = fro_norm(core);
  if (cscale == 0.0 || smin < 1e-10 * cscale)
    throw std::invalid_argument("restricted block p chi phi p is numerically singular");

  CMatrix core_inv_full(n);
  CMatrix ci = inverse(core);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) core_inv_full.at(i, j) = ci.at(i, j);

  Projector out;
  out.mu = mu;
  out.nu = nu;
  out.rank = r;
  out.P = phi_block * rmat * core_inv_full * lmat * chi_block;
  return out;
}

CMatrix transform_potential(const CMatrix& U, const CMatrix& H, const Projector& proj) {
  if (U.dim() != H.dim() || U.dim() != proj.P.dim())
    throw std::invalid_argument("transform_potential: dimension mismatch");
  return U + (proj.mu - proj.nu) * commutator(proj.P, H);
}

CVector transform_wavefunction(const CVector& psi_row, cplx lambda, const Projector& proj) {
  const std::size_t n = proj.P.dim();
  if (psi_row.size() != n) throw std::invalid_argument("transform_wavefunction: dimension mismatch");
  if (std::abs(lambda - proj.mu) <= 1e-12 * (1.0 + std::abs(proj.mu)))
    throw std::invalid_argument("transform_wavefunction: lambda at the mu pole");
  cplx coef = (proj.nu - proj.mu) / (lambda - proj.mu);
  CVector out = psi_row;
  for (std::size_t j = 0; j < n; ++j) {
    cplx acc(0, 0);
    for (std::size_t i = 0; i < n; ++i) acc += psi_row[i] * proj.P.at(i, j);
    out[j] -= coef * acc;
  }
  return out;
}

double master_residual(const Projector& proj, const CMatrix& P_dot,
                       const CMatrix& V, const CMatrix& J) {
  const CMatrix& P = proj.P;
  if (P_dot.dim() != P.dim() || V.dim() != P.dim() || J.dim() != P.dim())
    throw std::invalid_argument("master_residual: dimension mismatch");
  CMatrix rhs = (V - proj.mu * J) * P - P * (V - proj.nu * J) + (proj.mu - proj.nu) * (P * J * P);
  return matrix_distance(cplx(0, 1) * P_dot, rhs);
}

double constraint_hereditary_residual(const CMatrix& U, const CMatrix& H,
                                      const Projector& proj) {
  if (U.dim() != H.dim() || U.dim() != proj.P.dim())
    throw std::invalid_argument("constraint_hereditary_residual: dimension mismatch");
  const CMatrix& P = proj.P;
  CMatrix Pp = CMatrix::identity(P.dim()) - P;
  CMatrix inner = Pp * (U - proj.mu * H) * P - P * (U - proj.nu * H) * Pp;
  return fro_norm(commutator(inner, H * H));
}

LemmaReport lemma_checks(const CMatrix& U, const CMatrix& H, const Projector& proj,
                         const CMatrix& P_dot) {
  const CMatrix& P = proj.P;
  const cplx d = proj.mu - proj.nu;
  CMatrix Pp = CMatrix::identity(P.dim()) - P;
  CMatrix U1 = transform_potential(U, H, proj);
  CMatrix W = H * U + U * H;
  CMatrix H2 = H * H;

  LemmaReport rep;
  // Squared-potential identity of the first linear problem (V = U, J = H):
  // U[1]^2 = U^2 + d*( P(W - nu H^2)P_perp - P_perp(W - mu H^2)P ).
  CMatrix l1 = U1 * U1 - U * U -
               d * (P * (W - proj.nu * H2) * Pp - Pp * (W - proj.mu * H2) * P);
  rep.lemma1 = fro_norm(l1);

  // U[1]^2 = U^2 - d*i*P_dot.
  CMatrix l2 = U1 * U1 - U * U + d * (cplx(0, 1) * P_dot);
  rep.lemma2 = fro_norm(l2);

  // Idempotence transported to U[1] when U^2 = U and P obeys the linear law.
  rep.lemma3 = matrix_distance(U1 * U1, U1);
  rep.u_idempotency_defect = matrix_distance(U * U, U);
  rep.pdot_linearity_defect = matrix_distance(cplx(0, 1) * P_dot, commutator(H, P));
  return rep;
}

DarbouxStep first_step(const CMatrix& U0, const CMatrix& H, const SpectralSeed& seed) {
  DarbouxStep step;
  step.projector = build_projector_rank1(seed.phi0, seed.mu, std::conj(seed.mu));
  step.U_in = U0;
  step.H = H;
  step.U_out = transform_potential(U0, H, step.projector);
  step.iteration_index = 1;
  return step;
}

DarbouxStep iterate_darboux(const DarbouxStep& step, const SpectralSeed& next_seed) {
  DarbouxStep out;
  out.projector = build_projector_rank1(next_seed.phi0, next_seed.mu, std::conj(next_seed.mu));
  out.U_in = step.U_out;
  out.H = step.H;
  out.U_out = transform_potential(step.U_out, step.H, out.projector);
  out.iteration_index = step.iteration_index + 1;
  return out;
}

CVector pick_iteration_seed(const CMatrix& U_prev, const CMatrix& H, cplx mu) {
  EigenSystem es = general_eig(U_prev + (-mu) * H);
  double best = -1.0;
  CVector pick;
  for (const auto& v : es.vectors) {
    Projector pr;
    pr.P = outer(v, v);
    double coupling = fro_norm(commutator(pr.P, H));
    if (coupling > best) { best = coupling; pick = v; }
  }
  if (pick.empty()) throw std::runtime_error("pick_iteration_seed: no eigenvector available");
  return pick;
}

} // namespace nlvn
