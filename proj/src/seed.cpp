#include "nlvn/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nlvn {

namespace {

constexpr double kEntryFloor = 1e-10;

std::size_t last_nonzero(const CVector& v) {
  for (std::size_t i = v.size(); i-- > 0;)
    if (std::abs(v[i]) > kEntryFloor) return i;
  return 0;
}

// Reduced row echelon form of the row span. Depends only on the span, so the
// result is independent of the eigensolver's arbitrary in-cluster frame.
std::vector<CVector> span_rref(std::vector<CVector> rows) {
  const std::size_t n = rows.empty() ? 0 : rows[0].size();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
    std::size_t piv = rank;
    double best = std::abs(rows[rank][col]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r)
      if (std::abs(rows[r][col]) > best) { best = std::abs(rows[r][col]); piv = r; }
    if (best < kEntryFloor) continue;
    std::swap(rows[rank], rows[piv]);
    cplx d = rows[rank][col];
    for (std::size_t j = 0; j < n; ++j) rows[rank][j] /= d;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank) continue;
      cplx f = rows[r][col];
      if (std::abs(f) == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) rows[r][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  rows.resize(rank);
  return rows;
}

void fix_phase(CVector& v) {
  for (const auto& x : v) {
    if (std::abs(x) > kEntryFloor) {
      cplx ph = x / std::abs(x);
      for (auto& y : v) y /= ph;
      return;
    }
  }
}

std::vector<std::size_t> clusters_of(const std::vector<cplx>& values, double tol) {
  // Returns the start index of each cluster in the (already sorted) list.
  std::vector<std::size_t> starts = {0};
  for (std::size_t k = 1; k < values.size(); ++k)
    if (std::abs(values[k] - values[starts.back()]) > tol) starts.push_back(k);
  return starts;
}

} // namespace

double seed_cluster_tol(const CMatrix& U0, const CMatrix& H, cplx mu) {
  return 1e-8 * (fro_norm(U0) + std::abs(mu) * fro_norm(H));
}

EigenSystem solve_seed_spectrum(const CMatrix& U0, const CMatrix& H, cplx mu) {
  if (U0.dim() != H.dim()) throw std::invalid_argument("solve_seed_spectrum: dimension mismatch");
  return general_eig(U0 + (-mu) * H);
}

std::pair<cplx, std::vector<CVector>> pick_degenerate_basis(const EigenSystem& es,
                                                            const SeedSelection& sel,
                                                            double cluster_tol) {
  const std::size_t n = es.values.size();
  auto starts = clusters_of(es.values, cluster_tol);
  auto cluster_size = [&](std::size_t c) {
    std::size_t end = (c + 1 < starts.size()) ? starts[c + 1] : n;
    return end - starts[c];
  };

  std::size_t chosen = starts.size();
  switch (sel.rule) {
    case SeedSelection::Rule::most_degenerate: {
      std::size_t best = 1;
      for (std::size_t c = 0; c < starts.size(); ++c)
        if (cluster_size(c) > best) { best = cluster_size(c); chosen = c; }
      break;
    }
    case SeedSelection::Rule::match_value: {
      for (std::size_t c = 0; c < starts.size(); ++c)
        if (std::abs(es.values[starts[c]] - sel.z0) <= cluster_tol && cluster_size(c) >= 2) {
          chosen = c;
          break;
        }
      break;
    }
    case SeedSelection::Rule::explicit_index: {
      if (sel.index < starts.size() && cluster_size(sel.index) >= 2) chosen = sel.index;
      break;
    }
  }
  if (chosen >= starts.size())
    throw std::runtime_error("pick_degenerate_basis: no degenerate eigenvalue matches the selection");

  std::size_t lo = starts[chosen];
  std::size_t hi = (chosen + 1 < starts.size()) ? starts[chosen + 1] : n;
  std::vector<CVector> raw(es.vectors.begin() + lo, es.vectors.begin() + hi);

  std::vector<CVector> basis = span_rref(std::move(raw));
  std::sort(basis.begin(), basis.end(), [](const CVector& x, const CVector& y) {
    CVector xn = normalized(x), yn = normalized(y);
    std::size_t lx = last_nonzero(xn), ly = last_nonzero(yn);
    double mx = std::abs(xn[lx]), my = std::abs(yn[ly]);
    if (std::abs(mx - my) > 1e-6) return mx > my;
    if (lx != ly) return lx > ly;
    return std::abs(xn[0]) > std::abs(yn[0]);
  });
  for (std::size_t k = 0; k < basis.size(); ++k) {
    for (std::size_t p = 0; p < k; ++p) {
      cplx c = vdot(basis[p], basis[k]);
      for (std::size_t i = 0; i < basis[k].size(); ++i) basis[k][i] -= c * basis[p][i];
    }
    basis[k] = normalized(basis[k]);
    fix_phase(basis[k]);
  }
  return {es.values[lo], std::move(basis)};
}

std::vector<std::string> equally_spaced_violations(double a, double b, double c,
                                                   double m, double k) {
  (void)k; // the spectrum offset never constrains admissibility
  std::vector<std::string> bad;
  if (!(a > 0)) bad.push_back("a-positive");
  if (b == 0.0) bad.push_back("b-nonzero");
  if (!(b < 0)) bad.push_back("b-negative");
  if (!(4 * m * m > 0)) bad.push_back("m-nonzero");
  if (!(a * a + 4 * b > 4 * m * m)) bad.push_back("degeneracy-window");
  if (!(c >= 0)) bad.push_back("c-nonnegative");
  double lhs = c * (c - a), rhs = b - m * m;
  double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  if (std::abs(lhs - rhs) > 1e-9 * scale) bad.push_back("c-degeneracy");
  if (a * a + 4 * b >= 0 && !(a - std::sqrt(4 * b + a * a) >= 0)) bad.push_back("rho-positive");
  return bad;
}

void validate_equally_spaced_scenario(double a, double b, double c, double m, double k) {
  auto bad = equally_spaced_violations(a, b, c, m, k);
  if (bad.empty()) return;
  std::string msg = "equally-spaced parameters rejected:";
  for (const auto& s : bad) msg += " " + s;
  throw std::invalid_argument(msg);
}

ShiftData build_shift(const CMatrix& U0, const CMatrix& H, double a) {
  if (U0.dim() != H.dim()) throw std::invalid_argument("build_shift: dimension mismatch");
  ShiftData out;
  out.a = a;
  out.delta = U0 * U0 - cplx(a, 0) * U0;
  out.commutation_defect = fro_norm(commutator(out.delta, H));
  out.valid = out.commutation_defect <= 1e-10 * fro_norm(out.delta) * fro_norm(H);
  return out;
}

namespace {

SpectralSeed assemble(const CMatrix& U0, const CMatrix& H, cplx mu, cplx z,
                      std::vector<CVector> basis, cplx A, cplx B) {
  double ab = std::norm(A) + std::norm(B);
  if (std::abs(ab - 1.0) > 1e-12)
    throw std::invalid_argument("seed coefficients must satisfy |A|^2+|B|^2=1");
  if (basis.size() < 2) throw std::invalid_argument("seed basis must have at least 2 vectors");

  CMatrix pencil = U0 + (-mu) * H;
  double res_tol = 1e-10 * (fro_norm(U0) + std::abs(mu) * fro_norm(H));
  for (const auto& v : basis) {
    CVector mv = matvec(pencil, v);
    if (vec_distance(mv, vscale(z, v)) > res_tol)
      throw std::invalid_argument("seed basis vector fails the pencil eigen-residual");
  }

  SpectralSeed seed;
  seed.mu = mu;
  seed.z = z;
  seed.A = A;
  seed.B = B;
  seed.phi0 = vadd(vscale(A, basis[0]), vscale(B, basis[1]));
  seed.basis = std::move(basis);
  return seed;
}

} // namespace

SpectralSeed make_seed(const CMatrix& U0, const CMatrix& H, cplx mu,
                       const SeedSelection& sel, cplx A, cplx B) {
  EigenSystem es = solve_seed_spectrum(U0, H, mu);
  auto [z, basis] = pick_degenerate_basis(es, sel, seed_cluster_tol(U0, H, mu));
  return assemble(U0, H, mu, z, std::move(basis), A, B);
}

SpectralSeed make_seed_with_basis(const CMatrix& U0, const CMatrix& H, cplx mu,
                                  const std::vector<CVector>& basis_hint,
                                  cplx A, cplx B) {
  if (basis_hint.size() < 2)
    throw std::invalid_argument("basis hint must supply at least 2 vectors");
  for (std::size_t i = 0; i < basis_hint.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      cplx g = vdot(basis_hint[i], basis_hint[j]);
      cplx want = (i == j) ? cplx(1, 0) : cplx(0, 0);
      if (std::abs(g - want) > 1e-10)
        throw std::invalid_argument("basis hint is not orthonormal");
    }
  CMatrix pencil = U0 + (-mu) * H;
  CVector mv = matvec(pencil, basis_hint[0]);
  cplx z = vdot(basis_hint[0], mv);
  return assemble(U0, H, mu, z, basis_hint, A, B);
}

} // namespace nlvn
