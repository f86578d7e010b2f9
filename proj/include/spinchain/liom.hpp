#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spinchain/eig.hpp"
#include "spinchain/model.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

/// H_int = S^x_{imp+1} S^x_imp + S^y_{imp+1} S^y_imp for a boundary
/// impurity at site `imp` (default chain end).
inline PauliOperator liom_interaction(int L, int imp = 0) {
  return flip_flop(L, imp + 1, imp);
}

/// Bulk spec for the LIOM study: XXZ chain on every site except `imp`,
/// which carries no couplings (the impurity field V S^z_imp and the
/// coupling eps H_int are added separately).
inline HamiltonianSpec liom_bulk(int L, double delta, double W, uint64_t seed, int imp = 0) {
  HamiltonianSpec spec = build_bulk(L, delta, W, seed);
  std::erase_if(spec.bonds, [imp](const Bond& b) { return b.i == imp || b.j == imp; });
  spec.fields[imp] = 0;
  spec.tag = "liom_bulk";
  return spec;
}

inline constexpr std::size_t kDefaultStringCap = 50'000'000;

namespace detail {
inline PauliOperator sigma_z(int L, int site) {
  PauliOperator s(L);
  s.add(PauliString::site(L, site, Pauli::Z), 1.0);
  return s;
}
}  // namespace detail

/// Nested commutators R_k = i^k Ad_{H_bulk}^k H_int, k = 0..K, with the
/// normalized norms ||R_k||^2 = Tr(R_k^2)/2^L and string counts.
struct CommutatorLadder {
  int L = 0;
  int imp = 0;
  std::vector<PauliOperator> ops;       // R_0 .. R_K
  std::vector<double> norms;            // ||R_k||^2
  std::vector<double> sigma;            // sigma_j = i Tr[R_0 sigma^z R_{2j+1}]/2^L
  std::vector<std::size_t> string_count;

  int depth() const { return int(ops.size()) - 1; }
};

inline CommutatorLadder build_ladder(const HamiltonianSpec& bulk, const PauliOperator& h_int,
                                     int K, int imp = 0,
                                     std::size_t string_cap = kDefaultStringCap) {
  if (K < 1) throw std::invalid_argument("build_ladder: K >= 1 required");
  const PauliOperator hb = to_pauli(bulk);
  const PauliOperator sz0 = detail::sigma_z(bulk.L, imp);
  if (commutator(sz0, hb).size() != 0)
    throw std::invalid_argument("build_ladder: bulk does not commute with sigma^z at impurity");
  {
    PauliOperator anti = sz0 * h_int * sz0 + h_int;
    anti.prune(1e-12);
    if (anti.size() != 0)
      throw std::invalid_argument("build_ladder: H_int must anticommute with impurity sigma^z");
  }
  CommutatorLadder lad;
  lad.L = bulk.L;
  lad.imp = imp;
  lad.ops.push_back(h_int);
  for (int k = 1; k <= K; ++k) {
    PauliOperator r = cplx(0, 1) * commutator(hb, lad.ops.back());
    r.realify();
    if (r.size() > string_cap)
      throw std::runtime_error("build_ladder: string cap exceeded at k=" + std::to_string(k));
    lad.ops.push_back(std::move(r));
  }
  for (const auto& r : lad.ops) {
    lad.norms.push_back(norm_sq(r));
    lad.string_count.push_back(r.size());
  }
  // sigma-traces of odd total index 2j+1, evaluated on a balanced split
  // a + b = 2j+1 (a even) so only ladder depth K is required:
  // Tr[R_a sz R_b] = (-1)^a Tr[R_0 sz R_{a+b}] under ad transfer
  for (int j = 0; 2 * j + 1 <= 2 * K - 1 && j < K; ++j) {
    const int a = (j % 2 == 0) ? j : j + 1;
    const int b = 2 * j + 1 - a;
    PauliOperator m = cplx(0, 1) * (sz0 * lad.ops[std::size_t(b)]);
    lad.sigma.push_back(trace_product(lad.ops[std::size_t(a)], m));
  }
  return lad;
}

/// Directions D_n of the recursive construction: the n-th order correction
/// is (eps/V^n) D_n, with D_1 = H_int and D_n = -sigma^z_imp [H_bulk, D_{n-1}].
struct DirectionBasis {
  int L = 0;
  int imp = 0;
  std::vector<PauliOperator> dirs;  // D_1 .. D_M (index 0 = D_1)

  const PauliOperator& dir(int n) const { return dirs.at(std::size_t(n) - 1); }
  int depth() const { return int(dirs.size()); }
};

inline DirectionBasis build_directions(const HamiltonianSpec& bulk, const PauliOperator& h_int,
                                       int M, int imp = 0,
                                       std::size_t string_cap = kDefaultStringCap) {
  const PauliOperator hb = to_pauli(bulk);
  const PauliOperator sz0 = detail::sigma_z(bulk.L, imp);
  DirectionBasis db;
  db.L = bulk.L;
  db.imp = imp;
  db.dirs.push_back(h_int);
  for (int n = 2; n <= M; ++n) {
    PauliOperator d = cplx(-1, 0) * (sz0 * commutator(hb, db.dirs.back()));
    d.realify();
    if (d.size() > string_cap)
      throw std::runtime_error("build_directions: string cap exceeded at n=" + std::to_string(n));
    db.dirs.push_back(std::move(d));
  }
  return db;
}

/// Interference-exact norm of the order-N perturbative charge, assembled
/// from ladder traces alone. The diagonal families reduce to norms,
///   ||Q_N||^2 = 1/4 + eps^2 sum_k (n1 + n2) ||R_k||^2 / V^{2k+2} + cross,
/// and the odd-even cross pairings reduce to the sigma-traces
/// sigma_j = i Tr[R_0 sigma^z R_{2j+1}]/2^L:
///   cross = 2 eps^2 sum_j (-1)^j m(j) sigma_j / V^{2j+3}.
inline double interference_norm_sq(const std::vector<double>& norms,
                                   const std::vector<double>& sigma, int N, double eps,
                                   double V) {
  if (int(norms.size()) < 2 * N + 1)
    throw std::invalid_argument("interference_norm_sq: ladder depth < 2N+1");
  if (N > 0 && int(sigma.size()) < 2 * N)
    throw std::invalid_argument("interference_norm_sq: sigma traces < 2N");
  double acc = 0;
  for (int k = 0; k <= 2 * N; ++k) {
    // odd-direction family: pairs (q,q') in [0,N]^2 with q+q' = k
    const int n1 = std::min(k, N) - std::max(0, k - N) + 1;
    // even-direction family: pairs (q,q') in [0,N-1]^2 with q+q' = k-1
    const int s = k - 1;
    const int n2 = (s >= 0 && s <= 2 * N - 2) ? std::min(s, N - 1) - std::max(0, s - N + 1) + 1 : 0;
    acc += double(n1 + n2) * norms[std::size_t(k)] / std::pow(V, 2 * k + 2);
  }
  for (int j = 0; j <= 2 * N - 1; ++j) {
    // cross pairings (q in [0,N], q' in [0,N-1]) with q+q' = j
    const int m = std::min(j, N) - std::max(0, j - N + 1) + 1;
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += 2.0 * sgn * double(m) * sigma[std::size_t(j)] / std::pow(V, 2 * j + 3);
  }
  return 0.25 + eps * eps * acc;
}

inline double interference_norm_sq(const CommutatorLadder& lad, int N, double eps, double V) {
  return interference_norm_sq(lad.norms, lad.sigma, N, eps, V);
}

/// Perturbative or variational LIOM approximant.
struct BirkhoffCharge {
  int N = 0;  // truncation order: expansion carries directions D_1 .. D_{2N+1}
  double eps = 0, V = 0;
  bool variational = false;
  PauliOperator op;            // explicit charge
  std::vector<double> coeffs;  // c_n multiplying eps D_n, n = 1..2N+1
  double norm_sq_val = 0;      // brute-force ||Q||^2
  double norm_interference = 0;  // ladder-norm route (perturbative only)
  double gamma = 0;            // residual ||i[Q,H]|| to leading order in eps
  int effective_terms = 0;     // directions actually used (variational)
};

namespace detail {
/// Residual of the charge Q = S^z_imp + eps sum c_n D_n with
/// H = H_bulk + V S^z_imp + eps H_int, to linear order in eps:
/// [Q,H]/eps = sigma^z_imp (D_1 + sum_n c_n (D_{n+1} - V D_n)).
/// The unitary sigma^z factor drops out of every norm and inner product.
inline PauliOperator residual_operator(const DirectionBasis& db,
                                       const std::vector<double>& coeffs, double V) {
  const int M = int(coeffs.size());
  if (db.depth() < M + 1)
    throw std::invalid_argument("residual_operator: need directions through M+1");
  PauliOperator res = db.dir(1);
  for (int n = 1; n <= M; ++n) {
    res += coeffs[std::size_t(n) - 1] * db.dir(n + 1);
    res += cplx(-V * coeffs[std::size_t(n) - 1], 0) * db.dir(n);
  }
  return res;
}
}  // namespace detail

/// Order-N charge from the recursion, with the interference norm
/// cross-checkable against the brute-force norm of the explicit operator.
inline BirkhoffCharge birkhoff_charge(const DirectionBasis& db, const CommutatorLadder& lad,
                                      int N, double eps, double V) {
  const int M = 2 * N + 1;
  if (db.depth() < M + 1 || lad.depth() < M)
    throw std::invalid_argument("birkhoff_charge: insufficient ladder depth");
  BirkhoffCharge q;
  q.N = N;
  q.eps = eps;
  q.V = V;
  q.op = spin_op(db.L, db.imp, Pauli::Z);
  for (int n = 1; n <= M; ++n) {
    const double c = std::pow(V, -n);
    q.coeffs.push_back(c);
    q.op += cplx(eps * c, 0) * db.dir(n);
  }
  q.effective_terms = M;
  q.norm_sq_val = norm_sq(q.op, false);
  q.norm_interference = interference_norm_sq(lad, N, eps, V);
  q.gamma = eps * std::sqrt(norm_sq(detail::residual_operator(db, q.coeffs, V), false));
  return q;
}

/// Perturbative residual curve Gamma_N = eps ||R_{2N+1}|| / V^{2N+1} from
/// ladder norms alone, with the located minimum.
struct ResidualCurve {
  std::vector<double> gamma;  // index N = 0..N_max
  int n_argmin = 0;
  double gamma_min = 0;
};

inline ResidualCurve residual_curve(const std::vector<double>& norms, double V, double eps,
                                    int N_max) {
  if (int(norms.size()) < 2 * N_max + 2)
    throw std::invalid_argument("residual_curve: ladder depth < 2 N_max + 1");
  ResidualCurve out;
  for (int N = 0; N <= N_max; ++N)
    out.gamma.push_back(eps * std::sqrt(norms[std::size_t(2 * N + 1)]) /
                        std::pow(V, 2 * N + 1));
  out.n_argmin = int(std::min_element(out.gamma.begin(), out.gamma.end()) - out.gamma.begin());
  out.gamma_min = out.gamma[std::size_t(out.n_argmin)];
  return out;
}

inline ResidualCurve residual_curve(const CommutatorLadder& lad, double V, double eps,
                                    int N_max) {
  return residual_curve(lad.norms, V, eps, N_max);
}

/// Residual of the pair-constrained variational ansatz, where each
/// even/odd direction pair D_{2k+1}, D_{2k+2} shares one coefficient
/// alpha_k (the odd member carries -alpha_k/V, which is where the
/// unconstrained minimum sits at large V). With u_k = alpha_k -
/// V^2 alpha_{k+1} and alpha_{N+1} = 0 the objective closes in the ladder
/// norms alone:
///   gamma^2/eps^2 = (1 + V alpha_0)^2
///                   + sum_{k,q=0}^N u_k u_q ||R_{k+q+1}||^2,
/// a small positive-definite quadratic minimized by one dense solve.
inline double paired_variational_gamma(const std::vector<double>& norms, int N, double eps,
                                       double V) {
  if (int(norms.size()) < 2 * N + 2)
    throw std::invalid_argument("paired_variational_gamma: ladder depth < 2N+1");
  const int n = N + 1;
  Eigen::MatrixXd g(n, n);
  for (int k = 0; k < n; ++k)
    for (int q = 0; q < n; ++q) g(k, q) = norms[std::size_t(k + q + 1)];
  Eigen::VectorXd a(n);
  for (int j = 0; j < n; ++j) a[j] = std::pow(V, 2 * j + 1);  // V alpha_0 = a . u
  const Eigen::VectorXd u = (g + a * a.transpose()).fullPivLu().solve(-a);
  const double lin = 1.0 + a.dot(u);
  return eps * std::sqrt(std::max(0.0, lin * lin + u.dot(g * u)));
}

inline double paired_variational_gamma(const CommutatorLadder& lad, int N, double eps,
                                       double V) {
  return paired_variational_gamma(lad.norms, N, eps, V);
}

/// Variational charge over the same directions D_1 .. D_{2N+1}: minimizes
/// ||[Q,H]||^2 = eps^2 ||D_1 + sum c_n (D_{n+1} - V D_n)||^2 by stabilized
/// (twice-reorthogonalized) Gram-Schmidt over the span of the basis
/// operators B_n = D_{n+1} - V D_n, never forming the ill-conditioned
/// normal equations. Directions that lose independence are dropped and
/// reported through effective_terms.
inline BirkhoffCharge variational_charge(const DirectionBasis& db, int N, double eps, double V,
                                         double dep_tol = 1e-8) {
  const int M = 2 * N + 1;
  if (db.depth() < M + 1)
    throw std::invalid_argument("variational_charge: need directions through 2N+2");
  const PauliOperator& target = db.dir(1);  // minimize ||target + B c||

  std::vector<PauliOperator> basis;  // raw B_n
  for (int n = 1; n <= M; ++n) {
    PauliOperator b = db.dir(n + 1);
    b += cplx(-V, 0) * db.dir(n);
    basis.push_back(std::move(b));
  }

  // MGS with one reorthogonalization pass; r holds the triangular factor
  std::vector<PauliOperator> ortho;
  std::vector<std::vector<double>> r(basis.size());
  std::vector<int> kept;
  for (std::size_t n = 0; n < basis.size(); ++n) {
    PauliOperator v = basis[n];
    const double orig = std::sqrt(frobenius_inner(v, v));
    std::vector<double> rn(ortho.size(), 0.0);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < ortho.size(); ++j) {
        const double p = frobenius_inner(ortho[j], v);
        rn[j] += p;
        v += cplx(-p, 0) * ortho[j];
      }
    const double nv = std::sqrt(frobenius_inner(v, v));
    if (nv < dep_tol * std::max(orig, 1e-300)) continue;  // dependent direction
    v *= cplx(1.0 / nv, 0);
    rn.push_back(nv);
    r[ortho.size()] = std::move(rn);
    ortho.push_back(std::move(v));
    kept.push_back(int(n));
  }

  // least squares: c solves R c = -Q^T target in the kept subspace
  const std::size_t m = ortho.size();
  std::vector<double> qt(m);
  for (std::size_t j = 0; j < m; ++j) qt[j] = -frobenius_inner(ortho[j], target);
  std::vector<double> c(m, 0.0);
  for (std::size_t j = m; j-- > 0;) {
    double acc = qt[j];
    for (std::size_t i = j + 1; i < m; ++i) acc -= r[i][j] * c[i];
    c[j] = acc / r[j][j];
  }

  BirkhoffCharge q;
  q.N = N;
  q.eps = eps;
  q.V = V;
  q.variational = true;
  q.effective_terms = int(m);
  q.coeffs.assign(std::size_t(M), 0.0);
  for (std::size_t j = 0; j < m; ++j) q.coeffs[std::size_t(kept[j])] = c[j];

  q.op = spin_op(db.L, db.imp, Pauli::Z);
  for (int n = 1; n <= M; ++n)
    q.op += cplx(eps * q.coeffs[std::size_t(n) - 1], 0) * db.dir(n);
  q.norm_sq_val = norm_sq(q.op, false);
  q.gamma = eps * std::sqrt(norm_sq(detail::residual_operator(db, q.coeffs, V), false));
  return q;
}

/// Exact-resummation norm in the eigenbasis of the decoupled Hamiltonian
/// H_bulk + V S^z_imp over the full 2^L basis:
///   ||Q||^2 = 1/4 + (eps^2 / 2^L) sum_{a != b} |<a|H_int|b>|^2/(E_a-E_b)^2.
/// Exactly degenerate pairs with coupling weight are flagged; the sum is
/// reported with them skipped alongside their count.
struct ResummedNorm {
  double norm_sq = 0;        // 1/4 + eps^2 chi, degenerate terms skipped
  double chi = 0;            // eigenstate-average fidelity susceptibility
  std::size_t degenerate_terms = 0;
  double conserved_fraction_proxy = 0;  // 1/(4 ||Q||^2)
};

inline ResummedNorm resummed_norm(const HamiltonianSpec& bulk, const PauliOperator& h_int,
                                  double eps, double V, int imp = 0) {
  const SpinBasis full = build_basis(bulk.L);
  Eigen::MatrixXd h = to_dense(bulk, full);
  h += to_dense(cplx(V, 0) * spin_op(bulk.L, imp, Pauli::Z), full);
  EigenSystem es = eig_full(h, true);
  const Eigen::MatrixXd w =
      es.vectors.transpose() * (to_dense(h_int, full) * es.vectors);
  const Eigen::Index n = es.dim();
  ResummedNorm out;
  double acc = 0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a == b) continue;
      const double el = w(a, b);
      if (el == 0) continue;
      const double de = es.values[a] - es.values[b];
      if (std::abs(de) < 1e-10) {
        ++out.degenerate_terms;
        continue;
      }
      acc += el * el / (de * de);
    }
  out.chi = acc / std::pow(2.0, bulk.L);
  out.norm_sq = 0.25 + eps * eps * out.chi;
  out.conserved_fraction_proxy = 0.25 / out.norm_sq;
  return out;
}

}  // namespace spinchain
