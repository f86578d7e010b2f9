#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/basis.hpp"
#include "spinchain/pauli.hpp"
#include "spinchain/rng.hpp"

namespace spinchain {

struct Bond {
  int i = 0, j = 0;
  double jx = 0, jy = 0, jz = 0;
};

/// Three-site term c * S^z_a (S^x_i S^x_j + S^y_i S^y_j); appears only in
/// Schrieffer-Wolff transformed Hamiltonians.
struct Triple {
  int a = 0, i = 0, j = 0;
  double c = 0;
};

/// Symbolic coupling list from which dense matrices or Pauli forms are
/// generated. Reconstruction is deterministic from (seed, parameters).
struct HamiltonianSpec {
  int L = 0;
  std::vector<Bond> bonds;
  std::vector<double> fields;  // longitudinal field per site (h_j + V_j)
  std::vector<Triple> triples;

  // provenance
  uint64_t seed = 0;
  double W = 0, delta = 1;
  std::vector<int> impurity_sites;
  std::vector<double> impurity_strengths;
  std::string tag;

  void validate() const {
    if (int(fields.size()) != L)
      throw std::invalid_argument("HamiltonianSpec: field list length != L");
    for (const auto& b : bonds)
      if (b.i < 0 || b.i >= L || b.j < 0 || b.j >= L || b.i == b.j)
        throw std::invalid_argument("HamiltonianSpec: bad bond indices");
    for (const auto& t : triples)
      if (t.a < 0 || t.a >= L || t.i < 0 || t.i >= L || t.j < 0 || t.j >= L ||
          t.a == t.i || t.a == t.j || t.i == t.j)
        throw std::invalid_argument("HamiltonianSpec: bad triple indices");
  }
};

inline PauliOperator to_pauli(const HamiltonianSpec& spec) {
  spec.validate();
  PauliOperator h(spec.L);
  for (const auto& b : spec.bonds) {
    auto term = [&](Pauli p, double j) {
      if (j == 0) return;
      auto s = PauliString::identity(spec.L);
      s.set(b.i, p);
      s.set(b.j, p);
      h.add(s, 0.25 * j);
    };
    term(Pauli::X, b.jx);
    term(Pauli::Y, b.jy);
    term(Pauli::Z, b.jz);
  }
  for (int j = 0; j < spec.L; ++j)
    if (spec.fields[j] != 0) h.add(PauliString::site(spec.L, j, Pauli::Z), 0.5 * spec.fields[j]);
  for (const auto& t : spec.triples) {
    for (Pauli p : {Pauli::X, Pauli::Y}) {
      auto s = PauliString::identity(spec.L);
      s.set(t.a, Pauli::Z);
      s.set(t.i, p);
      s.set(t.j, p);
      h.add(s, 0.125 * t.c);
    }
  }
  return h;
}

/// Real symmetric matrix of the spec in the given basis. Fast path for the
/// magnetization-conserving couplings used throughout (jx = jy).
inline Eigen::MatrixXd to_dense(const HamiltonianSpec& spec, const SpinBasis& basis) {
  spec.validate();
  if (spec.L != basis.L) throw std::invalid_argument("to_dense: basis size mismatch");
  for (const auto& b : spec.bonds)
    if (std::abs(b.jx - b.jy) > 1e-15)
      throw std::invalid_argument("to_dense: jx != jy breaks the S^z sector; unsupported");
  const auto n = basis.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  auto sz = [](uint64_t s, int j) { return ((s >> j) & 1u) ? 0.5 : -0.5; };
  for (std::size_t col = 0; col < n; ++col) {
    const uint64_t s = basis.states[col];
    double diag = 0;
    for (int j = 0; j < spec.L; ++j) diag += spec.fields[j] * sz(s, j);
    for (const auto& b : spec.bonds) diag += b.jz * sz(s, b.i) * sz(s, b.j);
    m(col, col) += diag;
    for (const auto& b : spec.bonds) {
      if (b.jx == 0) continue;
      if (((s >> b.i) & 1u) == ((s >> b.j) & 1u)) continue;
      const uint64_t t = s ^ ((uint64_t(1) << b.i) | (uint64_t(1) << b.j));
      m(basis.index.at(t), col) += 0.5 * b.jx;
    }
    for (const auto& t3 : spec.triples) {
      if (((s >> t3.i) & 1u) == ((s >> t3.j) & 1u)) continue;
      const uint64_t t = s ^ ((uint64_t(1) << t3.i) | (uint64_t(1) << t3.j));
      m(basis.index.at(t), col) += 0.5 * t3.c * sz(s, t3.a);
    }
  }
  return m;
}

/// Nearest-neighbour XXZ chain, open boundaries, Jx = Jy = 1, Jz = delta,
/// fields h_j i.i.d. uniform on [-W, W] from the seeded stream.
inline HamiltonianSpec build_bulk(int L, double delta, double W, uint64_t seed) {
  if (L < 2) throw std::invalid_argument("build_bulk: L >= 2 required");
  if (W < 0) throw std::invalid_argument("build_bulk: W >= 0 required");
  HamiltonianSpec spec;
  spec.L = L;
  spec.seed = seed;
  spec.W = W;
  spec.delta = delta;
  for (int j = 0; j + 1 < L; ++j) spec.bonds.push_back({j, j + 1, 1.0, 1.0, delta});
  Rng rng(seed);
  spec.fields.resize(L);
  for (int j = 0; j < L; ++j) spec.fields[j] = W == 0 ? 0.0 : rng.uniform(-W, W);
  spec.tag = "bulk";
  return spec;
}

/// Adds V to the field on each listed site; with jitter, each strength is
/// drawn uniform on [V/2, 3V/2] from the seeded stream.
inline HamiltonianSpec add_impurities(HamiltonianSpec spec, const std::vector<int>& sites,
                                      double V, bool jitter = false, uint64_t seed = 0) {
  Rng rng(seed);
  std::vector<int> seen;
  for (int site : sites) {
    if (site < 0 || site >= spec.L)
      throw std::invalid_argument("add_impurities: site out of range");
    if (std::find(seen.begin(), seen.end(), site) != seen.end())
      throw std::invalid_argument("add_impurities: duplicate site");
    seen.push_back(site);
    const double v = jitter ? rng.uniform(0.5 * V, 1.5 * V) : V;
    spec.fields[site] += v;
    spec.impurity_sites.push_back(site);
    spec.impurity_strengths.push_back(v);
  }
  return spec;
}

/// 0-based central site, matching ell = (L+1)/2 for odd L and L/2 + 1 for
/// even L in 1-based labels.
inline int central_site(int L) { return (L % 2) ? (L - 1) / 2 : L / 2; }

struct SWResult {
  HamiltonianSpec h_tilde;     // commutes with S^z_ell exactly
  PauliOperator generator_a;   // unitary generator through order 1/V^2
};

/// Schrieffer-Wolff transformed Hamiltonian for a single impurity V at the
/// interior site ell of the bulk spec (spec must not already contain the
/// impurity field). Correct through O(1/V).
inline SWResult schrieffer_wolff(const HamiltonianSpec& bulk, int ell, double V) {
  bulk.validate();
  if (ell <= 0 || ell >= bulk.L - 1)
    throw std::invalid_argument("schrieffer_wolff: impurity must be interior");
  if (V == 0) throw std::invalid_argument("schrieffer_wolff: V must be nonzero");

  SWResult out;
  HamiltonianSpec& ht = out.h_tilde;
  ht.L = bulk.L;
  ht.seed = bulk.seed;
  ht.W = bulk.W;
  ht.delta = bulk.delta;
  ht.impurity_sites = {ell};
  ht.impurity_strengths = {V};
  ht.tag = "sw";
  ht.fields = bulk.fields;
  for (const auto& b : bulk.bonds) {
    const bool touches = (b.i == ell || b.j == ell);
    if (!touches) {
      ht.bonds.push_back(b);
    } else {
      // xy part is rotated away; the zz part survives as Delta S^z_{ell+-1} S^z_ell
      ht.bonds.push_back({b.i, b.j, 0.0, 0.0, b.jz});
    }
  }
  // second-order scalar corrections: virtual impurity flips push the
  // S^z_ell = +1/2 block up and the -1/2 block down, giving boundary
  // fields -1/(4V) and the shifted impurity field V + 1/(2V)
  ht.fields[ell - 1] -= 1.0 / (4.0 * V);
  ht.fields[ell + 1] -= 1.0 / (4.0 * V);
  ht.fields[ell] += V + 1.0 / (2.0 * V);
  // virtual flip-flop across the impurity
  ht.triples.push_back({ell, ell - 1, ell + 1, 1.0 / V});

  // Generator A through 1/V^2. The 1/V term rotates away the bare
  // impurity flip-flop; the 1/V^2 terms cancel the off-diagonal pieces it
  // regenerates from the impurity-diagonal remainder H_diag. The latter
  // requires, besides the -(i/V^2) [.,H_diag] commutators, an extra
  // -(1/V^2) K contribution from [S^{x,y}_ell, H_diag] with
  // K = jz (S^z_{ell-1}+S^z_{ell+1}) + h_ell.
  const int L = bulk.L;
  HamiltonianSpec diag = bulk;
  for (auto& b : diag.bonds)
    if (b.i == ell || b.j == ell) b.jx = b.jy = 0.0;
  const PauliOperator h_diag = to_pauli(diag);
  const PauliOperator sx_nb = spin_op(L, ell - 1, Pauli::X) + spin_op(L, ell + 1, Pauli::X);
  const PauliOperator sy_nb = spin_op(L, ell - 1, Pauli::Y) + spin_op(L, ell + 1, Pauli::Y);
  PauliOperator kop(L);
  kop.add(PauliString::identity(L), bulk.fields[ell]);
  for (const auto& b : bulk.bonds) {
    if (b.i == ell) kop += b.jz * spin_op(L, b.j, Pauli::Z);
    if (b.j == ell) kop += b.jz * spin_op(L, b.i, Pauli::Z);
  }
  const cplx mi(0, -1);
  const double v2 = V * V;
  PauliOperator inner_y =
      (1.0 / V) * sx_nb + (mi / v2) * commutator(sy_nb, h_diag) + (-1.0 / v2) * (kop * sx_nb);
  PauliOperator inner_x =
      (-1.0 / V) * sy_nb + (mi / v2) * commutator(sx_nb, h_diag) + (1.0 / v2) * (kop * sy_nb);
  out.generator_a =
      spin_op(L, ell, Pauli::Y) * inner_y + spin_op(L, ell, Pauli::X) * inner_x;
  out.generator_a.prune();
  return out;
}

/// One frozen-impurity block of the effective model, with the impurity site
/// removed (sites above ell shift down by one). For s = +1/2 this is
/// exactly the weak-link Hamiltonian H': two bare blocks joined by a
/// 1/(2V) flip-flop bond plus Delta/2 boundary fields. The 1/(4V) boundary
/// fields of the transformed Hamiltonian are dropped here.
inline HamiltonianSpec effective_block(const HamiltonianSpec& bulk, int ell, double V,
                                       double s) {
  bulk.validate();
  if (ell <= 0 || ell >= bulk.L - 1)
    throw std::invalid_argument("effective_block: impurity must be interior");
  if (V == 0) throw std::invalid_argument("effective_block: V must be nonzero");
  HamiltonianSpec eff;
  eff.L = bulk.L - 1;
  eff.seed = bulk.seed;
  eff.W = bulk.W;
  eff.delta = bulk.delta;
  eff.tag = "effective";
  auto relabel = [&](int j) { return j < ell ? j : j - 1; };
  for (const auto& b : bulk.bonds) {
    if (b.i == ell || b.j == ell) continue;
    eff.bonds.push_back({relabel(b.i), relabel(b.j), b.jx, b.jy, b.jz});
  }
  eff.fields.clear();
  for (int j = 0; j < bulk.L; ++j)
    if (j != ell) eff.fields.push_back(bulk.fields[j]);
  // weak bond and boundary fields from the frozen impurity spin s
  eff.bonds.push_back({ell - 1, ell, s / V, s / V, 0.0});
  eff.fields[ell - 1] += 2.0 * s * bulk.delta / 2.0;
  eff.fields[ell] += 2.0 * s * bulk.delta / 2.0;
  return eff;
}

/// Standalone effective model with fresh disorder: blocks of L_left and
/// L_right sites joined by a 1/(2V) weak bond (frozen spin s = +1/2).
inline HamiltonianSpec effective_model(int L_left, int L_right, double delta, double W,
                                       double V, uint64_t seed) {
  HamiltonianSpec bulk = build_bulk(L_left + L_right + 1, delta, W, seed);
  return effective_block(bulk, L_left, V, 0.5);
}

/// Chain of uniform blocks of `block_len` strong bonds separated by weak
///// 1/(2V) bonds (the finite-density effective geometry): bond k is weak
/// when (k+1) % (block_len+1) == 0 counting bonds from 0... weak bonds are
/// placed after every `block_len` sites.
inline HamiltonianSpec weak_link_chain(int L, int block_len, double delta, double W,
                                       double V, uint64_t seed) {
  if (block_len < 2) throw std::invalid_argument("weak_link_chain: block_len >= 2");
  if (V == 0) throw std::invalid_argument("weak_link_chain: V must be nonzero");
  HamiltonianSpec spec = build_bulk(L, delta, W, seed);
  spec.tag = "weak_link";
  for (auto& b : spec.bonds) {
    if ((b.j % block_len) == 0) {  // bond (block_len-1, block_len), etc.
      b.jx = b.jy = 1.0 / (2.0 * V);
      b.jz = 0.0;
      spec.fields[b.i] += delta / 2.0;
      spec.fields[b.j] += delta / 2.0;
    }
  }
  return spec;
}

/// One (HamiltonianSpec, energy offset) pair per frozen-impurity
/// configuration.
struct FoldingPlan {
  struct Block {
    HamiltonianSpec spec;
    double offset = 0;
  };
  std::vector<Block> blocks;
};

/// Folding plan for a single impurity V at site ell of the bulk spec: two
/// blocks s = +-1/2 with conserved-charge energies s (V + h_ell + 1/(2V)).
inline FoldingPlan single_impurity_folding_plan(const HamiltonianSpec& bulk, int ell,
                                                double V) {
  FoldingPlan plan;
  for (double s : {0.5, -0.5}) {
    double offset = s * (V + bulk.fields[ell] + 1.0 / (2.0 * V));
    plan.blocks.push_back({effective_block(bulk, ell, V, s), offset});
  }
  return plan;
}

/// Union of {block eigenvalues + offset}, globally sorted ascending.
inline std::vector<double> fold_spectra(const std::vector<std::vector<double>>& spectra,
                                        const std::vector<double>& offsets) {
  if (spectra.size() != offsets.size())
    throw std::invalid_argument("fold_spectra: spectra/offsets size mismatch");
  std::vector<double> out;
  for (std::size_t b = 0; b < spectra.size(); ++b)
    for (double e : spectra[b]) out.push_back(e + offsets[b]);
  std::sort(out.begin(), out.end());
  return out;
}

// ---- serialization (decimal round-trip at 17 significant digits) ----

inline std::string spec_text(const HamiltonianSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "spinchain-spec 1\n";
  os << "L " << spec.L << "\n";
  os << "seed " << spec.seed << "\n";
  os << "W " << spec.W << "\n";
  os << "delta " << spec.delta << "\n";
  os << "tag " << (spec.tag.empty() ? "-" : spec.tag) << "\n";
  os << "impurities " << spec.impurity_sites.size();
  for (std::size_t k = 0; k < spec.impurity_sites.size(); ++k)
    os << " " << spec.impurity_sites[k] << " " << spec.impurity_strengths[k];
  os << "\n";
  os << "bonds " << spec.bonds.size() << "\n";
  for (const auto& b : spec.bonds)
    os << b.i << " " << b.j << " " << b.jx << " " << b.jy << " " << b.jz << "\n";
  os << "fields " << spec.fields.size() << "\n";
  for (double h : spec.fields) os << h << "\n";
  os << "triples " << spec.triples.size() << "\n";
  for (const auto& t : spec.triples) os << t.a << " " << t.i << " " << t.j << " " << t.c << "\n";
  return os.str();
}

inline HamiltonianSpec parse_spec_text(std::istream& is) {
  HamiltonianSpec spec;
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "spinchain-spec" || version != 1)
    throw std::runtime_error("parse_spec_text: bad header");
  std::string key;
  std::size_t n = 0;
  is >> key >> spec.L;
  is >> key >> spec.seed;
  is >> key >> spec.W;
  is >> key >> spec.delta;
  is >> key >> spec.tag;
  if (spec.tag == "-") spec.tag.clear();
  is >> key >> n;
  spec.impurity_sites.resize(n);
  spec.impurity_strengths.resize(n);
  for (std::size_t k = 0; k < n; ++k) is >> spec.impurity_sites[k] >> spec.impurity_strengths[k];
  is >> key >> n;
  spec.bonds.resize(n);
  for (auto& b : spec.bonds) is >> b.i >> b.j >> b.jx >> b.jy >> b.jz;
  is >> key >> n;
  spec.fields.resize(n);
  for (auto& h : spec.fields) is >> h;
  is >> key >> n;
  spec.triples.resize(n);
  for (auto& t : spec.triples) is >> t.a >> t.i >> t.j >> t.c;
  if (!is) throw std::runtime_error("parse_spec_text: truncated input");
  spec.validate();
  return spec;
}

inline void save_spec(const HamiltonianSpec& spec, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_spec: cannot open " + path);
  f << spec_text(spec);
}

inline HamiltonianSpec load_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_spec: cannot open " + path);
  return parse_spec_text(f);
}

/// FNV-1a over the serialized text; keys the eigen-cache.
inline uint64_t spec_hash(const HamiltonianSpec& spec) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : spec_text(spec)) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace spinchain
