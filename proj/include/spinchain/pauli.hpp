#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/basis.hpp"

namespace spinchain {

using cplx = std::complex<double>;

enum class Pauli : uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// Length-L word over {I,X,Y,Z}, packed 2 bits per site (L <= 32).
struct PauliString {
  int L = 0;
  uint64_t word = 0;  // bits [2j, 2j+1] = code of site j

  Pauli at(int j) const { return Pauli((word >> (2 * j)) & 3u); }

  void set(int j, Pauli p) {
    word = (word & ~(uint64_t(3) << (2 * j))) | (uint64_t(uint8_t(p)) << (2 * j));
  }

  bool operator<(const PauliString& o) const { return word < o.word; }
  bool operator==(const PauliString& o) const { return L == o.L && word == o.word; }

  static PauliString identity(int L) { return PauliString{L, 0}; }

  /// Single non-identity site.
  static PauliString site(int L, int j, Pauli p) {
    PauliString s{L, 0};
    s.set(j, p);
    return s;
  }

  /// Parse e.g. "IXYZ" (character k = site k).
  static PauliString parse(const std::string& text) {
    PauliString s{int(text.size()), 0};
    for (std::size_t j = 0; j < text.size(); ++j) {
      switch (text[j]) {
        case 'I': break;
        case 'X': s.set(int(j), Pauli::X); break;
        case 'Y': s.set(int(j), Pauli::Y); break;
        case 'Z': s.set(int(j), Pauli::Z); break;
        default: throw std::invalid_argument("PauliString::parse: bad character");
      }
    }
    return s;
  }

  std::string str() const {
    std::string out(L, 'I');
    static const char names[] = "IXYZ";
    for (int j = 0; j < L; ++j) out[j] = names[int(at(j))];
    return out;
  }
};

namespace detail {
// result[a][b], iphase[a][b]: sigma_a sigma_b = i^{iphase} sigma_result
inline constexpr uint8_t pauli_prod_code[4][4] = {
    {0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
inline constexpr uint8_t pauli_prod_iphase[4][4] = {
    {0, 0, 0, 0}, {0, 0, 1, 3}, {0, 3, 0, 1}, {0, 1, 3, 0}};

inline cplx ipow(unsigned k) {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[k & 3u];
}
}  // namespace detail

/// sigma_a sigma_b site-wise; returns (phase, word), phase a power of i.
inline std::pair<cplx, PauliString> pauli_product(const PauliString& a, const PauliString& b) {
  if (a.L != b.L) throw std::invalid_argument("pauli_product: length mismatch");
  PauliString out{a.L, 0};
  unsigned iph = 0;
  uint64_t nz = a.word | b.word;
  for (int j = 0; j < a.L; ++j) {
    if (!((nz >> (2 * j)) & 3u)) continue;
    const uint8_t ca = (a.word >> (2 * j)) & 3u;
    const uint8_t cb = (b.word >> (2 * j)) & 3u;
    out.word |= uint64_t(detail::pauli_prod_code[ca][cb]) << (2 * j);
    iph += detail::pauli_prod_iphase[ca][cb];
  }
  return {detail::ipow(iph), out};
}

/// True iff the two words commute (even number of sites with distinct
/// non-identity Paulis).
inline bool pauli_commute(const PauliString& a, const PauliString& b) {
  int anti = 0;
  for (int j = 0; j < a.L; ++j) {
    const uint8_t ca = (a.word >> (2 * j)) & 3u;
    const uint8_t cb = (b.word >> (2 * j)) & 3u;
    if (ca && cb && ca != cb) ++anti;
  }
  return (anti % 2) == 0;
}

/// Sparse operator: association Pauli word -> complex coefficient.
/// Coefficients below drop_tol are pruned after every algebra operation.
class PauliOperator {
 public:
  static constexpr double kDropTol = 1e-14;

  PauliOperator() = default;
  explicit PauliOperator(int L) : L_(L) {}

  int L() const { return L_; }
  std::size_t size() const { return terms_.size(); }
  const std::map<PauliString, cplx>& terms() const { return terms_; }

  cplx coeff(const PauliString& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? cplx(0) : it->second;
  }

  void add(const PauliString& s, cplx c) {
    if (s.L != L_) throw std::invalid_argument("PauliOperator::add: length mismatch");
    auto [it, fresh] = terms_.try_emplace(s, c);
    if (!fresh) it->second += c;
    if (std::abs(it->second) < kDropTol) terms_.erase(it);
  }

  PauliOperator& operator+=(const PauliOperator& o) {
    check_same(o);
    for (const auto& [s, c] : o.terms_) add(s, c);
    return *this;
  }

  PauliOperator& operator*=(cplx f) {
    if (std::abs(f) < kDropTol) {
      terms_.clear();
      return *this;
    }
    for (auto& [s, c] : terms_) c *= f;
    return *this;
  }

  friend PauliOperator operator+(PauliOperator a, const PauliOperator& b) { return a += b; }
  friend PauliOperator operator*(cplx f, PauliOperator a) { return a *= f; }

  friend PauliOperator operator*(const PauliOperator& a, const PauliOperator& b) {
    a.check_same(b);
    PauliOperator out(a.L_);
    for (const auto& [sa, ca] : a.terms_)
      for (const auto& [sb, cb] : b.terms_) {
        auto [ph, s] = pauli_product(sa, sb);
        out.add(s, ph * ca * cb);
      }
    return out;
  }

  /// True when every coefficient is real to tol (all words are Hermitian).
  bool is_hermitian(double tol = 1e-10) const {
    for (const auto& [s, c] : terms_)
      if (std::abs(c.imag()) > tol) return false;
    return true;
  }

  void prune(double tol = kDropTol) {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = std::abs(it->second) < tol ? terms_.erase(it) : std::next(it);
  }

  /// Kills imaginary parts below tol; used after operations that are
  /// Hermitian by construction but accumulate rounding residue.
  void realify(double tol = 1e-12) {
    for (auto& [s, c] : terms_)
      if (std::abs(c.imag()) < tol) c = cplx(c.real(), 0);
    prune();
  }

 private:
  void check_same(const PauliOperator& o) const {
    if (L_ != o.L_) throw std::invalid_argument("PauliOperator: length mismatch");
  }

  int L_ = 0;
  std::map<PauliString, cplx> terms_;
};

/// AB - BA. Words whose Paulis commute contribute nothing and are skipped.
inline PauliOperator commutator(const PauliOperator& a, const PauliOperator& b) {
  if (a.L() != b.L()) throw std::invalid_argument("commutator: length mismatch");
  PauliOperator out(a.L());
  for (const auto& [sa, ca] : a.terms())
    for (const auto& [sb, cb] : b.terms()) {
      if (pauli_commute(sa, sb)) continue;
      auto [ph, s] = pauli_product(sa, sb);
      // anticommuting words: AB - BA = 2 AB
      out.add(s, 2.0 * ph * ca * cb);
    }
  return out;
}

/// (1/2^L) Tr(AB) = sum_s a_s b_s; real part returned (inputs Hermitian).
inline double trace_product(const PauliOperator& a, const PauliOperator& b) {
  if (a.L() != b.L()) throw std::invalid_argument("trace_product: length mismatch");
  cplx acc = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  for (const auto& [s, c] : small.terms()) acc += c * big.coeff(s);
  return acc.real();
}

/// (1/2^L) Tr(A^2) = sum_s |a_s|^2. Requires Hermitian A.
inline double norm_sq(const PauliOperator& a, bool assert_hermitian = true) {
  if (assert_hermitian && !a.is_hermitian(1e-9))
    throw std::invalid_argument("norm_sq: operator is not Hermitian");
  double acc = 0;
  for (const auto& [s, c] : a.terms()) acc += std::norm(c);
  return acc;
}

/// Euclidean inner product on the Hermitian subspace, Re sum_s a_s conj(b_s).
inline double frobenius_inner(const PauliOperator& a, const PauliOperator& b) {
  cplx acc = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  const bool swapped = &small != &a;
  for (const auto& [s, c] : small.terms()) {
    cplx other = big.coeff(s);
    acc += swapped ? other * std::conj(c) : c * std::conj(other);
  }
  return acc.real();
}

namespace detail {
// Applies one word to a computational basis state: P|s> = amp |s XOR flips>.
struct StringAction {
  uint64_t flip_mask = 0;  // sites with X or Y
  // amplitude = base_phase * prod_{j in z_like} (bit_j ? +1 : -1)    (Z part)
  //           * prod_{j in y} (bit_j ? +i : -i)                      (Y part)
  // folded into a per-state phase computed from masks.
  uint64_t z_mask = 0;  // sites with Z
  uint64_t y_mask = 0;  // sites with Y
};

inline StringAction analyze(const PauliString& p) {
  StringAction a;
  for (int j = 0; j < p.L; ++j) {
    switch (p.at(j)) {
      case Pauli::I: break;
      case Pauli::X: a.flip_mask |= uint64_t(1) << j; break;
      case Pauli::Y:
        a.flip_mask |= uint64_t(1) << j;
        a.y_mask |= uint64_t(1) << j;
        break;
      case Pauli::Z: a.z_mask |= uint64_t(1) << j; break;
    }
  }
  return a;
}

// amplitude of <s XOR flips| P |s>
inline cplx amplitude(const StringAction& a, uint64_t s) {
  // Z on |b>: (-1)^(1-b) with bit 1 = up = +1 eigenvalue of sigma^z
  int zminus = std::popcount(a.z_mask & ~s);
  // sigma^y |up> = i |down>, sigma^y |down> = -i |up>
  int yup = std::popcount(a.y_mask & s);
  int ydown = std::popcount(a.y_mask & ~s);
  unsigned iph = (unsigned(yup) + 3u * unsigned(ydown) + 2u * unsigned(zminus)) % 4u;
  return ipow(iph);
}
}  // namespace detail

/// Dense complex matrix <s'|A|s> in the given basis ordering. Throws if a
/// term leaves the restricted sector with non-negligible weight.
inline Eigen::MatrixXcd to_dense_complex(const PauliOperator& op, const SpinBasis& basis) {
  if (op.L() != basis.L) throw std::invalid_argument("to_dense: size mismatch");
  const auto n = basis.dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  // amplitudes into out-of-sector states may cancel between strings
  // (XX vs YY), so accumulate leakage per target and check at the end
  std::unordered_map<uint64_t, cplx> leak;
  for (const auto& [p, c] : op.terms()) {
    const auto act = detail::analyze(p);
    for (std::size_t col = 0; col < n; ++col) {
      const uint64_t s = basis.states[col];
      const uint64_t t = s ^ act.flip_mask;
      const cplx amp = c * detail::amplitude(act, s);
      if (!basis.contains(t))
        leak[(t << 32) | basis.states[col]] += amp;
      else
        m(basis.index.at(t), col) += amp;
    }
  }
  for (const auto& [key, amp] : leak)
    if (std::abs(amp) > 1e-12)
      throw std::invalid_argument("to_dense: operator leaves sector");
  return m;
}

/// Real symmetric dense form; throws if any element has imaginary residue.
inline Eigen::MatrixXd to_dense(const PauliOperator& op, const SpinBasis& basis,
                                double imag_tol = 1e-11) {
  Eigen::MatrixXcd m = to_dense_complex(op, basis);
  if (m.imag().cwiseAbs().maxCoeff() > imag_tol)
    throw std::invalid_argument("to_dense: matrix has imaginary elements; use to_dense_complex");
  return m.real();
}

// ---- spin-1/2 building blocks, S = sigma/2 ----

inline PauliOperator spin_op(int L, int j, Pauli p) {
  PauliOperator op(L);
  op.add(PauliString::site(L, j, p), 0.5);
  return op;
}

/// S^x_i S^x_j + S^y_i S^y_j (flip-flop pair).
inline PauliOperator flip_flop(int L, int i, int j) {
  PauliOperator op(L);
  auto xx = PauliString::identity(L);
  xx.set(i, Pauli::X);
  xx.set(j, Pauli::X);
  auto yy = PauliString::identity(L);
  yy.set(i, Pauli::Y);
  yy.set(j, Pauli::Y);
  op.add(xx, 0.25);
  op.add(yy, 0.25);
  return op;
}

}  // namespace spinchain
