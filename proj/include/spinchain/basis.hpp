#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <bit>

namespace spinchain {

/// Computational basis of an L-site spin-1/2 chain, bit j = site j,
/// bit value 1 = spin up. Optionally restricted to a total-magnetization
/// sector S_tot^z = popcount(state) - L/2.
struct SpinBasis {
  int L = 0;
  std::optional<double> sector;  // total S^z, half-integer
  std::vector<uint64_t> states;  // strictly increasing
  std::unordered_map<uint64_t, std::size_t> index;

  std::size_t dim() const { return states.size(); }

  std::size_t index_of(uint64_t s) const {
    auto it = index.find(s);
    if (it == index.end())
      throw std::out_of_range("SpinBasis: state not in basis");
    return it->second;
  }

  bool contains(uint64_t s) const { return index.count(s) != 0; }
};

/// Builds the basis, filtered to one magnetization sector if given.
/// sector must satisfy |sector| <= L/2 and sector = L/2 (mod 1).
inline SpinBasis build_basis(int L, std::optional<double> sector = {}) {
  if (L < 2 || L > 32) throw std::invalid_argument("build_basis: need 2 <= L <= 32");
  SpinBasis b;
  b.L = L;
  b.sector = sector;
  if (sector) {
    const double n_up_d = *sector + 0.5 * L;
    const long n_up = std::lround(n_up_d);
    if (std::abs(n_up_d - n_up) > 1e-9 || n_up < 0 || n_up > L)
      throw std::invalid_argument(
          "build_basis: sector " + std::to_string(*sector) +
          " incompatible with L=" + std::to_string(L) +
          " (need |sector| <= L/2 and sector = L/2 mod 1)");
    for (uint64_t s = 0; s < (uint64_t(1) << L); ++s)
      if (std::popcount(s) == n_up) b.states.push_back(s);
  } else {
    b.states.resize(std::size_t(1) << L);
    for (uint64_t s = 0; s < (uint64_t(1) << L); ++s) b.states[s] = s;
  }
  b.index.reserve(b.states.size());
  for (std::size_t i = 0; i < b.states.size(); ++i) b.index[b.states[i]] = i;
  return b;
}

}  // namespace spinchain
