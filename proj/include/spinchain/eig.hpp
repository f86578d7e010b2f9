#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

namespace spinchain {

/// Full spectrum (ascending) of one sector block, optionally with the
/// column-orthonormal eigenvector matrix.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // empty when not requested
  int L = 0;
  std::optional<double> sector;
  uint64_t spec_hash = 0;

  bool has_vectors() const { return vectors.size() > 0; }
  Eigen::Index dim() const { return values.size(); }
};

inline constexpr Eigen::Index kEigDimCap = 20000;

/// Dense symmetric eigendecomposition, all eigenvalues ascending. Backed
/// by LAPACK dsyevd; one call is single-threaded and reentrant.
inline EigenSystem eig_full(const Eigen::MatrixXd& m, bool want_vectors,
                            Eigen::Index dim_cap = kEigDimCap) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("eig_full: matrix not square");
  if (n > dim_cap)
    throw std::runtime_error("eig_full: dimension " + std::to_string(n) +
                             " exceeds capacity cap " + std::to_string(dim_cap));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale)
    throw std::invalid_argument("eig_full: matrix not symmetric");

  EigenSystem out;
  Eigen::MatrixXd a = m;
  out.values.resize(n);
  const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L',
                                  lapack_int(n), a.data(), lapack_int(n), out.values.data());
  if (info != 0)
    throw std::runtime_error("eig_full: dsyevd failed to converge (info=" +
                             std::to_string(info) + ")");
  if (want_vectors) out.vectors = std::move(a);
  return out;
}

// ---- binary cache format ----
// header: magic "SPCEIG01" | version u32 | L i32 | has_sector u32 |
//         sector f64 | dimension u64 | spec_hash u64 | has_vectors u32
// payload: values (dim f64 LE), then vectors column-major (dim*dim f64 LE)
// footer: FNV-1a checksum u64 over everything before it

namespace detail {
inline uint64_t fnv1a(const void* data, std::size_t len, uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}
}  // namespace detail

inline void save_eigensystem(const EigenSystem& es, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_eigensystem: cannot open " + path);
  uint64_t h = 0xCBF29CE484222325ull;
  auto put = [&](const void* data, std::size_t len) {
    f.write(static_cast<const char*>(data), std::streamsize(len));
    h = detail::fnv1a(data, len, h);
  };
  const char magic[8] = {'S', 'P', 'C', 'E', 'I', 'G', '0', '1'};
  const uint32_t version = 1;
  const int32_t L = es.L;
  const uint32_t has_sector = es.sector.has_value() ? 1 : 0;
  const double sector = es.sector.value_or(0.0);
  const uint64_t dim = uint64_t(es.dim());
  const uint32_t has_vectors = es.has_vectors() ? 1 : 0;
  put(magic, 8);
  put(&version, 4);
  put(&L, 4);
  put(&has_sector, 4);
  put(&sector, 8);
  put(&dim, 8);
  put(&es.spec_hash, 8);
  put(&has_vectors, 4);
  put(es.values.data(), dim * 8);
  if (has_vectors) put(es.vectors.data(), dim * dim * 8);
  f.write(reinterpret_cast<const char*>(&h), 8);
  if (!f) throw std::runtime_error("save_eigensystem: write failed: " + path);
}

/// Returns nullopt on missing file; throws on corruption (caller decides
/// whether to treat that as a miss).
inline std::optional<EigenSystem> load_eigensystem(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  uint64_t h = 0xCBF29CE484222325ull;
  auto get = [&](void* data, std::size_t len) {
    f.read(static_cast<char*>(data), std::streamsize(len));
    if (!f) throw std::runtime_error("load_eigensystem: truncated file " + path);
    h = detail::fnv1a(data, len, h);
  };
  char magic[8];
  uint32_t version = 0, has_sector = 0, has_vectors = 0;
  int32_t L = 0;
  double sector = 0;
  uint64_t dim = 0, spec_hash = 0;
  get(magic, 8);
  if (std::memcmp(magic, "SPCEIG01", 8) != 0)
    throw std::runtime_error("load_eigensystem: bad magic in " + path);
  get(&version, 4);
  get(&L, 4);
  get(&has_sector, 4);
  get(&sector, 8);
  get(&dim, 8);
  get(&spec_hash, 8);
  get(&has_vectors, 4);
  EigenSystem es;
  es.L = L;
  if (has_sector) es.sector = sector;
  es.spec_hash = spec_hash;
  es.values.resize(Eigen::Index(dim));
  get(es.values.data(), dim * 8);
  if (has_vectors) {
    es.vectors.resize(Eigen::Index(dim), Eigen::Index(dim));
    get(es.vectors.data(), dim * dim * 8);
  }
  uint64_t stored = 0;
  f.read(reinterpret_cast<char*>(&stored), 8);
  if (!f || stored != h)
    throw std::runtime_error("load_eigensystem: checksum mismatch in " + path);
  return es;
}

}  // namespace spinchain
