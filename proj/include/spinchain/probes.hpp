#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/eig.hpp"

namespace spinchain {

/// Per-gap level-spacing ratios r_n = min(s_n, s_{n+1})/max(s_n, s_{n+1})
/// over the central `window` fraction of the spectrum.
struct RStatistic {
  std::vector<double> ratios;
  double mean = 0;
  double window = 1.0;
  std::size_t degenerate_dropped = 0;  // machine-degenerate gaps excluded
};

inline RStatistic r_statistic(const std::vector<double>& values, double window = 0.5) {
  if (window <= 0 || window > 1) throw std::invalid_argument("r_statistic: window in (0,1]");
  const std::size_t n = values.size();
  for (std::size_t i = 1; i < n; ++i)
    if (values[i] < values[i - 1])
      throw std::invalid_argument("r_statistic: values not ascending");
  const std::size_t keep = std::size_t(std::lround(double(n) * window));
  const std::size_t lo = (n - keep) / 2;
  const std::size_t hi = lo + keep;
  if (keep < 3) throw std::invalid_argument("r_statistic: too few levels in window");

  const double bandwidth = values.back() - values.front();
  const double degen_tol = 1e-12 * std::max(bandwidth, 1.0);

  RStatistic out;
  out.window = window;
  for (std::size_t i = lo; i + 2 < hi; ++i) {
    const double s0 = values[i + 1] - values[i];
    const double s1 = values[i + 2] - values[i + 1];
    // exactly crossing levels (folding artifacts) are dropped and counted
    if (s0 < degen_tol || s1 < degen_tol) {
      ++out.degenerate_dropped;
      continue;
    }
    out.ratios.push_back(std::min(s0, s1) / std::max(s0, s1));
  }
  if (out.ratios.empty()) throw std::invalid_argument("r_statistic: no usable gaps");
  double acc = 0;
  for (double r : out.ratios) acc += r;
  out.mean = acc / double(out.ratios.size());
  return out;
}

inline RStatistic r_statistic(const Eigen::VectorXd& values, double window = 0.5) {
  return r_statistic(std::vector<double>(values.data(), values.data() + values.size()), window);
}

/// Fidelity susceptibilities chi_n = sum_{m != n} |P_nm|^2 / (E_n - E_m)^2
/// with P_nm the probe in the eigenbasis.
struct ChiResult {
  std::vector<double> chi;     // one per eigenstate, eigenvalue order
  std::string probe = "";
};

inline ChiResult fidelity_susceptibility(const EigenSystem& eigs, const Eigen::MatrixXd& probe,
                                         const std::string& probe_name = "") {
  if (!eigs.has_vectors())
    throw std::invalid_argument("fidelity_susceptibility: eigenvectors required");
  const Eigen::Index n = eigs.dim();
  if (probe.rows() != n || probe.cols() != n)
    throw std::invalid_argument("fidelity_susceptibility: probe dimension mismatch");
  Eigen::MatrixXd w = eigs.vectors.transpose() * (probe * eigs.vectors);
  ChiResult out;
  out.probe = probe_name;
  out.chi.resize(std::size_t(n), 0.0);
  for (Eigen::Index a = 0; a < n; ++a) {
    double acc = 0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (m == a) continue;
      const double de = eigs.values[a] - eigs.values[m];
      const double el = w(a, m);
      acc += (el * el) / (de * de);
    }
    out.chi[std::size_t(a)] = acc;
  }
  return out;
}

/// Geometric-mean pooling over every eigenstate of every realization,
/// chi_typ = exp(E[log chi_n]); zero entries are excluded and counted.
struct TypicalChi {
  double value = 0;
  std::size_t pooled = 0;
  std::size_t zeros_excluded = 0;
};

inline TypicalChi typical_chi(const std::vector<ChiResult>& samples,
                              double window = 1.0) {
  TypicalChi out;
  double acc = 0;
  for (const auto& s : samples) {
    const std::size_t n = s.chi.size();
    const std::size_t keep = std::max<std::size_t>(1, std::size_t(std::lround(double(n) * window)));
    const std::size_t lo = (n - keep) / 2;
    for (std::size_t i = lo; i < lo + keep && i < n; ++i) {
      const double c = s.chi[i];
      if (c <= 0) {
        ++out.zeros_excluded;
        continue;
      }
      acc += std::log(c);
      ++out.pooled;
    }
  }
  if (out.pooled == 0) throw std::invalid_argument("typical_chi: empty pool");
  out.value = std::exp(acc / double(out.pooled));
  return out;
}

/// Dimensionless ergodicity measure g = Gamma / Delta.
inline double g_ratio(double gamma, double delta) {
  if (delta <= 0) throw std::invalid_argument("g_ratio: level spacing must be positive");
  return gamma / delta;
}

}  // namespace spinchain
