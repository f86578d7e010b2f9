#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/eig.hpp"

namespace spinchain {

/// One Lehmann line: weight |<n|O|m>|^2 at omega = E_m - E_n.
struct SpectralLine {
  double omega = 0;
  double weight = 0;
};

/// Lines of eigenstate n for operator O given in the same basis as eigs.
/// Diagonal (m = n) excluded; with `connected` the sum rule reads
/// sum_m weights = <n|O^2|n> - <n|O|n>^2.
inline std::vector<SpectralLine> matrix_element_lines(const EigenSystem& eigs,
                                                      const Eigen::MatrixXd& op,
                                                      Eigen::Index n) {
  if (!eigs.has_vectors())
    throw std::invalid_argument("matrix_element_lines: eigenvectors required");
  if (n < 0 || n >= eigs.dim())
    throw std::out_of_range("matrix_element_lines: eigenstate index out of range");
  Eigen::VectorXd row = eigs.vectors.transpose() * (op * eigs.vectors.col(n));
  std::vector<SpectralLine> lines;
  lines.reserve(std::size_t(eigs.dim()) - 1);
  for (Eigen::Index m = 0; m < eigs.dim(); ++m) {
    if (m == n) continue;
    const double w = row[m] * row[m];
    if (w == 0) continue;
    lines.push_back({eigs.values[m] - eigs.values[n], w});
  }
  return lines;
}

inline std::vector<double> linspace_edges(double lo, double hi, int bins) {
  std::vector<double> e(bins + 1);
  for (int i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * double(i) / bins;
  return e;
}

inline std::vector<double> logspace_edges(double lo, double hi, int bins_per_decade) {
  if (lo <= 0 || hi <= lo) throw std::invalid_argument("logspace_edges: need 0 < lo < hi");
  const int bins = std::max(1, int(std::ceil(std::log10(hi / lo) * bins_per_decade)));
  std::vector<double> e(bins + 1);
  for (int i = 0; i <= bins; ++i)
    e[i] = lo * std::pow(hi / lo, double(i) / bins);
  return e;
}

/// Raw per-sample accumulation: weights summed per bin plus the count of
/// pooled (state, realization) pairs feeding it.
struct BinnedSample {
  std::vector<double> edges;
  std::vector<double> weight;  // one per bin
  std::vector<std::size_t> count;
  std::size_t pooled_states = 0;

  explicit BinnedSample(std::vector<double> e)
      : edges(std::move(e)), weight(edges.size() - 1, 0.0), count(edges.size() - 1, 0) {
    if (!std::is_sorted(edges.begin(), edges.end()))
      throw std::invalid_argument("BinnedSample: edges must be monotone");
  }

  void add_line(double omega, double w) {
    auto it = std::upper_bound(edges.begin(), edges.end(), omega);
    if (it == edges.begin() || it == edges.end()) return;  // outside support
    const std::size_t b = std::size_t(it - edges.begin()) - 1;
    weight[b] += w;
    ++count[b];
  }

  void add_lines(const std::vector<SpectralLine>& lines) {
    for (const auto& l : lines) add_line(l.omega, l.weight);
    ++pooled_states;
  }

  /// A(omega_bin) = sum of weights / (bin width * pooled states).
  double density(std::size_t b) const {
    if (pooled_states == 0) return 0;
    return weight[b] / ((edges[b + 1] - edges[b]) * double(pooled_states));
  }
};

/// Combined histogram over samples: mean density, typical (exp mean log)
/// density with zero bins excluded and counted.
struct SpectralHistogram {
  std::vector<double> edges;
  std::vector<double> center;
  std::vector<double> a_mean;
  std::vector<double> a_typ;
  std::vector<std::size_t> count;        // total lines per bin
  std::vector<std::size_t> zero_samples; // samples with empty bin, per bin
  std::size_t samples = 0;
  std::string op_name;
};

inline SpectralHistogram combine_samples(const std::vector<BinnedSample>& samples,
                                         const std::string& op_name = "") {
  if (samples.empty()) throw std::invalid_argument("combine_samples: no samples");
  const auto& edges = samples.front().edges;
  for (const auto& s : samples)
    if (s.edges != edges) throw std::invalid_argument("combine_samples: binning mismatch");
  const std::size_t nb = edges.size() - 1;
  SpectralHistogram h;
  h.edges = edges;
  h.samples = samples.size();
  h.op_name = op_name;
  h.center.resize(nb);
  h.a_mean.assign(nb, 0.0);
  h.a_typ.assign(nb, 0.0);
  h.count.assign(nb, 0);
  h.zero_samples.assign(nb, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    h.center[b] = edges[b] > 0 ? std::sqrt(edges[b] * edges[b + 1])
                               : 0.5 * (edges[b] + edges[b + 1]);
    double mean = 0, logsum = 0;
    std::size_t nonzero = 0;
    for (const auto& s : samples) {
      const double a = s.density(b);
      mean += a;
      h.count[b] += s.count[b];
      if (a > 0) {
        logsum += std::log(a);
        ++nonzero;
      } else {
        ++h.zero_samples[b];
      }
    }
    h.a_mean[b] = mean / double(samples.size());
    h.a_typ[b] = nonzero ? std::exp(logsum / double(nonzero)) : 0.0;
  }
  return h;
}

enum class TailModel { ExpOmegaLogOmega, PowerLaw };

/// Least-squares fit of log A inside [omega_min, omega_max]:
///   ExpOmegaLogOmega:  log A = c - tau * omega log(omega)
///   PowerLaw:          log A = c + exponent * log(omega)
struct TailFit {
  TailModel model = TailModel::PowerLaw;
  double tau = 0;       // ExpOmegaLogOmega
  double exponent = 0;  // PowerLaw
  double intercept = 0;
  double rms_residual = 0;
  std::size_t bins_used = 0;
  double omega_min = 0, omega_max = 0;
};

inline TailFit fit_tail(const SpectralHistogram& hist, double omega_min, double omega_max,
                        TailModel model, bool use_typical = false) {
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < hist.center.size(); ++b) {
    const double w = hist.center[b];
    const double a = use_typical ? hist.a_typ[b] : hist.a_mean[b];
    if (w < omega_min || w > omega_max || a <= 0 || w <= 0) continue;
    xs.push_back(model == TailModel::ExpOmegaLogOmega ? w * std::log(w) : std::log(w));
    ys.push_back(std::log(a));
  }
  if (xs.size() < 5) throw std::invalid_argument("fit_tail: fewer than 5 usable bins in window");
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = double(n) * sxx - sx * sx;
  if (std::abs(det) < 1e-12 * double(n) * sxx)
    throw std::invalid_argument("fit_tail: degenerate design matrix");
  const double slope = (double(n) * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / double(n);
  double res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - slope * xs[i] - intercept;
    res += r * r;
  }
  TailFit fit;
  fit.model = model;
  fit.intercept = intercept;
  fit.rms_residual = std::sqrt(res / double(n));
  fit.bins_used = n;
  fit.omega_min = omega_min;
  fit.omega_max = omega_max;
  if (model == TailModel::ExpOmegaLogOmega)
    fit.tau = -slope;
  else
    fit.exponent = slope;
  return fit;
}

/// Suppression of the spectral weight beyond each weak-link jump, measured
/// against the reference curve (smallest V, no suppression): for jump j,
///   drop_j(V) = geomean over window of A_V(omega) / A_ref(omega),
/// with the window sitting above jump j. Exponents come from regressing
/// log drop against log(2V); after one jump the expectation is (2V)^-2,
/// after two jumps (2V)^-4.
struct JumpScaling {
  struct Point {
    double V = 0;
    std::vector<double> drop;  // one per jump
  };
  std::vector<Point> points;
  std::vector<double> exponents;  // one per jump
};

inline double window_log_mean(const SpectralHistogram& h, double lo, double hi,
                              bool use_typical) {
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < h.center.size(); ++b) {
    const double a = use_typical ? h.a_typ[b] : h.a_mean[b];
    if (h.center[b] < lo || h.center[b] > hi || a <= 0) continue;
    acc += std::log(a);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("jump_scaling: no flanking data in window");
  return acc / double(n);
}

inline JumpScaling jump_scaling(const std::vector<double>& V_grid,
                                const std::vector<SpectralHistogram>& hists,
                                const std::vector<std::pair<double, double>>& jump_windows,
                                bool use_typical = true) {
  if (V_grid.size() != hists.size() || V_grid.size() < 3)
    throw std::invalid_argument("jump_scaling: need matching V grid and >= 3 points");
  const std::size_t ref = std::size_t(
      std::min_element(V_grid.begin(), V_grid.end()) - V_grid.begin());
  JumpScaling out;
  for (std::size_t v = 0; v < V_grid.size(); ++v) {
    JumpScaling::Point p;
    p.V = V_grid[v];
    for (const auto& [lo, hi] : jump_windows) {
      const double num = window_log_mean(hists[v], lo, hi, use_typical);
      const double den = window_log_mean(hists[ref], lo, hi, use_typical);
      p.drop.push_back(std::exp(num - den));
    }
    out.points.push_back(p);
  }
  // slope of log drop vs log(2V), reference point excluded
  for (std::size_t j = 0; j < jump_windows.size(); ++j) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t v = 0; v < out.points.size(); ++v) {
      if (v == ref) continue;
      const double x = std::log(2.0 * out.points[v].V);
      const double y = std::log(out.points[v].drop[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    out.exponents.push_back((double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx));
  }
  return out;
}

/// Bin-wise check that the full-model spectral function dominates the
/// effective one below the first impurity resonance, and flag of the
/// resonant non-monotonic region near omega ~ V.
struct BoundReport {
  bool bound_holds = true;
  double worst_ratio = 1.0;      // min over checked bins of A_full / A_eff
  double worst_omega = 0;
  bool resonance_bump = false;   // full model has a local max near omega ~ V
  std::size_t bins_checked = 0;
};

inline BoundReport effective_bound_check(const SpectralHistogram& a_eff,
                                         const SpectralHistogram& a_full,
                                         double omega_cut, double V, double tol = 0.5,
                                         bool use_typical = true) {
  if (a_eff.edges != a_full.edges)
    throw std::invalid_argument("effective_bound_check: binning mismatch");
  BoundReport rep;
  for (std::size_t b = 0; b < a_eff.center.size(); ++b) {
    const double w = a_eff.center[b];
    const double e = use_typical ? a_eff.a_typ[b] : a_eff.a_mean[b];
    const double f = use_typical ? a_full.a_typ[b] : a_full.a_mean[b];
    if (w > omega_cut || e <= 0 || f <= 0) continue;
    ++rep.bins_checked;
    const double ratio = f / e;
    if (ratio < rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_omega = w;
    }
    if (ratio < 1.0 - tol) rep.bound_holds = false;
  }
  // local maximum of the full curve inside [V/2, 3V/2]
  double prev = 0;
  bool rising = false;
  for (std::size_t b = 0; b < a_full.center.size(); ++b) {
    const double w = a_full.center[b];
    const double f = use_typical ? a_full.a_typ[b] : a_full.a_mean[b];
    if (w < 0.5 * V || w > 1.5 * V || f <= 0) continue;
    if (prev > 0) {
      if (f > prev) rising = true;
      if (rising && f < prev) rep.resonance_bump = true;
    }
    prev = f;
  }
  return rep;
}

}  // namespace spinchain
