#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spinchain/config.hpp"
#include "spinchain/eig.hpp"
#include "spinchain/liom.hpp"
#include "spinchain/model.hpp"
#include "spinchain/probes.hpp"
#include "spinchain/rng.hpp"
#include "spinchain/spectral.hpp"

namespace spinchain {

inline constexpr const char* kCodeVersion = "0.1.0";

// ---- small numeric/text helpers ----

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Default magnetization sector: +1/2 for odd L, 0 for even L.
inline double default_sector(int L) { return (L % 2) ? 0.5 : 0.0; }

inline std::pair<std::size_t, std::size_t> central_window(std::size_t n, double frac) {
  const std::size_t keep = std::max<std::size_t>(1, std::size_t(std::lround(double(n) * frac)));
  const std::size_t lo = (n - std::min(keep, n)) / 2;
  return {lo, lo + std::min(keep, n)};
}

// ---- aggregation ----

struct Aggregate {
  double mean = 0;
  double stderr_jk = 0;  // leave-one-out jackknife standard error
  std::size_t n = 0;
};

inline Aggregate jackknife(const std::vector<double>& xs) {
  Aggregate a;
  a.n = xs.size();
  if (xs.empty()) throw std::invalid_argument("jackknife: empty sample");
  double sum = 0;
  for (double x : xs) sum += x;
  a.mean = sum / double(a.n);
  if (a.n < 2) return a;
  double acc = 0;
  for (double x : xs) {
    const double loo = (sum - x) / double(a.n - 1);
    acc += (loo - a.mean) * (loo - a.mean);
  }
  a.stderr_jk = std::sqrt(acc * double(a.n - 1) / double(a.n));
  return a;
}

// ---- worker pool ----

/// Runs fn(0..n-1) on up to `workers` threads pulling from a shared
/// counter. Task outputs must go to preallocated per-task slots; the
/// caller reduces them in index order, so results are deterministic
/// regardless of scheduling. The first exception is rethrown.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const int nw = std::max(1, std::min<int>(workers, int(n)));
  if (nw == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mtx;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mtx);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// ---- eigensystem cache ----

/// Disk cache keyed by (spec hash, sector, vectors flag); entries are the
/// checksummed binary format of eig.hpp. Concurrent writers serialize on
/// an advisory flock so each key is computed once; corrupt entries are
/// treated as misses with a warning and recomputed.
class EigenCache {
 public:
  explicit EigenCache(std::string root = "") : root_(std::move(root)) {
    if (!root_.empty()) std::filesystem::create_directories(root_);
  }

  bool enabled() const { return !root_.empty(); }

  std::string key_path(uint64_t spec_h, std::optional<double> sector, bool vectors) const {
    uint64_t h = spec_h;
    const double s = sector.value_or(-1e9);
    h = detail::fnv1a(&s, sizeof s, h ^ 0x9E3779B97F4A7C15ull);
    const uint32_t v = vectors ? 1 : 0;
    h = detail::fnv1a(&v, sizeof v, h);
    return root_ + "/" + fmt_hex(h) + ".eig";
  }

  std::optional<EigenSystem> lookup(uint64_t spec_h, std::optional<double> sector,
                                    bool vectors) const {
    if (!enabled()) return std::nullopt;
    const std::string path = key_path(spec_h, sector, vectors);
    try {
      auto es = load_eigensystem(path);
      if (es && vectors && !es->has_vectors()) return std::nullopt;
      return es;
    } catch (const std::exception& e) {
      std::cerr << "cache: corrupt entry treated as miss (" << e.what() << ")\n";
      return std::nullopt;
    }
  }

  /// Lookup-or-compute with single-computation guarantee per key.
  EigenSystem get(const HamiltonianSpec& spec, std::optional<double> sector, bool vectors) {
    const uint64_t h = spec_hash(spec);
    auto compute = [&] {
      auto basis = build_basis(spec.L, sector);
      EigenSystem es = eig_full(to_dense(spec, basis), vectors);
      es.L = spec.L;
      es.sector = sector;
      es.spec_hash = h;
      if (computed) computed->fetch_add(1);
      return es;
    };
    if (!enabled()) return compute();
    if (auto hit = lookup(h, sector, vectors)) return *hit;

    const std::string path = key_path(h, sector, vectors);
    const int fd = ::open((path + ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd < 0) throw std::runtime_error("cache: cannot open lock file for " + path);
    ::flock(fd, LOCK_EX);
    std::optional<EigenSystem> es = lookup(h, sector, vectors);  // may exist now
    if (!es) {
      es = compute();
      const std::string tmp = path + ".tmp." + std::to_string(::getpid());
      save_eigensystem(*es, tmp);
      std::filesystem::rename(tmp, path);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    return *es;
  }

  std::atomic<int>* computed = nullptr;  // optional instrumentation

 private:
  std::string root_;
};

inline std::string cache_root_from_env() {
  const char* env = std::getenv("SPINCHAIN_CACHE");
  return env ? env : "";
}

// ---- results and manifest ----

struct ResultManifest {
  uint64_t config_hash = 0;
  std::string code_version = kCodeVersion;
  int workers = 1;
  double wall_seconds = 0;
  std::vector<std::pair<std::string, uint64_t>> files;  // name, checksum

  void write(const std::string& path) const {
    std::ofstream f(path);
    f << "spinchain-manifest 1\n";
    f << "config_hash " << fmt_hex(config_hash) << "\n";
    f << "code_version " << code_version << "\n";
    f << "workers " << workers << "\n";
    f << "wall_seconds " << fmt_g17(wall_seconds) << "\n";
    for (const auto& [name, sum] : files) f << "file " << name << " " << fmt_hex(sum) << "\n";
    if (!f) throw std::runtime_error("manifest: write failed: " + path);
  }
};

inline uint64_t file_checksum(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checksum: cannot open " + path);
  uint64_t h = 0xCBF29CE484222325ull;
  char buf[65536];
  while (f.read(buf, sizeof buf) || f.gcount() > 0)
    h = detail::fnv1a(buf, std::size_t(f.gcount()), h);
  return h;
}

/// CSV with `# key = value` header comments carrying the config hash.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const ExperimentConfig& cfg,
            const std::vector<std::string>& columns)
      : f_(path) {
    if (!f_) throw std::runtime_error("csv: cannot open " + path);
    f_ << "# config_hash = " << fmt_hex(cfg.hash()) << "\n";
    f_ << "# kind = " << cfg.kind << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c)
      f_ << (c ? "," : "") << columns[c];
    f_ << "\n";
  }

  void comment(const std::string& text) { f_ << "# " << text << "\n"; }

  void row(const std::vector<double>& vals) {
    for (std::size_t c = 0; c < vals.size(); ++c) f_ << (c ? "," : "") << fmt_g17(vals[c]);
    f_ << "\n";
  }

 private:
  std::ofstream f_;
};

// ---- experiment drivers ----

struct RunOptions {
  std::string out_dir = ".";
  std::string cache_dir = "";  // empty: SPINCHAIN_CACHE env, else disabled
  int workers = 1;
  std::optional<uint64_t> seed;  // overrides config "seed"
};

namespace harness_detail {

struct Ctx {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  EigenCache cache;
  uint64_t master_seed;
  std::vector<std::string> outputs;

  Ctx(const ExperimentConfig& c, const RunOptions& o)
      : cfg(c),
        opts(o),
        cache(o.cache_dir.empty() ? cache_root_from_env() : o.cache_dir),
        master_seed(o.seed ? *o.seed : c.get_u64("seed", 12345)) {}

  std::string out_path(const std::string& name) {
    outputs.push_back(name);
    return opts.out_dir + "/" + name;
  }
};

inline std::vector<int> impurity_sites(const ExperimentConfig& cfg, int L) {
  if (!cfg.has("impurity_sites")) return {central_site(L)};
  std::vector<int> sites;
  for (double s : cfg.get_grid("impurity_sites")) sites.push_back(int(s));
  return sites;
}

/// r of an ascending spectrum restricted to the config window.
inline double r_of(const Eigen::VectorXd& values, double window) {
  return r_statistic(values, window).mean;
}

inline void run_rstat(Ctx& ctx) {
  const auto& cfg = ctx.cfg;
  const int L = int(cfg.get_int("L"));
  const double delta = cfg.get_double("delta", 1.0);
  const double W = cfg.get_double("W", 0.25);
  const double window = cfg.get_double("window", 0.5);
  const auto v_grid = cfg.get_grid("v_grid");
  const int R = int(cfg.get_int("realizations", 20));
  const bool jitter = cfg.get_int("jitter", 0) != 0;
  const auto variants = cfg.get_list("variants", "full,folded");
  const double sector = cfg.get_double("sector", default_sector(L));
  const auto sites = impurity_sites(cfg, L);
  for (const auto& v : variants)
    if ((v == "sw" || v == "folded" || v == "unfolded") && sites.size() != 1)
      throw std::invalid_argument("rstat: variant '" + v + "' needs a single impurity");

  const std::size_t n_tasks = v_grid.size() * std::size_t(R);
  // slot per (task, variant)
  std::vector<std::map<std::string, double>> slot(n_tasks);

  parallel_for(n_tasks, ctx.opts.workers, [&](std::size_t t) {
    const std::size_t iv = t / std::size_t(R);
    const int rep = int(t % std::size_t(R));
    const double V = v_grid[iv];
    auto bulk = build_bulk(L, delta, W, stream_seed(ctx.master_seed, uint64_t(rep)));
    for (const auto& variant : variants) {
      double r = 0;
      if (variant == "full") {
        auto spec = add_impurities(bulk, sites, V, jitter,
                                   stream_seed(ctx.master_seed, 1u << 20 | uint64_t(rep)));
        r = r_of(ctx.cache.get(spec, sector, false).values, window);
      } else if (variant == "sw") {
        auto sw = schrieffer_wolff(bulk, sites[0], V);
        r = r_of(ctx.cache.get(sw.h_tilde, sector, false).values, window);
      } else if (variant == "folded" || variant == "unfolded") {
        auto plan = single_impurity_folding_plan(bulk, sites[0], V);
        std::vector<std::vector<double>> spectra;
        std::vector<double> offsets;
        std::vector<double> block_r;
        const double n_up_full = sector + L / 2.0;
        for (const auto& blk : plan.blocks) {
          const double n_up = n_up_full - (blk.offset > 0 ? 1.0 : 0.0);
          const double bsec = n_up - (L - 1) / 2.0;
          auto es = ctx.cache.get(blk.spec, bsec, false);
          spectra.emplace_back(es.values.data(), es.values.data() + es.values.size());
          offsets.push_back(blk.offset);
          if (variant == "unfolded") block_r.push_back(r_of(es.values, window));
        }
        if (variant == "folded") {
          r = r_statistic(fold_spectra(spectra, offsets), window).mean;
        } else {
          for (double b : block_r) r += b;
          r /= double(block_r.size());
        }
      } else {
        throw std::invalid_argument("rstat: unknown variant '" + variant + "'");
      }
      slot[t][variant] = r;
    }
  });

  for (const auto& variant : variants) {
    CsvWriter csv(ctx.out_path("rstat_" + variant + ".csv"), cfg,
                  {"V", "r_mean", "r_stderr", "realizations"});
    for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
      std::vector<double> reps;
      for (int rep = 0; rep < R; ++rep)
        reps.push_back(slot[iv * std::size_t(R) + std::size_t(rep)].at(variant));
      auto a = jackknife(reps);
      csv.row({v_grid[iv], a.mean, a.stderr_jk, double(a.n)});
    }
  }
}

inline void run_chi(Ctx& ctx) {
  const auto& cfg = ctx.cfg;
  const int L = int(cfg.get_int("L"));
  const double delta = cfg.get_double("delta", 1.0);
  const double W = cfg.get_double("W", 0.25);
  const double window = cfg.get_double("window", 0.5);
  const auto v_grid = cfg.get_grid("v_grid");
  const int R = int(cfg.get_int("realizations", 20));
  const int probe_site = int(cfg.get_int("probe_site", 2));
  const double sector = cfg.get_double("sector", default_sector(L));
  const auto sites = impurity_sites(cfg, L);

  const std::size_t n_tasks = v_grid.size() * std::size_t(R);
  std::vector<double> log_chi(n_tasks, 0.0);  // per-realization mean log chi

  parallel_for(n_tasks, ctx.opts.workers, [&](std::size_t t) {
    const std::size_t iv = t / std::size_t(R);
    const int rep = int(t % std::size_t(R));
    auto bulk = build_bulk(L, delta, W, stream_seed(ctx.master_seed, uint64_t(rep)));
    auto spec = add_impurities(bulk, sites, v_grid[iv]);
    auto es = ctx.cache.get(spec, sector, true);
    auto basis = build_basis(L, sector);
    auto chi = fidelity_susceptibility(es, to_dense(spin_op(L, probe_site, Pauli::Z), basis));
    const auto [lo, hi] = central_window(chi.chi.size(), window);
    double acc = 0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i)
      if (chi.chi[i] > 0) {
        acc += std::log(chi.chi[i]);
        ++n;
      }
    if (n == 0) throw std::runtime_error("chi: no nonzero susceptibilities in window");
    log_chi[t] = acc / double(n);
  });

  CsvWriter csv(ctx.out_path("chi.csv"), cfg,
                {"V", "chi_typ", "log_chi_mean", "log_chi_stderr", "realizations"});
  for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
    std::vector<double> reps(log_chi.begin() + long(iv * std::size_t(R)),
                             log_chi.begin() + long((iv + 1) * std::size_t(R)));
    auto a = jackknife(reps);
    csv.row({v_grid[iv], std::exp(a.mean), a.mean, a.stderr_jk, double(a.n)});
  }
}

/// Pooled Lehmann lines of a sector-conserving probe for one eigensystem.
inline void pool_lines(const EigenSystem& es, const Eigen::MatrixXd& op, double window,
                       BinnedSample& bins, double& offdiag_weight, std::size_t& states) {
  const auto [lo, hi] = central_window(std::size_t(es.dim()), window);
  for (std::size_t n = lo; n < hi; ++n) {
    double wsum = 0;
    for (const auto& l : matrix_element_lines(es, op, Eigen::Index(n))) {
      bins.add_line(std::abs(l.omega), l.weight);
      wsum += l.weight;
    }
    offdiag_weight += wsum;
    ++states;
  }
  bins.pooled_states += states;
}

inline void run_specfun(Ctx& ctx) {
  const auto& cfg = ctx.cfg;
  const int L = int(cfg.get_int("L"));
  const double delta = cfg.get_double("delta", 1.0);
  const double W = cfg.get_double("W", 0.25);
  const double window = cfg.get_double("window", 0.5);
  const std::string op = cfg.get("op", "z");
  const auto v_grid = cfg.has("v_grid") ? cfg.get_grid("v_grid") : std::vector<double>{0.0};
  const int R = int(cfg.get_int("realizations", 10));
  const double omega_min = cfg.get_double("omega_min", 1e-3);
  const double omega_max = cfg.get_double("omega_max", 2.0 * L);
  const int bpd = int(cfg.get_int("bins_per_decade", 8));
  const auto edges = logspace_edges(omega_min, omega_max, bpd);

  const std::size_t n_tasks = v_grid.size() * std::size_t(R);
  std::vector<BinnedSample> samples(n_tasks, BinnedSample(edges));
  std::vector<double> one_minus_z(n_tasks, 0.0);

  parallel_for(n_tasks, ctx.opts.workers, [&](std::size_t t) {
    const std::size_t iv = t / std::size_t(R);
    const int rep = int(t % std::size_t(R));
    auto bulk = build_bulk(L, delta, W, stream_seed(ctx.master_seed, uint64_t(rep)));
    double wacc = 0;
    std::size_t states = 0;
    if (op == "z") {
      const int ell = int(cfg.get_int("site", central_site(L)));
      auto spec = v_grid[iv] != 0.0 ? add_impurities(bulk, {ell}, v_grid[iv]) : bulk;
      const double sector = cfg.get_double("sector", default_sector(L));
      auto es = ctx.cache.get(spec, sector, true);
      auto basis = build_basis(L, sector);
      pool_lines(es, to_dense(spin_op(L, ell, Pauli::Z), basis), window, samples[t], wacc,
                 states);
    } else if (op == "x") {
      // boundary S^x in the full Hilbert space of the bare block
      const int site = int(cfg.get_int("site", 0));
      auto es = ctx.cache.get(bulk, std::nullopt, true);
      auto basis = build_basis(L);
      pool_lines(es, to_dense(spin_op(L, site, Pauli::X), basis), window, samples[t], wacc,
                 states);
    } else {
      throw std::invalid_argument("specfun: op must be z or x");
    }
    one_minus_z[t] = 4.0 * wacc / double(states);
  });

  CsvWriter summary(ctx.out_path("specfun_" + op + "_summary.csv"), cfg,
                    {"V", "one_minus_z", "one_minus_z_stderr", "realizations"});
  for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
    std::vector<BinnedSample> per_v(samples.begin() + long(iv * std::size_t(R)),
                                    samples.begin() + long((iv + 1) * std::size_t(R)));
    auto hist = combine_samples(per_v, op);
    CsvWriter csv(ctx.out_path("specfun_" + op + "_V" + fmt_g17(v_grid[iv]) + ".csv"), cfg,
                  {"omega", "a_mean", "a_typ", "lines"});
    for (std::size_t b = 0; b < hist.center.size(); ++b)
      csv.row({hist.center[b], hist.a_mean[b], hist.a_typ[b], double(hist.count[b])});
    std::vector<double> reps(one_minus_z.begin() + long(iv * std::size_t(R)),
                             one_minus_z.begin() + long((iv + 1) * std::size_t(R)));
    auto a = jackknife(reps);
    summary.row({v_grid[iv], a.mean, a.stderr_jk, double(a.n)});
  }
}

/// All magnetization sectors of an L-site chain, ascending.
inline std::vector<double> all_sectors(int L) {
  std::vector<double> out;
  for (int k = 0; k <= L; ++k) out.push_back(k - L / 2.0);
  return out;
}

/// Binned |<t|S^x_site|n>|^2 lines across adjacent sectors, pooling the
/// central window of every sector.
inline BinnedSample sx_lines_all_sectors(EigenCache& cache, const HamiltonianSpec& spec,
                                         int site, double window,
                                         const std::vector<double>& edges) {
  const int L = spec.L;
  BinnedSample bins(edges);
  std::vector<EigenSystem> es;
  std::vector<SpinBasis> bases;
  for (double s : all_sectors(L)) {
    bases.push_back(build_basis(L, s));
    es.push_back(cache.get(spec, s, true));
  }
  for (std::size_t m = 0; m + 1 < es.size(); ++m) {
    const auto& b0 = bases[m];
    const auto& b1 = bases[m + 1];
    // sparse S^x block: flip `site` from down to up, amplitude 1/2
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(Eigen::Index(b1.dim()), Eigen::Index(b0.dim()));
    const uint64_t bit = uint64_t(1) << site;
    for (std::size_t c = 0; c < b0.dim(); ++c) {
      const uint64_t s = b0.states[c];
      if (s & bit) continue;
      x(Eigen::Index(b1.index.at(s | bit)), Eigen::Index(c)) = 0.5;
    }
    const Eigen::MatrixXd w = es[m + 1].vectors.transpose() * (x * es[m].vectors);
    auto add_side = [&](const EigenSystem& from, const EigenSystem& to, bool transpose) {
      const auto [lo, hi] = central_window(std::size_t(from.dim()), window);
      for (std::size_t n = lo; n < hi; ++n)
        for (Eigen::Index t = 0; t < to.dim(); ++t) {
          const double el = transpose ? w(Eigen::Index(n), t) : w(t, Eigen::Index(n));
          if (el == 0) continue;
          bins.add_line(std::abs(to.values[t] - from.values[Eigen::Index(n)]), el * el);
        }
      bins.pooled_states += hi - lo;
    };
    add_side(es[m], es[m + 1], false);   // states of sector m radiating up
    add_side(es[m + 1], es[m], true);    // states of sector m+1 radiating down
  }
  return bins;
}

inline void run_jump(Ctx& ctx) {
  const auto& cfg = ctx.cfg;
  const int L = int(cfg.get_int("L"));
  const int block_len = int(cfg.get_int("block_len", 5));
  const double delta = cfg.get_double("delta", 1.0);
  const double W = cfg.get_double("W", 0.25);
  const double window = cfg.get_double("window", 0.5);
  const auto v_grid = cfg.get_grid("v_grid");
  const int R = int(cfg.get_int("realizations", 1));
  const int site = int(cfg.get_int("site", 0));
  const double omega_min = cfg.get_double("omega_min", 1e-2);
  const double omega_max = cfg.get_double("omega_max", 2.0 * L);
  const int bpd = int(cfg.get_int("bins_per_decade", 6));
  const auto edges = logspace_edges(omega_min, omega_max, bpd);

  const std::size_t n_tasks = v_grid.size() * std::size_t(R);
  std::vector<BinnedSample> samples(n_tasks, BinnedSample(edges));
  parallel_for(n_tasks, ctx.opts.workers, [&](std::size_t t) {
    const std::size_t iv = t / std::size_t(R);
    const int rep = int(t % std::size_t(R));
    auto spec = weak_link_chain(L, block_len, delta, W, v_grid[iv],
                                stream_seed(ctx.master_seed, uint64_t(rep)));
    samples[t] = sx_lines_all_sectors(ctx.cache, spec, site, window, edges);
  });

  std::vector<SpectralHistogram> hists;
  for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
    std::vector<BinnedSample> per_v(samples.begin() + long(iv * std::size_t(R)),
                                    samples.begin() + long((iv + 1) * std::size_t(R)));
    hists.push_back(combine_samples(per_v, "x"));
    CsvWriter csv(ctx.out_path("jump_V" + fmt_g17(v_grid[iv]) + ".csv"), cfg,
                  {"omega", "a_mean", "a_typ", "lines"});
    for (std::size_t b = 0; b < hists.back().center.size(); ++b)
      csv.row({hists.back().center[b], hists.back().a_mean[b], hists.back().a_typ[b],
               double(hists.back().count[b])});
  }

  if (cfg.has("jump1_lo")) {
    std::vector<std::pair<double, double>> windows{
        {cfg.get_double("jump1_lo"), cfg.get_double("jump1_hi")}};
    if (cfg.has("jump2_lo"))
      windows.push_back({cfg.get_double("jump2_lo"), cfg.get_double("jump2_hi")});
    auto js = jump_scaling(v_grid, hists, windows);
    CsvWriter csv(ctx.out_path("jump_scaling.csv"), cfg,
                  {"V", "drop1", "drop2"});
    for (std::size_t j = 0; j < js.exponents.size(); ++j)
      csv.comment("exponent" + std::to_string(j + 1) + " = " + fmt_g17(js.exponents[j]));
    for (const auto& p : js.points) {
      std::vector<double> row{p.V};
      row.insert(row.end(), p.drop.begin(), p.drop.end());
      if (row.size() < 3) row.push_back(0.0);
      csv.row(row);
    }
  }
}

inline void run_liom(Ctx& ctx) {
  const auto& cfg = ctx.cfg;
  const int L = int(cfg.get_int("L"));
  const double delta = cfg.get_double("delta", 1.0);
  const double W = cfg.get_double("W", 0.25);
  const double eps = cfg.get_double("eps", 0.1);
  const int n_max = int(cfg.get_int("n_max", 4));
  const auto v_grid = cfg.get_grid("v_grid");
  const bool resummed = cfg.get_int("resummed", 0) != 0;

  auto bulk = liom_bulk(L, delta, W, stream_seed(ctx.master_seed, 0));
  auto h_int = liom_interaction(L);
  auto lad = build_ladder(bulk, h_int, 2 * n_max + 1);
  auto db = build_directions(bulk, h_int, 2 * n_max + 2);

  CsvWriter norms(ctx.out_path("liom_ladder.csv"), cfg, {"k", "norm_sq", "strings"});
  for (int k = 0; k <= lad.depth(); ++k)
    norms.row({double(k), lad.norms[std::size_t(k)], double(lad.string_count[std::size_t(k)])});

  CsvWriter csv(ctx.out_path("liom_residuals.csv"), cfg,
                {"V", "N", "gamma_pert", "gamma_var", "gamma_var_paired", "norm_sq_pert",
                 "effective_terms"});
  for (double V : v_grid)
    for (int N = 0; N <= n_max; ++N) {
      auto qp = birkhoff_charge(db, lad, N, eps, V);
      auto qv = variational_charge(db, N, eps, V);
      csv.row({V, double(N), qp.gamma, qv.gamma, paired_variational_gamma(lad, N, eps, V),
               qp.norm_sq_val, double(qv.effective_terms)});
    }

  if (resummed) {
    CsvWriter rs(ctx.out_path("liom_resummed.csv"), cfg,
                 {"V", "chi", "norm_sq", "conserved_fraction_proxy", "degenerate_terms"});
    for (double V : v_grid) {
      auto r = resummed_norm(bulk, h_int, eps, V);
      rs.row({V, r.chi, r.norm_sq, r.conserved_fraction_proxy, double(r.degenerate_terms)});
    }
  }
}

}  // namespace harness_detail

/// Runs one experiment; writes per-probe CSV files plus manifest.txt into
/// opts.out_dir and returns the manifest. Rerunning with an unchanged
/// config produces byte-identical aggregate files.
inline ResultManifest run(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(opts.out_dir);
  harness_detail::Ctx ctx(cfg, opts);

  if (cfg.kind == "rstat")
    harness_detail::run_rstat(ctx);
  else if (cfg.kind == "chi")
    harness_detail::run_chi(ctx);
  else if (cfg.kind == "specfun")
    harness_detail::run_specfun(ctx);
  else if (cfg.kind == "jump")
    harness_detail::run_jump(ctx);
  else if (cfg.kind == "liom")
    harness_detail::run_liom(ctx);
  else
    throw std::invalid_argument("run: unknown kind " + cfg.kind);

  ResultManifest man;
  man.config_hash = cfg.hash();
  man.workers = opts.workers;
  for (const auto& name : ctx.outputs)
    man.files.emplace_back(name, file_checksum(opts.out_dir + "/" + name));
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  man.write(opts.out_dir + "/manifest.txt");
  return man;
}

}  // namespace spinchain
