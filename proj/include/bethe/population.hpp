#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/errors.hpp"
#include "bethe/halfplane.hpp"
#include "bethe/parallel.hpp"
#include "bethe/rng.hpp"
#include "bethe/stats.hpp"

namespace bethe {

/// Empirical measure on the upper half-plane: N samples plus the RNG lineage
/// (seed, generation) that determines every later step.
struct MeasurePool {
    std::vector<cplx> samples;
    std::uint64_t generation = 0;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return samples.size(); }
};

struct IterationConfig {
    EnergyPoint energy;
    DisorderLaw law;
    std::size_t pool_size = 100000;
    int max_generations = 500;
    double convergence_tol = 0.005;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    /// Generations between the two pools compared by the convergence metric.
    int lag = 5;

    void check() const {
        if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
        if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
        if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be > 0");
        if (lag < 1) throw ConfigError("lag must be >= 1");
    }
};

/// Pool initialization: N copies of z0, or leaf values -1/(h + E + i eta).
struct InitMode {
    enum class Kind { delta, leaf_law };
    Kind kind = Kind::leaf_law;
    cplx z0{0.0, 1.0};

    static InitMode delta(cplx z0) { return {Kind::delta, z0}; }
    static InitMode leaf_law() { return {Kind::leaf_law, {}}; }
};

/// Default start for the fixed-point solver: the free Green's function
/// w_{E + i eta}, which is the exact fixed point when the disorder vanishes.
inline InitMode free_start(const IterationConfig& cfg) {
    return InitMode::delta(free_green(cfg.energy));
}

inline MeasurePool init_pool(const InitMode& mode, const IterationConfig& cfg) {
    cfg.check();
    MeasurePool pool;
    pool.seed = cfg.seed;
    pool.generation = 0;
    if (mode.kind == InitMode::Kind::delta) {
        if (!(mode.z0.imag() > 0.0))
            throw UsageError("delta initialization requires Im z0 > 0");
        pool.samples.assign(cfg.pool_size, mode.z0);
        return pool;
    }
    pool.samples.resize(cfg.pool_size);
    const cplx z = cfg.energy.z();
    parallel_for(cfg.pool_size, cfg.workers, [&](std::size_t j) {
        CounterRng rng(cfg.seed, StreamDomain::leaf, j);
        pool.samples[j] = -1.0 / (cfg.law.sample(rng) + z);
    });
    return pool;
}

/// One application of mu -> (mu^{*K} * nu * delta_{E + i eta}) o psi on the
/// pool: every output slot draws K parents with replacement and a fresh
/// potential. Slot j of generation n uses stream (seed, n, j).
inline MeasurePool step_pool(const MeasurePool& pool, const IterationConfig& cfg) {
    if (pool.samples.empty()) throw UsageError("step_pool: empty pool");
    const std::size_t n = pool.size();
    const int K = cfg.energy.K();
    const cplx z = cfg.energy.z();
    MeasurePool out;
    out.seed = pool.seed;
    out.generation = pool.generation + 1;
    out.samples.resize(n);
    const cplx* in = pool.samples.data();
    cplx* dst = out.samples.data();
    parallel_chunks(n, cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            CounterRng rng(pool.seed, StreamDomain::step, out.generation, j);
            cplx sum = 0.0;
            for (int k = 0; k < K; ++k) sum += in[rng.below(n)];
            sum += cfg.law.sample(rng) + z;
            dst[j] = -1.0 / sum;
        }
    });
    return out;
}

namespace detail {
inline void sorted_marginals(const MeasurePool& p, std::vector<double>& re,
                             std::vector<double>& im) {
    re.resize(p.size());
    im.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        re[i] = p.samples[i].real();
        im[i] = p.samples[i].imag();
    }
    std::sort(re.begin(), re.end());
    std::sort(im.begin(), im.end());
}
}  // namespace detail

/// Sorted real and imaginary parts of a pool, kept so that each generation is sorted once.
struct SortedMarginals {
    std::vector<double> re, im;
    double max_modulus = 0.0;

    explicit SortedMarginals(const MeasurePool& p) {
        detail::sorted_marginals(p, re, im);
        for (const cplx& s : p.samples) max_modulus = std::max(max_modulus, std::abs(s));
    }
    std::size_t size() const noexcept { return re.size(); }
};

inline double pool_distance(const SortedMarginals& a, const SortedMarginals& b) {
    if (a.size() != b.size()) throw UsageError("pool_distance: pool sizes differ");
    return std::max(ks_sorted(a.re, b.re), ks_sorted(a.im, b.im));
}

inline double pool_marginal_winf(const SortedMarginals& a, const SortedMarginals& b) {
    if (a.size() != b.size()) throw UsageError("pool_marginal_winf: pool sizes differ");
    return std::max(winf_sorted(a.re, b.re), winf_sorted(a.im, b.im));
}

/// max of the Kolmogorov-Smirnov distances of the real and imaginary marginals.
inline double pool_distance(const MeasurePool& a, const MeasurePool& b) {
    if (a.size() != b.size()) throw UsageError("pool_distance: pool sizes differ");
    return pool_distance(SortedMarginals(a), SortedMarginals(b));
}

/// max of the infinity-Wasserstein distances of the two marginals.
inline double pool_marginal_winf(const MeasurePool& a, const MeasurePool& b) {
    if (a.size() != b.size()) throw UsageError("pool_marginal_winf: pool sizes differ");
    return pool_marginal_winf(SortedMarginals(a), SortedMarginals(b));
}

struct TraceEntry {
    std::uint64_t generation = 0;
    /// KS metric against generation n - lag (NaN until lag generations exist).
    double ks_lagged = std::numeric_limits<double>::quiet_NaN();
    /// marginal infinity-Wasserstein distance to the previous generation.
    double winf_step = 0.0;
};

struct FixedPointResult {
    MeasurePool pool;
    std::vector<TraceEntry> trace;
    bool converged = false;
};

/// Iterates step_pool until the lagged KS metric drops to convergence_tol, or
/// until the pool is numerically frozen (marginal W_inf against the lagged
/// generation below 1e-12 relative, where KS is meaningless), or until
/// max_generations. Non-convergence is reported, not thrown.
inline FixedPointResult run_to_fixed_point(const IterationConfig& cfg,
                                           std::optional<InitMode> start = std::nullopt) {
    cfg.check();
    FixedPointResult res;
    MeasurePool pool = init_pool(start.value_or(free_start(cfg)), cfg);
    std::deque<SortedMarginals> history;
    history.emplace_back(pool);
    for (int g = 1; g <= cfg.max_generations; ++g) {
        MeasurePool next = step_pool(pool, cfg);
        TraceEntry entry;
        entry.generation = next.generation;
        history.emplace_back(next);
        const SortedMarginals& cur = history.back();
        entry.winf_step = pool_marginal_winf(history[history.size() - 2], cur);
        if (history.size() > static_cast<std::size_t>(cfg.lag) + 1) history.pop_front();
        bool done = false;
        if (history.size() == static_cast<std::size_t>(cfg.lag) + 1) {
            const SortedMarginals& old = history.front();
            entry.ks_lagged = pool_distance(old, cur);
            const double scale = std::max(1.0, cur.max_modulus);
            done = entry.ks_lagged <= cfg.convergence_tol ||
                   pool_marginal_winf(old, cur) <= 1e-12 * scale;
        }
        res.trace.push_back(entry);
        pool = std::move(next);
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.pool = std::move(pool);
    return res;
}

/// Root values of finite trees, plus the Green's values along one root path.
struct TreeRun {
    MeasurePool roots;
    std::size_t path_length = 0;
    /// replica-major: path_values[r * path_length + k] is g at depth k (k = 0 is the root).
    std::vector<cplx> path_values;

    cplx path_value(std::size_t replica, std::size_t k) const {
        return path_values[replica * path_length + k];
    }
};

inline constexpr double max_tree_vertices = 1e7;

/// Exact punctured Green's function at the root of `replicas` independent
/// rooted K-ary trees of `depth` levels with i.i.d. potentials:
///   g(v) = -1 / (sum over children g + h_v + E + i eta),
/// leaves g = -1/(h + E + i eta). If `boundary` is given the deepest level
/// gets K children drawn from it instead of none. Depth-first evaluation keeps
/// O(depth) memory per replica; replica r uses its own stream.
inline TreeRun finite_tree_run(int depth, const IterationConfig& cfg, std::size_t replicas,
                               std::size_t path_length = 0,
                               const MeasurePool* boundary = nullptr) {
    if (depth < 1) throw UsageError("finite_tree: depth must be >= 1");
    if (replicas < 1) throw UsageError("finite_tree: replicas must be >= 1");
    if (path_length > static_cast<std::size_t>(depth))
        throw UsageError("finite_tree: path longer than tree depth");
    if (boundary && boundary->samples.empty())
        throw UsageError("finite_tree: empty boundary pool");
    const int K = cfg.energy.K();
    const double vertices = (std::pow(static_cast<double>(K), depth) - 1.0) / (K - 1.0);
    if (vertices > max_tree_vertices)
        throw ConfigError("finite_tree: " + std::to_string(vertices) +
                          " vertices per replica exceeds the 1e7 memory guard");

    const cplx z = cfg.energy.z();
    TreeRun run;
    run.path_length = path_length;
    run.path_values.resize(replicas * path_length);
    run.roots.samples.resize(replicas);
    run.roots.seed = cfg.seed;
    run.roots.generation = static_cast<std::uint64_t>(depth - 1);

    struct Walker {
        int depth, K;
        cplx z;
        const DisorderLaw& law;
        const MeasurePool* boundary;
        CounterRng rng;
        cplx* path;
        std::size_t path_length;

        cplx visit(int level, bool on_path) {
            cplx sum = 0.0;
            if (level + 1 < depth) {
                for (int k = 0; k < K; ++k) sum += visit(level + 1, on_path && k == 0);
            } else if (boundary) {
                const std::size_t n = boundary->size();
                for (int k = 0; k < K; ++k) sum += boundary->samples[rng.below(n)];
            }
            const cplx g = -1.0 / (sum + law.sample(rng) + z);
            if (on_path && static_cast<std::size_t>(level) < path_length) path[level] = g;
            return g;
        }
    };

    parallel_for(replicas, cfg.workers, [&](std::size_t r) {
        Walker w{depth,    K,
                 z,        cfg.law,
                 boundary, CounterRng(cfg.seed, StreamDomain::tree, r),
                 run.path_values.data() + r * path_length,
                 path_length};
        run.roots.samples[r] = w.visit(0, path_length > 0);
    });
    return run;
}

inline MeasurePool finite_tree_green(int depth, const IterationConfig& cfg, std::size_t replicas) {
    return finite_tree_run(depth, cfg, replicas).roots;
}

/// Geometric grid 10^{lo_exp + k/per_decade}, k = 0..decades*per_decade.
inline std::vector<double> geometric_grid(double lo_exp = -6.0, int decades = 8,
                                          int per_decade = 16) {
    std::vector<double> t;
    for (int k = 0; k <= decades * per_decade; ++k)
        t.push_back(std::pow(10.0, lo_exp + static_cast<double>(k) / per_decade));
    return t;
}

/// t -> fraction of samples with |g - ref| >= t |ref|. Non-increasing in t.
struct ConcentrationTable {
    std::vector<double> t;
    std::vector<double> prob;
};

inline ConcentrationTable concentration_table(const MeasurePool& pool, cplx ref,
                                              const std::vector<double>& grid) {
    if (pool.samples.empty()) throw UsageError("concentration_table: empty pool");
    const double scale = std::abs(ref);
    std::vector<double> rel(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double dev = std::abs(pool.samples[i] - ref);
        rel[i] = scale > 0.0 ? dev / scale : (dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    std::sort(rel.begin(), rel.end());
    ConcentrationTable tab;
    tab.t = grid;
    tab.prob.reserve(grid.size());
    const double n = static_cast<double>(rel.size());
    for (double t : grid) {
        auto it = std::lower_bound(rel.begin(), rel.end(), t);
        tab.prob.push_back(static_cast<double>(std::distance(it, rel.end())) / n);
    }
    return tab;
}

struct PoolStats {
    double mean_hyp_dist = 0.0;
    /// estimate of E d(g, ref)^2
    double mean_hyp_dist_sq = 0.0;
    /// estimate of V d(g, ref)
    double variance_hyp_dist = 0.0;
    ConcentrationTable concentration;
    /// mean of log |g|
    double lyapunov_raw = 0.0;
};

inline PoolStats pool_stats(const MeasurePool& pool, const HalfPlanePoint& reference,
                            const std::vector<double>& grid = geometric_grid()) {
    if (pool.samples.empty()) throw UsageError("pool_stats: empty pool");
    const cplx ref = reference.value();
    const double n = static_cast<double>(pool.size());
    double s1 = 0.0, s2 = 0.0, lg = 0.0;
    for (const cplx& g : pool.samples) {
        const double d = hyp_dist(g, ref);
        s1 += d;
        s2 += d * d;
        lg += std::log(std::abs(g));
    }
    PoolStats st;
    st.mean_hyp_dist = s1 / n;
    st.mean_hyp_dist_sq = s2 / n;
    st.variance_hyp_dist = std::max(0.0, st.mean_hyp_dist_sq - st.mean_hyp_dist * st.mean_hyp_dist);
    st.concentration = concentration_table(pool, ref, grid);
    st.lyapunov_raw = lg / n;
    return st;
}

inline void write_pool_csv(const MeasurePool& pool, std::ostream& os) {
    os << "# generation=" << pool.generation << " seed=" << pool.seed << "\n";
    os << "re,im\n";
    os << std::setprecision(17);
    for (const cplx& g : pool.samples) os << g.real() << ',' << g.imag() << '\n';
}

inline constexpr char pool_magic[8] = {'B', 'P', 'O', 'O', 'L', '0', '0', '1'};

/// Little-endian: 8-byte magic, u64 N, u64 generation, u64 seed, then N (re, im) doubles.
inline void write_pool_binary(const MeasurePool& pool, std::ostream& os) {
    os.write(pool_magic, sizeof pool_magic);
    const std::uint64_t header[3] = {pool.size(), pool.generation, pool.seed};
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    os.write(reinterpret_cast<const char*>(pool.samples.data()),
             static_cast<std::streamsize>(pool.size() * sizeof(cplx)));
}

inline MeasurePool read_pool_binary(std::istream& is) {
    char magic[8];
    std::uint64_t header[3];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, pool_magic, sizeof magic) != 0)
        throw ConfigError("not a pool snapshot (bad magic)");
    if (!is.read(reinterpret_cast<char*>(header), sizeof header))
        throw ConfigError("truncated pool snapshot header");
    MeasurePool pool;
    pool.generation = header[1];
    pool.seed = header[2];
    pool.samples.resize(header[0]);
    if (!is.read(reinterpret_cast<char*>(pool.samples.data()),
                 static_cast<std::streamsize>(pool.size() * sizeof(cplx))))
        throw ConfigError("truncated pool snapshot body");
    return pool;
}

}  // namespace bethe
