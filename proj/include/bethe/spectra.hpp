#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bethe/disorder.hpp"
#include "bethe/errors.hpp"
#include "bethe/halfplane.hpp"
#include "bethe/population.hpp"
#include "bethe/rng.hpp"
#include "bethe/stats.hpp"

namespace bethe {

enum class PhaseLabel { delocalized_predicted, localized_predicted, boundary };

inline std::string to_string(PhaseLabel p) {
    switch (p) {
    case PhaseLabel::delocalized_predicted: return "delocalized_predicted";
    case PhaseLabel::localized_predicted: return "localized_predicted";
    case PhaseLabel::boundary: return "boundary";
    }
    return "boundary";
}

/// Mean of log|g| over the pool with delete-one-block jackknife error.
inline Estimate lyapunov_estimate(const MeasurePool& pool, std::size_t blocks = 100) {
    if (pool.samples.empty()) throw UsageError("lyapunov_estimate: empty pool");
    std::vector<double> logs(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) logs[i] = std::log(std::abs(pool.samples[i]));
    return jackknife_mean(logs, blocks);
}

/// lambda + log K; positive values satisfy the delocalization criterion.
inline double criterion_margin(double lyapunov, int K) {
    return lyapunov + std::log(static_cast<double>(K));
}

inline Estimate criterion_margin(const Estimate& lyapunov, int K) {
    return {criterion_margin(lyapunov.value, K), lyapunov.error};
}

inline PhaseLabel phase_classify(double E, double beta, int K, double eps, const Estimate& margin) {
    (void)beta;
    if (!(eps > 0.0)) throw UsageError("phase_classify: eps must be > 0");
    const double edge = K + 1.0;
    if (std::abs(E) > edge + eps) return PhaseLabel::localized_predicted;
    if (std::abs(E) < edge - eps && margin.value - 2.0 * margin.error > 0.0)
        return PhaseLabel::delocalized_predicted;
    return PhaseLabel::boundary;
}

struct ConcentrationProbe {
    /// P(|g - w| >= t |w|) on the grid
    ConcentrationTable table;
    /// smallest grid t with P(t) <= t |w|; NaN if none
    double t_star = std::numeric_limits<double>::quiet_NaN();
    /// weak-integrability profile: P(|g| >= 1/t) on the same grid
    std::vector<double> weak_prob;
};

inline ConcentrationProbe concentration_probe(const MeasurePool& pool, const EnergyPoint& energy,
                                              double beta,
                                              const std::vector<double>& grid = geometric_grid()) {
    (void)beta;
    const cplx w = free_green(energy);
    ConcentrationProbe probe;
    probe.table = concentration_table(pool, w, grid);
    const double aw = std::abs(w);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (probe.table.prob[k] <= grid[k] * aw) {
            probe.t_star = grid[k];
            break;
        }
    }
    std::vector<double> mod(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) mod[i] = std::abs(pool.samples[i]);
    std::sort(mod.begin(), mod.end());
    for (double t : grid) {
        auto it = std::lower_bound(mod.begin(), mod.end(), 1.0 / t);
        probe.weak_prob.push_back(static_cast<double>(std::distance(it, mod.end())) /
                                  static_cast<double>(mod.size()));
    }
    return probe;
}

/// (1/n) log |g(p_1) ... g(p_n)| along the stored root path, averaged over
/// replicas, with a replica jackknife error. n = 1 is the root value itself.
inline Estimate offdiagonal_check(const TreeRun& run, std::size_t n) {
    if (n < 1) throw UsageError("offdiagonal_check: path length must be >= 1");
    if (n > run.path_length)
        throw UsageError("offdiagonal_check: path length " + std::to_string(n) +
                         " exceeds the stored path of " + std::to_string(run.path_length));
    const std::size_t m = run.roots.size();
    std::vector<double> per(m);
    for (std::size_t r = 0; r < m; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += std::log(std::abs(run.path_value(r, k)));
        per[r] = acc / static_cast<double>(n);
    }
    return jackknife_mean(per, std::min<std::size_t>(m, 100));
}

// ---------------------------------------------------------------------------
// Solver driver.

struct EstimatorOptions {
    /// independent pools, each with its own seed
    int replicas = 4;
    /// generations averaged after convergence
    int measure_generations = 100;
};

struct LyapunovRun {
    /// mean over replicas of the time-averaged pool mean of log|g|; error from
    /// the spread across replicas
    Estimate lyapunov;
    /// final pool of replica 0
    MeasurePool pool;
    bool converged = true;
    /// generations of replica 0 until convergence
    std::uint64_t generations = 0;
    std::vector<double> replica_values;
};

inline std::uint64_t replica_seed(std::uint64_t seed, int replica) {
    return replica == 0 ? seed : mix64(seed ^ (0xA24BAED4963EE407ull * static_cast<std::uint64_t>(replica)));
}

inline LyapunovRun estimate_lyapunov(const IterationConfig& cfg, const EstimatorOptions& opt = {},
                                     std::optional<InitMode> start = std::nullopt) {
    if (opt.replicas < 1) throw ConfigError("replicas must be >= 1");
    if (opt.measure_generations < 1) throw ConfigError("measure_generations must be >= 1");
    LyapunovRun run;
    for (int r = 0; r < opt.replicas; ++r) {
        IterationConfig c = cfg;
        c.seed = replica_seed(cfg.seed, r);
        FixedPointResult fp = run_to_fixed_point(c, start);
        run.converged = run.converged && fp.converged;
        if (r == 0) run.generations = fp.pool.generation;
        MeasurePool pool = std::move(fp.pool);
        double acc = 0.0;
        for (int g = 0; g < opt.measure_generations; ++g) {
            pool = step_pool(pool, c);
            double s = 0.0;
            for (const cplx& x : pool.samples) s += std::log(std::abs(x));
            acc += s / static_cast<double>(pool.size());
        }
        run.replica_values.push_back(acc / opt.measure_generations);
        if (r == 0) run.pool = std::move(pool);
    }
    run.lyapunov = jackknife_mean(run.replica_values, run.replica_values.size());
    return run;
}

/// Least-squares line through (eta_k, y_k) evaluated at eta = 0; the error is
/// propagated from the per-point errors.
inline Estimate extrapolate_to_zero(const std::vector<double>& eta, const std::vector<Estimate>& y) {
    const std::size_t n = eta.size();
    if (n == 0 || y.size() != n) throw UsageError("extrapolate_to_zero: bad input");
    if (n == 1) return y[0];
    double mx = 0.0;
    for (double e : eta) mx += e;
    mx /= static_cast<double>(n);
    double sxx = 0.0;
    for (double e : eta) sxx += (e - mx) * (e - mx);
    if (!(sxx > 0.0)) return y[0];
    // intercept = sum_k c_k y_k with c_k = 1/n - mx (eta_k - mx) / sxx
    Estimate out{0.0, 0.0};
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double c = 1.0 / static_cast<double>(n) - mx * (eta[k] - mx) / sxx;
        out.value += c * y[k].value;
        var += c * c * y[k].error * y[k].error;
    }
    out.error = std::sqrt(var);
    return out;
}

/// eta = min(beta^2, 1e-3) {1, 1/4, 1/16}; 1e-3 {..} when beta = 0.
inline std::vector<double> eta_schedule(double beta) {
    const double base = beta > 0.0 ? std::min(beta * beta, 1e-3) : 1e-3;
    return {base, base / 4.0, base / 16.0};
}

struct EtaSample {
    double eta = 0.0;
    Estimate lyapunov;
    bool converged = true;
    std::uint64_t generations = 0;
};

struct SpectralReport {
    double E = 0.0;
    int K = 2;
    double beta = 0.0;
    /// eta of the reported pool (the smallest one in a schedule)
    double eta = 0.0;
    bool extrapolated = false;
    Estimate lyapunov;
    Estimate margin;
    /// log |w_E| at real E
    double log_w = 0.0;
    ConcentrationProbe concentration;
    PhaseLabel phase = PhaseLabel::boundary;
    bool converged = true;
    std::vector<EtaSample> raw;

    std::string status() const { return converged ? "converged" : "unconverged"; }
};

struct SolveOptions {
    std::size_t pool_size = 100000;
    int max_generations = 500;
    double convergence_tol = 0.005;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    EstimatorOptions estimator;
    /// fixed eta; the schedule with extrapolation is used when empty
    std::optional<double> eta;
    double eps = 0.1;
};

inline SpectralReport solve_point(double E, int K, const DisorderLaw& law, const SolveOptions& opt) {
    SpectralReport rep;
    rep.E = E;
    rep.K = K;
    rep.beta = law.beta();
    rep.log_w = std::log(std::abs(free_green(cplx(E, 0.0), K)));
    const std::vector<double> etas = opt.eta ? std::vector<double>{*opt.eta} : eta_schedule(law.beta());
    std::vector<Estimate> lam;
    MeasurePool last;
    for (double eta : etas) {
        IterationConfig cfg{EnergyPoint(E, eta, K), law};
        cfg.pool_size = opt.pool_size;
        cfg.max_generations = opt.max_generations;
        cfg.convergence_tol = opt.convergence_tol;
        cfg.seed = opt.seed;
        cfg.workers = opt.workers;
        LyapunovRun run = estimate_lyapunov(cfg, opt.estimator);
        rep.raw.push_back({eta, run.lyapunov, run.converged, run.generations});
        rep.converged = rep.converged && run.converged;
        lam.push_back(run.lyapunov);
        last = std::move(run.pool);
        rep.eta = eta;
    }
    rep.extrapolated = etas.size() > 1;
    rep.lyapunov = extrapolate_to_zero(etas, lam);
    rep.margin = criterion_margin(rep.lyapunov, K);
    rep.concentration = concentration_probe(last, EnergyPoint(E, rep.eta, K), law.beta());
    rep.phase = phase_classify(E, law.beta(), K, opt.eps, rep.margin);
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization.

/// Fixed CSV column order of a report row.
inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "E",      "K",        "beta",          "eta",          "extrapolated", "lyapunov",
        "lyapunov_stderr", "criterion_margin", "log_w", "t_star", "phase", "status"};
    return cols;
}

namespace detail {
/// Shortest text that reads back to the same double.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}
}  // namespace detail

inline std::string report_csv_row(const SpectralReport& r) {
    using detail::fmt;
    std::ostringstream os;
    os << fmt(r.E) << ',' << r.K << ',' << fmt(r.beta) << ',' << fmt(r.eta) << ','
       << (r.extrapolated ? 1 : 0) << ',' << fmt(r.lyapunov.value) << ',' << fmt(r.lyapunov.error)
       << ',' << fmt(r.margin.value) << ',' << fmt(r.log_w) << ',' << fmt(r.concentration.t_star)
       << ',' << to_string(r.phase) << ',' << r.status();
    return os.str();
}

inline nlohmann::ordered_json to_json(const SpectralReport& r) {
    auto num = [](double x) -> nlohmann::ordered_json {
        if (std::isfinite(x)) return x;
        return nullptr;
    };
    nlohmann::ordered_json j;
    j["E"] = r.E;
    j["K"] = r.K;
    j["beta"] = r.beta;
    j["eta"] = r.eta;
    j["extrapolated"] = r.extrapolated;
    j["lyapunov"] = r.lyapunov.value;
    j["lyapunov_stderr"] = r.lyapunov.error;
    j["criterion_margin"] = r.margin.value;
    j["log_w"] = r.log_w;
    j["t_star"] = num(r.concentration.t_star);
    j["phase"] = to_string(r.phase);
    j["status"] = r.status();
    auto& raw = j["raw"] = nlohmann::ordered_json::array();
    for (const auto& s : r.raw)
        raw.push_back({{"eta", s.eta},
                       {"lyapunov", s.lyapunov.value},
                       {"lyapunov_stderr", s.lyapunov.error},
                       {"converged", s.converged},
                       {"generations", s.generations}});
    j["concentration"] = {{"t", r.concentration.table.t},
                          {"prob", r.concentration.table.prob},
                          {"weak_prob", r.concentration.weak_prob}};
    return j;
}

}  // namespace bethe
