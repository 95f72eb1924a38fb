#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>
// pchip.hpp uses isnan unqualified without including it (Boost 1.74)
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "bethe/disorder.hpp"
#include "bethe/errors.hpp"
#include "bethe/halfplane.hpp"
#include "bethe/parallel.hpp"
#include "bethe/population.hpp"

namespace bethe {

/// Claim f(center + x) <= s (|x| - r)_+^{-2}. s = 0 means f vanishes for |x| > r.
struct TailBound {
    double s = 0.0;
    double r = 0.0;
    double center = 0.0;

    double bound(double x) const {
        const double d = std::abs(x - center) - r;
        if (d <= 0.0) return std::numeric_limits<double>::infinity();
        return s / (d * d);
    }
};

/// Asymptotic model of a density beyond its grid: f(x) ~ s / (|x - center| - r)^2.
/// Fitted to the edge values and the exterior mass, so r may be negative.
/// s = 0 means the density vanishes off the grid.
struct TailModel {
    double s = 0.0;
    double r = 0.0;
    double center = 0.0;

    bool zero() const noexcept { return s == 0.0; }
    double value(double x) const noexcept {
        if (s == 0.0) return 0.0;
        const double d = std::abs(x - center) - r;
        return s / (d * d);
    }
    /// mass of (-inf, y], y left of the grid
    double lower_mass(double y) const noexcept { return s == 0.0 ? 0.0 : s / (center - r - y); }
    /// mass of [y, inf), y right of the grid
    double upper_mass(double y) const noexcept { return s == 0.0 ? 0.0 : s / (y - center - r); }
};

/// Symmetric uniform grid x_i = (i - n/2) dx, dx = 2X/n, i = 0..n-1.
struct GridSpec {
    double X = 8.0;
    std::size_t n = std::size_t{1} << 14;

    static GridSpec for_energy(double E, std::size_t n = std::size_t{1} << 14) {
        return {std::max(8.0, 4.0 * (std::abs(E) + 1.0)), n};
    }
    void check() const {
        if (!(X > 0.0) || !std::isfinite(X)) throw ConfigError("grid half-width must be > 0");
        if (n < 16 || (n & (n - 1)) != 0) throw ConfigError("grid size must be a power of two >= 16");
    }
    double dx() const noexcept { return 2.0 * X / static_cast<double>(n); }
    double x(std::size_t i) const noexcept {
        return (static_cast<double>(i) - static_cast<double>(n / 2)) * dx();
    }
    double x_min() const noexcept { return -X; }
    double x_max() const noexcept { return x(n - 1); }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Density on a GridSpec plus a tail model for the mass off the grid.
struct GridDensity {
    GridSpec grid;
    std::vector<double> values;
    std::optional<TailModel> tail;

    double x_min() const noexcept { return grid.x_min(); }
    double x_max() const noexcept { return grid.x_max(); }
    std::size_t n_points() const noexcept { return grid.n; }

    double trapz() const {
        double acc = 0.0;
        for (double v : values) acc += v;
        return grid.dx() * (acc - 0.5 * (values.front() + values.back()));
    }
    double tail_mass() const {
        if (!tail) return 0.0;
        return tail->lower_mass(x_min()) + tail->upper_mass(x_max());
    }
    double mass() const { return trapz() + tail_mass(); }

    /// Linear interpolation on the grid, tail model outside.
    double value_at(double x) const {
        if (x < x_min() || x > x_max()) {
            if (!tail) throw ConfigError("density has no tail model beyond its grid");
            return tail->value(x);
        }
        const double p = (x - x_min()) / grid.dx();
        const std::size_t i = std::min(static_cast<std::size_t>(p), grid.n - 2);
        const double f = p - static_cast<double>(i);
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }
};

namespace detail {

inline double trapz(std::span<const double> v, double dx) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return dx * (acc - 0.5 * (v.front() + v.back()));
}

}  // namespace detail

/// Tail model matching the edge values a = f(x_max), b = f(x_min) and the
/// exterior mass M. With u, v the distances from the edges to the model poles,
///   a = s/u^2, b = s/v^2, M = s/u + s/v.
inline TailModel fit_tail(double a, double b, double M, double x_min, double x_max) {
    if (!(M > 1e-15)) return {};
    const double width = x_max - x_min;
    if (a <= 0.0 && b <= 0.0) {
        const double u = 0.5 * width;
        return {0.5 * M * u, 0.0, 0.5 * (x_min + x_max)};
    }
    const double tiny = 1e-300;
    a = std::max(a, tiny);
    b = std::max(b, tiny);
    const double u = M / (a + std::sqrt(a * b));
    const double v = u * std::sqrt(a / b);
    TailModel t;
    t.s = a * u * u;
    t.center = 0.5 * (x_max + x_min - u + v);
    t.r = 0.5 * (width - u - v);
    return t;
}

inline TailModel fit_tail(const GridDensity& f, double exterior_mass) {
    return fit_tail(f.values.back(), f.values.front(), exterior_mass, f.x_min(), f.x_max());
}

/// (1/pi) b / (b^2 + (x - a)^2) for z = a + ib.
inline double cauchy_density(const HalfPlanePoint& z, double x) noexcept {
    const double b = z.im(), d = x - z.re();
    return b / (std::numbers::pi * (b * b + d * d));
}

/// sigma_z([lo, hi]).
inline double cauchy_mass(cplx z, double lo, double hi) noexcept {
    return (std::atan((hi - z.real()) / z.imag()) - std::atan((lo - z.real()) / z.imag())) /
           std::numbers::pi;
}

/// Cauchy projection (1/N) sum_k sigma_{g_k} of a pool on a grid. Kernels with
/// Im g >= 4 dx are sampled pointwise; narrower ones are cell-averaged near
/// their centre so that their mass is not lost between nodes. The tail model
/// carries the exact exterior mass.
inline GridDensity cauchy_project(const MeasurePool& pool, const GridSpec& grid,
                                  unsigned workers = 1) {
    if (pool.samples.empty()) throw UsageError("cauchy_project: empty pool");
    grid.check();
    double bary = 0.0;
    for (const cplx& g : pool.samples) bary += g.real();
    bary /= static_cast<double>(pool.size());
    if (bary < grid.x_min() || bary > grid.x_max())
        throw ConfigError("grid [" + std::to_string(grid.x_min()) + ", " +
                          std::to_string(grid.x_max()) + "] does not contain the pool barycenter " +
                          std::to_string(bary));
    const double dx = grid.dx();
    const double inv_pi = 1.0 / std::numbers::pi;
    const double window = 64.0 * dx;
    GridDensity out;
    out.grid = grid;
    out.values.assign(grid.n, 0.0);
    parallel_chunks(grid.n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double x = grid.x(i);
            double acc = 0.0;
            for (const cplx& g : pool.samples) {
                const double a = g.real(), b = g.imag(), d = x - a;
                if (b < 4.0 * dx && std::abs(d) < window)
                    acc += (std::atan((d + 0.5 * dx) / b) - std::atan((d - 0.5 * dx) / b)) *
                           inv_pi / dx;
                else
                    acc += inv_pi * b / (b * b + d * d);
            }
            out.values[i] = acc / static_cast<double>(pool.size());
        }
    });
    double exterior = 0.0;
    for (const cplx& g : pool.samples)
        exterior += 1.0 - cauchy_mass(g, grid.x_min(), grid.x_max());
    exterior /= static_cast<double>(pool.size());
    out.tail = fit_tail(out, exterior);
    return out;
}

inline GridDensity cauchy_grid(cplx z, const GridSpec& grid) {
    MeasurePool p;
    p.samples = {z};
    return cauchy_project(p, grid);
}

/// Unit mass at the node nearest x0.
inline GridDensity delta_grid(const GridSpec& grid, double x0 = 0.0) {
    grid.check();
    const long i = std::lround(x0 / grid.dx()) + static_cast<long>(grid.n / 2);
    if (i < 1 || i + 1 >= static_cast<long>(grid.n))
        throw ConfigError("atom at " + std::to_string(x0) + " lies outside the grid");
    GridDensity out{grid, std::vector<double>(grid.n, 0.0), TailModel{}};
    out.values[static_cast<std::size_t>(i)] = 1.0 / grid.dx();
    return out;
}

/// Cell averages of the law's density (exact cell masses from the CDF); a
/// point mass becomes a delta grid.
inline GridDensity law_grid(const DisorderLaw& law, const GridSpec& grid) {
    grid.check();
    if (law.is_atomic()) return delta_grid(grid, law.table_nodes().front());
    if (law.support_radius() + grid.dx() >= grid.X)
        throw ConfigError("disorder support exceeds the density grid");
    const double dx = grid.dx();
    GridDensity out{grid, std::vector<double>(grid.n, 0.0), TailModel{}};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        out.values[i] = std::max(0.0, law.cdf(x + 0.5 * dx) - law.cdf(x - 0.5 * dx)) / dx;
    }
    return out;
}

/// Measured sub-Cauchy tail of the law about 0 with offset r = beta:
/// s = sup_{|x| > r} density(x) (|x| - r)^2 (zero for support inside [-r, r]).
inline TailBound law_tail(const DisorderLaw& law, double r = -1.0) {
    if (law.is_atomic()) return {0.0, std::abs(law.table_nodes().front()), 0.0};
    if (r < 0.0) r = law.beta();
    const double R = law.support_radius();
    double s = 0.0;
    if (R > r) {
        constexpr int probes = 4096;
        auto probe = [&](double x) {
            const double d = std::abs(x) - r;
            if (d > 0.0)
                s = std::max(s, std::max(law.density(x), law.density(-x)) * d * d);
        };
        for (int k = 1; k <= probes; ++k) probe(r + (R - r) * k / probes);
        for (double x : law.table_nodes()) probe(x);
    }
    return {s, r, 0.0};
}

/// sigma_{i eta}(x) <= (eta/pi) x^{-2}.
inline TailBound cauchy_tail(double eta) { return {eta / std::numbers::pi, 0.0, 0.0}; }

struct ConvolutionDiagnostics {
    /// mass of the untruncated linear convolution of the extended arrays
    double raw_mass = 1.0;
};

/// Linear convolution by zero-padded FFT. Both inputs are extended to
/// [-4X, 4X) with their tail models first, so heavy tails feed back onto the
/// grid. The output tail model absorbs 1 - trapz(output).
inline GridDensity grid_convolve(const GridDensity& f, const GridDensity& g,
                                 ConvolutionDiagnostics* diag = nullptr) {
    if (!(f.grid == g.grid)) throw UsageError("grid_convolve: grids differ");
    if (f.values.size() != f.grid.n || g.values.size() != g.grid.n)
        throw UsageError("grid_convolve: value count does not match grid");
    const GridSpec& grid = f.grid;
    const std::size_t n = grid.n;
    constexpr std::size_t ext_factor = 4;
    const std::size_t L = ext_factor * n;
    const std::size_t offset = L / 2 - n / 2;
    const double dx = grid.dx();

    auto extend = [&](const GridDensity& d) {
        std::vector<double> a(2 * L, 0.0);
        for (std::size_t p = 0; p < L; ++p) {
            if (p >= offset && p < offset + n) {
                a[p] = d.values[p - offset];
            } else if (d.tail) {
                const double x = (static_cast<double>(p) - static_cast<double>(L / 2)) * dx;
                a[p] = d.tail->value(x);
            }
        }
        return a;
    };
    const std::vector<double> a = extend(f), b = extend(g);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    std::vector<double> c;
    fft.inv(c, fa);

    GridDensity out;
    out.grid = grid;
    out.values.resize(n);
    // x_p + x_q = (p + q - L) dx, and node k sits at (k - n/2) dx.
    for (std::size_t k = 0; k < n; ++k) out.values[k] = std::max(0.0, dx * c[k + L - n / 2]);
    if (diag) {
        double total = 0.0;
        for (double v : c) total += v;
        diag->raw_mass = dx * total;
    }
    out.tail = fit_tail(out, 1.0 - out.trapz());
    return out;
}

/// Density of -1/(Y + E) for Y ~ f:
///   v(x) = x^{-2} f(-1/x - E).
/// Node values are cell averages of v, taken as differences of the CDF of f,
/// which is interpolated by a monotone cubic through the cumulative trapezoid
/// sums and continued analytically by the tail model. Mass is conserved by
/// construction; the cell at x = 0 receives the far tails of f.
inline GridDensity pushforward_reciprocal(const GridDensity& f, double E) {
    const GridSpec& grid = f.grid;
    const std::size_t n = grid.n;
    const double dx = grid.dx();
    const double lo = f.x_min(), hi = f.x_max();
    const bool has_tail = f.tail.has_value();
    const TailModel tail = f.tail.value_or(TailModel{});

    std::vector<double> xs(n), F(n);
    double acc = tail.lower_mass(lo);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) acc += 0.5 * dx * (f.values[i - 1] + f.values[i]);
        xs[i] = grid.x(i);
        F[i] = acc;
    }
    const double total = acc + tail.upper_mass(hi);
    const double F_hi = F.back();
    using boost::math::interpolators::pchip;
    pchip<std::vector<double>> spline(std::move(xs), std::move(F));

    auto need_tail = [&] {
        if (!has_tail)
            throw ConfigError("pushforward needs the density beyond its grid but it has no tail model");
    };
    // mass below y, and mass above y, each computed without cancellation near its own end
    auto below = [&](double y) {
        if (y < lo) { need_tail(); return tail.lower_mass(y); }
        if (y > hi) { need_tail(); return total - tail.upper_mass(y); }
        return spline(y);
    };
    auto above = [&](double y) {
        if (y > hi) { need_tail(); return tail.upper_mass(y); }
        if (y < lo) { need_tail(); return total - tail.lower_mass(y); }
        return total - spline(y);
    };
    // mass of [y0, y1], y0 <= y1
    auto between = [&](double y0, double y1) {
        if (y0 >= hi) return tail.upper_mass(y0) - tail.upper_mass(y1);
        if (y1 <= lo) return tail.lower_mass(y1) - tail.lower_mass(y0);
        return below(y1) - below(y0);
    };
    auto pre = [&](double x) { return -1.0 / x - E; };

    GridDensity out;
    out.grid = grid;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.x(i);
        double m;
        if (i == n / 2) {
            m = above(pre(-0.5 * dx)) + below(pre(0.5 * dx));
        } else {
            const double y0 = pre(x - 0.5 * dx), y1 = pre(x + 0.5 * dx);
            m = between(y0, y1);
        }
        out.values[i] = std::max(0.0, m) / dx;
    }
    if (!has_tail && out.values.front() + out.values.back() > 0.0) need_tail();
    out.tail = fit_tail(out, std::max(0.0, total - out.trapz()));
    return out;
}

inline void normalize(GridDensity& f) {
    const double m = f.mass();
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("density has no mass to normalize");
    for (double& v : f.values) v /= m;
    if (f.tail) f.tail->s /= m;
}

struct DensityStepDiagnostics {
    /// mass before the final renormalization
    double mass_before_normalize = 1.0;
    /// smallest raw mass among the convolutions (loss off the extended grid)
    double min_convolution_mass = 1.0;
};

/// One step of the projected iteration
///   f -> ((f^{*K} * nu * delta_E * sigma_{i eta}) o psi) psi'.
/// The K-fold power is formed left to right, so the floating-point order is fixed.
inline GridDensity density_step(const GridDensity& f, const DisorderLaw& law,
                                const EnergyPoint& energy, DensityStepDiagnostics* diag = nullptr) {
    ConvolutionDiagnostics cd;
    double min_mass = 1.0;
    auto conv = [&](const GridDensity& a, const GridDensity& b) {
        GridDensity c = grid_convolve(a, b, &cd);
        min_mass = std::min(min_mass, cd.raw_mass);
        return c;
    };
    GridDensity acc = f;
    for (int k = 1; k < energy.K(); ++k) acc = conv(acc, f);
    if (!law.is_atomic() || law.table_nodes().front() != 0.0) acc = conv(acc, law_grid(law, f.grid));
    acc = conv(acc, cauchy_grid({0.0, energy.eta()}, f.grid));
    GridDensity out = pushforward_reciprocal(acc, energy.E());
    const double m = out.mass();
    normalize(out);
    if (diag) {
        diag->mass_before_normalize = m;
        diag->min_convolution_mass = min_mass;
    }
    return out;
}

/// L1 distance on the grid (trapezoid rule).
inline double l1_distance(const GridDensity& a, const GridDensity& b) {
    if (!(a.grid == b.grid)) throw UsageError("l1_distance: grids differ");
    std::vector<double> d(a.values.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.values[i] - b.values[i]);
    return detail::trapz(d, a.grid.dx());
}

struct DensityFixedPoint {
    GridDensity density;
    int steps = 0;
    bool converged = false;
    /// L1 change per step
    std::vector<double> trace;
};

/// Iterates density_step from f0 until the L1 change per step is <= tol.
inline DensityFixedPoint density_fixed_point(GridDensity f0, const DisorderLaw& law,
                                             const EnergyPoint& energy, int max_steps = 500,
                                             double tol = 1e-7) {
    DensityFixedPoint res;
    res.density = std::move(f0);
    for (int k = 0; k < max_steps; ++k) {
        GridDensity next = density_step(res.density, law, energy);
        const double change = l1_distance(next, res.density);
        res.trace.push_back(change);
        res.density = std::move(next);
        res.steps = k + 1;
        if (change <= tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

inline void write_density(const GridDensity& f, std::ostream& os) {
    os << std::setprecision(17);
    for (std::size_t i = 0; i < f.grid.n; ++i) os << f.grid.x(i) << ' ' << f.values[i] << '\n';
}

/// {"s":..,"r":..,"center":..}, or null without a tail model.
inline std::string tail_json(const GridDensity& f) {
    if (!f.tail) return "null";
    std::ostringstream os;
    os << std::setprecision(17) << "{\"s\":" << f.tail->s << ",\"r\":" << f.tail->r
       << ",\"center\":" << f.tail->center << "}";
    return os.str();
}

// ---------------------------------------------------------------------------
// Sub-Cauchy tail arithmetic.

/// Tail of a convolution: (s1 + s2 + 8 s1 s2 / t, r1 + r2 + t) about c1 + c2.
/// A factor with s = 0 is supported in its r-ball, and then the offsets add exactly.
inline TailBound tail_combine(const TailBound& a, const TailBound& b, double t) {
    if (!(t > 0.0)) throw UsageError("tail_combine: t must be > 0");
    if (a.s == 0.0 || b.s == 0.0) return {a.s + b.s, a.r + b.r, a.center + b.center};
    return {a.s + b.s + 8.0 * a.s * b.s / t, a.r + b.r + t, a.center + b.center};
}

/// tau = w^2 / (1 - |w| r)^2, the contraction of x -> -1/x - E on a tail about Kw.
inline double tail_tau(double w, double r) {
    const double q = std::abs(w) * r;
    if (!(q < 1.0))
        throw CertificateBreakdown("|w| r = " + std::to_string(q) + " >= 1: no contraction");
    return w * w / ((1.0 - q) * (1.0 - q));
}

/// (tau s, tau r) about w.
inline TailBound tail_pushforward(const TailBound& b, double w) {
    const double tau = tail_tau(w, b.r);
    return {tau * b.s, tau * b.r, w};
}

/// Tail of f^{*K} * nu * sigma_{i eta} (centred at K w) before the pushforward.
inline TailBound tail_combined(const TailBound& f, const TailBound& nu, const TailBound& eta,
                               double t, int K) {
    TailBound acc = f;
    for (int k = 1; k < K; ++k) acc = tail_combine(acc, f, t);
    acc = tail_combine(acc, nu, t);
    return tail_combine(acc, eta, t);
}

/// One induction step: K copies of the density tail about w, the potential
/// tail and the sigma_{i eta} tail about 0, then the reciprocal pushforward.
inline TailBound tail_step(const TailBound& f, const TailBound& nu, const TailBound& eta, double t,
                           double w, int K) {
    return tail_pushforward(tail_combined(f, nu, eta, t, K), w);
}

struct TailCertificate {
    double E = 0.0;
    int K = 2;
    double beta = 0.0;
    double w = 0.0;
    double t = 0.0;
    double s0 = 0.0, r0 = 0.0;
    TailBound nu_tail, eta_tail;
    /// (s_n, r_n) for n = 0..steps taken
    std::vector<TailBound> history;
    bool closes = false;
    bool breakdown = false;
    /// first step whose bound exceeds the seed (or broke down), -1 if none
    int first_failing_step = -1;
    std::string failure;
    /// mu(|z - w| >= 2 r0) <= bound, valid when closes
    double concentration_radius = 0.0;
    double concentration_bound = std::numeric_limits<double>::quiet_NaN();
};

/// Inductive tail certificate in the hyperbolic regime |E| >= 2 sqrt K.
/// Seeds s0 = beta^{3/4} w^2, r0 = beta^{1/4} |w| and iterates tail_step; the
/// induction closes when every (s_n, r_n) <= (s0, r0) up to 1e-12 relative.
/// t defaults to beta^{1/2} w^2.
inline TailCertificate tail_certify(const EnergyPoint& energy, double beta, const TailBound& nu_tail,
                                    const TailBound& eta_tail, int n_steps,
                                    std::optional<double> t_opt = std::nullopt) {
    const int K = energy.K();
    const double E = energy.E();
    if (std::abs(E) < 2.0 * std::sqrt(static_cast<double>(K)) * (1.0 - 1e-12))
        throw UsageError("tail_certify requires |E| >= 2 sqrt K");
    if (!(beta >= 0.0 && beta < 1.0)) throw UsageError("tail_certify requires beta in [0, 1)");
    if (n_steps < 1) throw UsageError("tail_certify requires n_steps >= 1");
    TailCertificate c;
    c.E = E;
    c.K = K;
    c.beta = beta;
    c.w = free_green(cplx(E, 0.0), K).real();
    const double w = c.w, w2 = w * w;
    c.s0 = std::pow(beta, 0.75) * w2;
    c.r0 = std::pow(beta, 0.25) * std::abs(w);
    c.t = t_opt.value_or(std::sqrt(beta) * w2);
    c.nu_tail = nu_tail;
    c.eta_tail = eta_tail;
    c.concentration_radius = 2.0 * c.r0;
    TailBound cur{c.s0, c.r0, w};
    c.history.push_back(cur);
    const double slack = 1.0 + 1e-12;
    if (beta == 0.0) {
        // nothing to propagate: the law is the atom at w
        c.closes = true;
        c.concentration_bound = 0.0;
        return c;
    }
    if (!(c.t > 0.0)) throw UsageError("tail_certify requires t > 0");
    double s_sup = c.s0, r_sup = c.r0;
    for (int n = 1; n <= n_steps; ++n) {
        try {
            cur = tail_step(cur, nu_tail, eta_tail, c.t, w, K);
        } catch (const CertificateBreakdown& e) {
            c.breakdown = true;
            c.first_failing_step = n;
            c.failure = e.what();
            return c;
        }
        c.history.push_back(cur);
        s_sup = std::max(s_sup, cur.s);
        r_sup = std::max(r_sup, cur.r);
        if (cur.s > c.s0 * slack || cur.r > c.r0 * slack) {
            c.first_failing_step = n;
            c.failure = cur.s > c.s0 * slack ? "tau s exceeds the seed s0" : "tau r exceeds the seed r0";
            return c;
        }
    }
    c.closes = true;
    // sigma_i([1, inf)) = 1/4, and the tail integral over |x| > R is 2 s / (R - r).
    c.concentration_bound = 4.0 * 2.0 * s_sup / (c.concentration_radius - r_sup);
    return c;
}

/// Tries t = t_default * 2^k for k = -8..8 and returns the closing certificate
/// with the smallest bound; falls back to the default-t report.
inline TailCertificate tail_certify_scan(const EnergyPoint& energy, double beta,
                                         const TailBound& nu_tail, const TailBound& eta_tail,
                                         int n_steps) {
    TailCertificate best = tail_certify(energy, beta, nu_tail, eta_tail, n_steps);
    if (beta == 0.0) return best;
    const double t0 = best.t;
    for (int k = -8; k <= 8; ++k) {
        TailCertificate c = tail_certify(energy, beta, nu_tail, eta_tail, n_steps, t0 * std::ldexp(1.0, k));
        if (c.closes && (!best.closes || c.concentration_bound < best.concentration_bound))
            best = std::move(c);
    }
    return best;
}

}  // namespace bethe
