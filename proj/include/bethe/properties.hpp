#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bethe/halfplane.hpp"
#include "bethe/rng.hpp"

namespace bethe {

/// Outcome of one randomized inequality check on the hyperbolic distance.
struct PropertyResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    /// min over trials of (rhs - lhs) / max(1, |lhs|, |rhs|).
    double worst_slack = 0.0;
    bool passed() const noexcept { return violations == 0; }
};

struct PropertySuiteOptions {
    std::size_t trials = 100000;
    std::uint64_t seed = 20240601;
    double tolerance = 1e-10;
    /// Explicit constant for the perturbation bound
    ///   E d(z + X, w)^2 <= (1 + C s^2) d(z, w)^2 + C s^2.
    /// Expanding E|X - u|^4 with E X = 0 and bounding E|X|^3 by Hoelder/AM-GM
    /// gives E|X - u|^4 <= |u|^4 + 8|u|^2 E X^2 + 3 E X^4; the imaginary-ratio
    /// bound Im w / Im z <= 2 + d then yields
    ///   E d'^2 <= (1 + 11 s^2) d^2 + 28 s^2 d + 12 s^2 <= (1 + 25 s^2) d^2 + 26 s^2,
    /// so any C >= 26 is admissible.
    double perturb_constant = 64.0;
    /// Monte Carlo draws per tuple for the continuous perturbation law.
    int perturb_draws = 64;
};

namespace detail {

struct PointSampler {
    CounterRng rng;
    cplx point() {
        const double re = 8.0 * rng.uniform() - 4.0;
        const double im = std::pow(10.0, 4.0 * rng.uniform() - 2.0);
        return {re, im};
    }
    double coeff() { return 6.0 * rng.uniform() - 3.0; }
    MoebiusMap real_map(bool unimodular) {
        for (;;) {
            double a = coeff(), b = coeff(), c = coeff(), d = coeff();
            const double det = a * d - b * c;
            if (det > 0.05) {
                if (unimodular) {
                    const double s = 1.0 / std::sqrt(det);
                    a *= s, b *= s, c *= s, d *= s;
                }
                return {a, b, c, d};
            }
        }
    }
};

class SlackTracker {
public:
    SlackTracker(std::string name, double tol) : tol_(tol) { res_.name = std::move(name); res_.worst_slack = INFINITY; }
    void check(double lhs, double rhs) {
        const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
        const double slack = (rhs - lhs) / scale;
        ++res_.trials;
        res_.worst_slack = std::min(res_.worst_slack, slack);
        if (!(slack >= -tol_)) ++res_.violations;
    }
    PropertyResult result() const { return res_; }

private:
    double tol_;
    PropertyResult res_;
};

}  // namespace detail

/// Randomized checks of the elementary hyperbolic-distance inequalities:
/// contraction under self-maps of H, automorphism invariance, separate
/// convexity, joint quasiconvexity, imaginary-ratio bound, perturbation
/// bound, almost-triangle inequality and quantitative convexity.
inline std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& opt = {}) {
    using detail::PointSampler;
    using detail::SlackTracker;
    const double tol = opt.tolerance;
    std::vector<PropertyResult> out;
    auto sampler = [&](std::uint64_t prop, std::size_t trial) {
        return PointSampler{CounterRng(opt.seed, StreamDomain::property, prop, trial)};
    };

    {
        // Real Moebius maps with positive determinant, interleaved with
        // translations by points of H.
        SlackTracker t("contraction", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(1, i);
            cplx z = ps.point(), w = ps.point();
            const double before = hyp_dist(z, w);
            const int pieces = 1 + static_cast<int>(ps.rng.below(3));
            for (int p = 0; p < pieces; ++p) {
                const MoebiusMap m = ps.real_map(false);
                z = m.apply(z);
                w = m.apply(w);
                if (ps.rng.uniform() < 0.5) {
                    const cplx u = ps.point();
                    z += u;
                    w += u;
                }
            }
            t.check(hyp_dist(z, w), before);
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("automorphism", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(2, i);
            const cplx z = ps.point(), w = ps.point();
            const MoebiusMap m = ps.real_map(true);
            const double a = hyp_dist(m.apply(z), m.apply(w)), b = hyp_dist(z, w);
            // equality, checked both ways on a relative scale
            const double rel = std::abs(a - b) / std::max(b, 1e-300);
            t.check(rel, 0.0);
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("convex", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(3, i);
            const cplx z1 = ps.point(), z2 = ps.point(), w1 = ps.point();
            t.check(hyp_dist(0.5 * (z1 + z2), w1), 0.5 * (hyp_dist(z1, w1) + hyp_dist(z2, w1)));
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("quasiconvex", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(4, i);
            const cplx z1 = ps.point(), z2 = ps.point(), w1 = ps.point(), w2 = ps.point();
            t.check(hyp_dist(0.5 * (z1 + z2), 0.5 * (w1 + w2)),
                    std::max(hyp_dist(z1, w1), hyp_dist(z2, w2)));
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("imaginary_ratio", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(5, i);
            const cplx z = ps.point(), w = ps.point();
            t.check(z.imag() / w.imag() + w.imag() / z.imag(), 2.0 + hyp_dist(z, w));
        }
        out.push_back(t.result());
    }
    {
        // Three centered laws with E X^4 <= s^4 (Im w)^4: symmetric and
        // asymmetric two-point laws (expectation exact) and a uniform law
        // (Monte Carlo, accepted unless the mean exceeds the bound by 3 SE).
        SlackTracker t("perturbation", tol);
        const double C = opt.perturb_constant;
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(6, i);
            const cplx z = ps.point(), w = ps.point();
            const double s = ps.rng.uniform();
            const double d0 = hyp_dist(z, w);
            const double rhs = (1.0 + C * s * s) * d0 * d0 + C * s * s;
            const double iw = w.imag();
            double lhs = 0.0;
            switch (i % 3) {
            case 0: {
                const double a = s * iw;
                const double dp = hyp_dist(z + a, w), dm = hyp_dist(z - a, w);
                lhs = 0.5 * (dp * dp + dm * dm);
                break;
            }
            case 1: {
                const double q = 0.05 + 0.9 * ps.rng.uniform();
                // X = a w.p. q, X = -a q / (1 - q) w.p. 1 - q, scaled to E X^4 = (s Im w)^4.
                const double ratio = q / (1.0 - q);
                const double m4 = q + (1.0 - q) * std::pow(ratio, 4);
                const double a = s * iw / std::pow(m4, 0.25);
                const double dp = hyp_dist(z + a, w), dm = hyp_dist(z - a * ratio, w);
                lhs = q * dp * dp + (1.0 - q) * dm * dm;
                break;
            }
            default: {
                const double a = std::pow(5.0, 0.25) * s * iw;
                double m = 0.0, m2 = 0.0;
                const int n = std::max(2, opt.perturb_draws);
                for (int k = 0; k < n; ++k) {
                    const double x = a * (2.0 * ps.rng.uniform() - 1.0);
                    const double d = hyp_dist(z + x, w);
                    m += d * d;
                    m2 += d * d * d * d;
                }
                m /= n;
                const double var = std::max(0.0, m2 / n - m * m);
                lhs = m - 3.0 * std::sqrt(var / n);
                break;
            }
            }
            t.check(lhs, rhs);
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("almost_triangle", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(7, i);
            const cplx z = ps.point(), w1 = ps.point(), w2 = ps.point();
            const double d21 = std::sqrt(hyp_dist(w2, w1));
            t.check(std::sqrt(hyp_dist(z, w1)),
                    (1.0 + d21) * std::sqrt(hyp_dist(z, w2)) + std::numbers::sqrt2 * d21);
        }
        out.push_back(t.result());
    }
    {
        SlackTracker t("quantitative_convexity", tol);
        for (std::size_t i = 0; i < opt.trials; ++i) {
            auto ps = sampler(8, i);
            const int K = 2 + static_cast<int>(ps.rng.below(5));
            std::vector<cplx> zs(static_cast<std::size_t>(K));
            for (auto& z : zs) z = ps.point();
            const cplx w = ps.point();
            cplx mean = 0.0;
            double spread = 0.0, dev = 0.0, worst = 0.0;
            for (int j = 0; j < K; ++j) {
                mean += zs[j];
                dev += std::norm(zs[j] - w);
                worst = std::max(worst, hyp_dist(zs[j], w));
                for (int k = j + 1; k < K; ++k) spread += std::norm(zs[j] - zs[k]);
            }
            mean /= static_cast<double>(K);
            t.check(hyp_dist(mean, w), (1.0 - spread / (K * dev)) * worst);
        }
        out.push_back(t.result());
    }
    return out;
}

}  // namespace bethe
