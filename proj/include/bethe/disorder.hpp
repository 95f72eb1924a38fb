#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "bethe/errors.hpp"
#include "bethe/rng.hpp"

namespace bethe {

enum class LawKind { uniform_symmetric, gaussian_truncated, table };

/// plain: support [-beta, beta], E V^4 = beta^4 / 5.
/// moment_matched: support [-5^{1/4} beta, 5^{1/4} beta], E V^4 = beta^4.
enum class UniformScaling { plain, moment_matched };

/// Law of the on-site potential V(p).
///
/// Tables hold a piecewise-linear density through the (x, weight) nodes,
/// normalized on construction. A single-node table is a point mass; it is
/// the only law allowed to have beta = 0 and exists for the free (beta = 0)
/// problem and for demonstrating validator failures.
class DisorderLaw {
public:
    static constexpr double gaussian_truncation = 6.0;  // in units of sigma

    static DisorderLaw uniform(double beta, double L = 2.0,
                               UniformScaling scaling = UniformScaling::plain) {
        DisorderLaw law(LawKind::uniform_symmetric, beta, L);
        law.scaling_ = scaling;
        law.half_width_ =
            scaling == UniformScaling::plain ? beta : std::pow(5.0, 0.25) * beta;
        return law;
    }

    /// Centered Gaussian with sigma = beta / 3^{1/4} (so E V^4 <= beta^4),
    /// truncated at 6 sigma.
    static DisorderLaw gaussian(double beta, double L = 2.0) {
        DisorderLaw law(LawKind::gaussian_truncated, beta, L);
        law.sigma_ = beta / std::pow(3.0, 0.25);
        law.half_width_ = gaussian_truncation * law.sigma_;
        law.gauss_norm_ = std::erf(gaussian_truncation / std::numbers::sqrt2);
        return law;
    }

    static DisorderLaw table(std::vector<double> x, std::vector<double> weight, double beta,
                             double L = 2.0) {
        if (x.empty() || x.size() != weight.size())
            throw ConfigError("table law needs equally many (nonzero) x and weight entries");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !std::isfinite(weight[i]))
                throw ConfigError("table law has a non-finite entry at row " + std::to_string(i));
            if (weight[i] < 0.0)
                throw ConfigError("table law has a negative weight at row " + std::to_string(i));
            if (i > 0 && !(x[i] > x[i - 1]))
                throw ConfigError("table law x values must be strictly increasing");
        }
        const bool atom = x.size() == 1;
        DisorderLaw law(LawKind::table, beta, L, atom);
        law.nodes_ = std::move(x);
        law.values_ = std::move(weight);
        if (atom) {
            law.values_[0] = 1.0;
            law.cumulative_ = {0.0};
            law.half_width_ = std::abs(law.nodes_[0]);
            return law;
        }
        law.cumulative_.assign(law.nodes_.size(), 0.0);
        for (std::size_t i = 1; i < law.nodes_.size(); ++i) {
            const double h = law.nodes_[i] - law.nodes_[i - 1];
            law.cumulative_[i] =
                law.cumulative_[i - 1] + 0.5 * h * (law.values_[i] + law.values_[i - 1]);
        }
        const double total = law.cumulative_.back();
        if (!(total > 0.0) || !std::isfinite(total))
            throw ConfigError("table law is not normalizable (total weight " +
                              std::to_string(total) + ")");
        for (auto& v : law.values_) v /= total;
        for (auto& c : law.cumulative_) c /= total;
        law.half_width_ = std::max(std::abs(law.nodes_.front()), std::abs(law.nodes_.back()));
        const double mean = law.table_moment(1);
        if (std::abs(mean) > 1e-6 * law.half_width_)
            throw ConfigError("table law must be centered; mean is " + std::to_string(mean));
        return law;
    }

    /// Point mass at x0. beta may be zero.
    static DisorderLaw point_mass(double x0 = 0.0, double beta = 0.0, double L = 1.0) {
        return table({x0}, {1.0}, beta, L);
    }

    /// Two-column (x, weight) whitespace-separated text; '#' starts a comment.
    static DisorderLaw load_table(const std::string& path, double beta, double L = 2.0) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path + ": cannot open table file");
        std::vector<double> xs, ws;
        std::string line;
        for (int lineno = 1; std::getline(in, line); ++lineno) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream fields(line);
            std::string a, b, extra;
            if (!(fields >> a)) continue;
            if (!(fields >> b) || (fields >> extra))
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected exactly two columns (x weight)");
            try {
                std::size_t pa = 0, pb = 0;
                const double x = std::stod(a, &pa);
                const double w = std::stod(b, &pb);
                if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing");
                if (!std::isfinite(x) || !std::isfinite(w))
                    throw ConfigError(path + ":" + std::to_string(lineno) + ": non-finite value");
                xs.push_back(x);
                ws.push_back(w);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": cannot parse number");
            }
        }
        try {
            return table(std::move(xs), std::move(ws), beta, L);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }

    LawKind kind() const noexcept { return kind_; }
    UniformScaling scaling() const noexcept { return scaling_; }
    double beta() const noexcept { return beta_; }
    double L() const noexcept { return L_; }
    bool is_atomic() const noexcept { return atomic_; }
    double sigma() const noexcept { return sigma_; }
    /// Support is contained in [-support_radius, support_radius].
    double support_radius() const noexcept { return half_width_; }
    const std::vector<double>& table_nodes() const noexcept { return nodes_; }
    const std::vector<double>& table_values() const noexcept { return values_; }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
        case LawKind::uniform_symmetric:
            os << (scaling_ == UniformScaling::plain ? "uniform" : "uniform-matched");
            break;
        case LawKind::gaussian_truncated: os << "gaussian"; break;
        case LawKind::table:
            if (atomic_)
                os << "atom(" << nodes_[0] << ")";
            else
                os << "table(" << nodes_.size() << " nodes)";
            break;
        }
        os << " beta=" << beta_ << " L=" << L_;
        return os.str();
    }

    double sample(CounterRng& rng) const {
        switch (kind_) {
        case LawKind::uniform_symmetric: return half_width_ * (2.0 * rng.uniform() - 1.0);
        case LawKind::gaussian_truncated: {
            const double u = 2.0 * rng.uniform_open() - 1.0;
            return sigma_ * std::numbers::sqrt2 * boost::math::erf_inv(gauss_norm_ * u);
        }
        case LawKind::table: return atomic_ ? nodes_[0] : sample_table(rng.uniform());
        }
        return 0.0;
    }

    std::vector<double> sample(std::uint64_t seed, std::size_t n, std::uint64_t stream = 0) const {
        if (n == 0) throw UsageError("sample count must be >= 1");
        std::vector<double> out(n);
        CounterRng rng(seed, StreamDomain::sample, stream);
        for (auto& v : out) v = sample(rng);
        return out;
    }

    double density(double x) const {
        switch (kind_) {
        case LawKind::uniform_symmetric:
            return std::abs(x) <= half_width_ ? 0.5 / half_width_ : 0.0;
        case LawKind::gaussian_truncated: {
            if (std::abs(x) > half_width_) return 0.0;
            const double u = x / sigma_;
            return std::exp(-0.5 * u * u) /
                   (sigma_ * std::sqrt(2.0 * std::numbers::pi) * gauss_norm_);
        }
        case LawKind::table: {
            if (atomic_) throw UsageError("a point-mass law has no density");
            if (x < nodes_.front() || x > nodes_.back()) return 0.0;
            const std::size_t i = segment(x);
            const double h = nodes_[i + 1] - nodes_[i];
            const double f = (x - nodes_[i]) / h;
            return values_[i] * (1.0 - f) + values_[i + 1] * f;
        }
        }
        return 0.0;
    }

    double cdf(double x) const {
        switch (kind_) {
        case LawKind::uniform_symmetric:
            return std::clamp((x + half_width_) / (2.0 * half_width_), 0.0, 1.0);
        case LawKind::gaussian_truncated: {
            const double c = std::clamp(x, -half_width_, half_width_);
            return 0.5 * (1.0 + std::erf(c / (sigma_ * std::numbers::sqrt2)) / gauss_norm_);
        }
        case LawKind::table: {
            if (atomic_) return x >= nodes_[0] ? 1.0 : 0.0;
            if (x <= nodes_.front()) return 0.0;
            if (x >= nodes_.back()) return 1.0;
            const std::size_t i = segment(x);
            const double h = nodes_[i + 1] - nodes_[i];
            const double p = x - nodes_[i];
            const double slope = (values_[i + 1] - values_[i]) / h;
            return cumulative_[i] + values_[i] * p + 0.5 * slope * p * p;
        }
        }
        return 0.0;
    }

    /// P(|V - x| < t).
    double prob_within(double x, double t) const {
        if (!(t > 0.0)) return 0.0;
        if (atomic_) return std::abs(nodes_[0] - x) < t ? 1.0 : 0.0;
        return std::max(0.0, cdf(x + t) - cdf(x - t));
    }

    /// E V^k by quadrature (exact per segment for tables).
    double moment(int k) const {
        if (kind_ == LawKind::table) return table_moment(k);
        auto integrand = [&](double x) { return std::pow(x, k) * density(x); };
        using boost::math::quadrature::gauss_kronrod;
        const double a = half_width_;
        // Split at 0 so odd moments of symmetric laws cancel exactly.
        return gauss_kronrod<double, 61>::integrate(integrand, -a, 0.0, 15, 1e-14) +
               gauss_kronrod<double, 61>::integrate(integrand, 0.0, a, 15, 1e-14);
    }

private:
    DisorderLaw(LawKind kind, double beta, double L, bool atomic = false)
        : kind_(kind), beta_(beta), L_(L), atomic_(atomic) {
        if (!std::isfinite(beta) || beta < 0.0 || (beta == 0.0 && !atomic))
            throw ConfigError("disorder strength beta must be > 0");
        if (!(L >= 1.0)) throw ConfigError("regularity bound L must be >= 1");
    }

    std::size_t segment(double x) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        const auto i = static_cast<std::size_t>(std::distance(nodes_.begin(), it));
        return std::min(std::max<std::size_t>(i, 1), nodes_.size() - 1) - 1;
    }

    double sample_table(double u) const {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
        i = std::min(std::max<std::size_t>(i, 1), nodes_.size() - 1) - 1;
        const double h = nodes_[i + 1] - nodes_[i];
        const double rem = u - cumulative_[i];
        const double a = 0.5 * (values_[i + 1] - values_[i]) / h;
        const double b = values_[i];
        const double disc = std::max(0.0, b * b + 4.0 * a * rem);
        const double denom = b + std::sqrt(disc);
        const double p = denom > 0.0 ? 2.0 * rem / denom : 0.0;
        return nodes_[i] + std::clamp(p, 0.0, h);
    }

    double table_moment(int k) const {
        if (atomic_) return std::pow(nodes_[0], k);
        // 5-point Gauss-Legendre is exact for (linear density) * x^k, k <= 8.
        static constexpr double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
        static constexpr double gw[5] = {0.2369268850561891, 0.4786286704993665,
                                         0.5688888888888889, 0.4786286704993665,
                                         0.2369268850561891};
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            const double lo = nodes_[i], hi = nodes_[i + 1];
            const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
            for (int q = 0; q < 5; ++q) {
                const double x = mid + half * gx[q];
                const double f = (x - lo) / (hi - lo);
                acc += half * gw[q] * std::pow(x, k) * (values_[i] * (1.0 - f) + values_[i + 1] * f);
            }
        }
        return acc;
    }

    LawKind kind_;
    double beta_;
    double L_;
    bool atomic_ = false;
    UniformScaling scaling_ = UniformScaling::plain;
    double half_width_ = 0.0;
    double sigma_ = 0.0;
    double gauss_norm_ = 1.0;
    std::vector<double> nodes_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

struct HypothesisFlags {
    bool fourth_moment = false;
    bool regularity = false;
    bool mean_zero = false;
    bool subcauchy = false;

    bool all() const noexcept { return fourth_moment && regularity && mean_zero && subcauchy; }
    friend bool operator==(const HypothesisFlags&, const HypothesisFlags&) = default;
};

struct ValidationReport {
    double mean = 0.0;
    double fourth_moment = 0.0;
    /// max over the scan of [P(|V-x|<t) / P(|V-x|<s)] / (t/s); compare against L.
    double regularity_worst_ratio = 0.0;
    /// max over the scan of P(|V-x|<t) / (beta t / (beta^2 + x^2)); compare against L.
    double subcauchy_worst_ratio = 0.0;
    HypothesisFlags passes;

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Numerical check of the four hypotheses on V(p): fourth moment, regularity,
/// mean zero and sub-Cauchy tails. Deterministic scan over
/// x in beta {-10..10}/2 and t, s in beta 2^{-10..0}.
inline ValidationReport validate(const DisorderLaw& law, double tol) {
    if (!(tol > 0.0 && tol <= 0.1)) throw UsageError("validate: tol must lie in (0, 0.1]");
    const double beta = law.beta();
    if (!(beta > 0.0)) throw UsageError("validate: law must have beta > 0");

    ValidationReport rep;
    rep.mean = law.moment(1);
    rep.fourth_moment = law.moment(4);
    rep.passes.fourth_moment = rep.fourth_moment <= std::pow(beta, 4) * (1.0 + tol);
    rep.passes.mean_zero = std::abs(rep.mean) <= tol * beta;

    std::vector<double> scales;
    for (int k = -10; k <= 0; ++k) scales.push_back(beta * std::ldexp(1.0, k));

    double reg = 0.0, sub = 0.0;
    for (int j = -10; j <= 10; ++j) {
        const double x = beta * j / 2.0;
        for (std::size_t a = 0; a < scales.size(); ++a) {
            const double t = scales[a];
            const double pt = law.prob_within(x, t);
            for (std::size_t b = a + 1; b < scales.size(); ++b) {
                const double s = scales[b];
                const double ps = law.prob_within(x, s);
                if (ps > 0.0) reg = std::max(reg, (pt / ps) / (t / s));
            }
            if (t < beta) sub = std::max(sub, pt / (beta * t / (beta * beta + x * x)));
        }
    }
    rep.regularity_worst_ratio = reg;
    rep.subcauchy_worst_ratio = sub;
    rep.passes.regularity = reg <= law.L() * (1.0 + 1e-12);
    rep.passes.subcauchy = sub <= law.L() * (1.0 + 1e-12);
    return rep;
}

}  // namespace bethe
