#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace bethe {

using cplx = std::complex<double>;

/// A point of the open upper half-plane. Construction with im <= 0 (or NaN) throws.
class HalfPlanePoint {
public:
    HalfPlanePoint(double re, double im) : re_(re), im_(im) {
        if (!(im > 0.0) || !std::isfinite(re) || !std::isfinite(im))
            throw std::domain_error("HalfPlanePoint requires finite re and im > 0, got im = " +
                                    std::to_string(im));
    }
    explicit HalfPlanePoint(cplx z) : HalfPlanePoint(z.real(), z.imag()) {}

    double re() const noexcept { return re_; }
    double im() const noexcept { return im_; }
    cplx value() const noexcept { return {re_, im_}; }

    friend bool operator==(const HalfPlanePoint&, const HalfPlanePoint&) = default;

private:
    double re_;
    double im_;
};

/// E + i eta on the (K+1)-regular tree.
class EnergyPoint {
public:
    EnergyPoint(double E, double eta, int K) : E_(E), eta_(eta), K_(K) {
        if (!(eta > 0.0)) throw std::domain_error("EnergyPoint requires eta > 0");
        if (K < 2) throw std::domain_error("EnergyPoint requires K >= 2");
        if (!std::isfinite(E)) throw std::domain_error("EnergyPoint requires finite E");
    }

    double E() const noexcept { return E_; }
    double eta() const noexcept { return eta_; }
    int K() const noexcept { return K_; }
    cplx z() const noexcept { return {E_, eta_}; }

private:
    double E_;
    double eta_;
    int K_;
};

/// |z - w|^2 / (Im z Im w). Not a metric, but a monotone function of the
/// hyperbolic one. Evaluated in long double so that ratios beyond the double
/// range come back as +inf rather than garbage.
inline double hyp_dist(cplx z, cplx w) noexcept {
    const long double dx = static_cast<long double>(z.real()) - w.real();
    const long double dy = static_cast<long double>(z.imag()) - w.imag();
    const long double num = dx * dx + dy * dy;
    const long double den = static_cast<long double>(z.imag()) * w.imag();
    const long double d = num / den;
    if (d > static_cast<long double>(std::numeric_limits<double>::max()))
        return std::numeric_limits<double>::infinity();
    return static_cast<double>(d);
}

inline double hyp_dist(const HalfPlanePoint& z, const HalfPlanePoint& w) noexcept {
    return hyp_dist(z.value(), w.value());
}

/// Square root with sqrt(e^u) = e^{u/2} for -pi < Im u <= pi: arguments in
/// (-pi, pi] are halved. The negative real axis (including -0 imaginary part)
/// maps to the positive imaginary axis.
inline cplx branch_sqrt(cplx z) noexcept {
    if (z.imag() == 0.0 && z.real() < 0.0) return {0.0, std::sqrt(-z.real())};
    return std::sqrt(z);
}

/// Free punctured Green's function
///   w_z = (-z + sqrt(z + 2 sqrt K) sqrt(z - 2 sqrt K)) / (2K),
/// the root of K w^2 + z w + 1 = 0 selected by branch_sqrt. Real z gives the
/// boundary value. Uses the product of roots (= 1/K) to avoid cancellation.
inline cplx free_green(cplx z, int K) {
    if (K < 2) throw std::domain_error("free_green requires K >= 2");
    if (z.imag() < 0.0) throw std::domain_error("free_green requires Im z >= 0");
    const double edge = 2.0 * std::sqrt(static_cast<double>(K));
    const cplx root = branch_sqrt(z + edge) * branch_sqrt(z - edge);
    const cplx plus = -z + root;
    const cplx minus = -z - root;
    if (std::abs(plus) >= std::abs(minus)) return plus / (2.0 * K);
    return 2.0 / minus;
}

inline cplx free_green(const EnergyPoint& e) { return free_green(e.z(), e.K()); }

/// Real Moebius map z -> (a z + b) / (c z + d) with ad - bc normalized to 1.
class MoebiusMap {
public:
    MoebiusMap(double a, double b, double c, double d) {
        const double det = a * d - b * c;
        if (!(det > 0.0) || !std::isfinite(det))
            throw std::domain_error("MoebiusMap requires ad - bc > 0");
        const double s = 1.0 / std::sqrt(det);
        a_ = a * s;
        b_ = b * s;
        c_ = c * s;
        d_ = d * s;
    }

    /// phi_E(z) = -1 / (K z + E).
    static MoebiusMap phi(double E, int K) { return {0.0, -1.0, static_cast<double>(K), E}; }
    /// psi(z) = -1 / z.
    static MoebiusMap psi() { return {0.0, -1.0, 1.0, 0.0}; }
    static MoebiusMap identity() { return {1.0, 0.0, 0.0, 1.0}; }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double d() const noexcept { return d_; }

    cplx apply(cplx z) const noexcept { return (a_ * z + b_) / (c_ * z + d_); }

    /// (*this) o inner, renormalized to unit determinant.
    MoebiusMap compose(const MoebiusMap& inner) const {
        return {a_ * inner.a_ + b_ * inner.c_, a_ * inner.b_ + b_ * inner.d_,
                c_ * inner.a_ + d_ * inner.c_, c_ * inner.b_ + d_ * inner.d_};
    }

    MoebiusMap inverse() const { return {d_, -b_, -c_, a_}; }

private:
    double a_, b_, c_, d_;
};

inline HalfPlanePoint moebius_apply(const MoebiusMap& m, const HalfPlanePoint& z) {
    return HalfPlanePoint(m.apply(z.value()));
}

}  // namespace bethe
