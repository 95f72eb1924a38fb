#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "bethe/halfplane.hpp"
#include "bethe/rng.hpp"

using namespace bethe;

namespace {

// Root of K w^2 + z w + 1 = 0 in the closed upper half-plane, by the plain
// quadratic formula with std::sqrt; for real z with two real roots, the one
// reached from Im z > 0 (the smaller modulus, since the product is 1/K).
cplx quadratic_root(cplx z, int K) {
    const cplx disc = std::sqrt(z * z - 4.0 * static_cast<double>(K));
    const cplx r1 = (-z + disc) / (2.0 * K), r2 = (-z - disc) / (2.0 * K);
    if (std::abs(r1.imag() - r2.imag()) > 1e-14) return r1.imag() > r2.imag() ? r1 : r2;
    return std::abs(r1) < std::abs(r2) ? r1 : r2;
}

}  // namespace

TEST(HalfPlanePoint, RejectsClosedLowerHalfPlane) {
    EXPECT_THROW(HalfPlanePoint(0.0, 0.0), std::domain_error);
    EXPECT_THROW(HalfPlanePoint(1.0, -1e-300), std::domain_error);
    EXPECT_THROW(HalfPlanePoint(0.0, std::nan("")), std::domain_error);
    EXPECT_THROW(HalfPlanePoint(INFINITY, 1.0), std::domain_error);
    EXPECT_NO_THROW(HalfPlanePoint(0.0, 1e-300));
}

TEST(EnergyPoint, Invariants) {
    EXPECT_THROW(EnergyPoint(0.0, 0.0, 2), std::domain_error);
    EXPECT_THROW(EnergyPoint(0.0, 0.1, 1), std::domain_error);
    EnergyPoint e(1.5, 0.01, 3);
    EXPECT_EQ(e.z(), cplx(1.5, 0.01));
}

TEST(HypDist, Examples) {
    EXPECT_EQ(hyp_dist(HalfPlanePoint(0, 1), HalfPlanePoint(0, 1)), 0.0);
    EXPECT_DOUBLE_EQ(hyp_dist(HalfPlanePoint(0, 1), HalfPlanePoint(0, 2)), 0.5);
    // |2|^2 / (1 * 1), also 4 symbolically
    EXPECT_DOUBLE_EQ(hyp_dist(HalfPlanePoint(1, 1), HalfPlanePoint(-1, 1)), 4.0);
}

TEST(HypDist, SymmetricAndOverflowToInfinity) {
    const cplx a(0.3, 2.0), b(-1.0, 0.01);
    EXPECT_EQ(hyp_dist(a, b), hyp_dist(b, a));
    EXPECT_EQ(hyp_dist(cplx(1e200, 1e-200), cplx(-1e200, 1e-200)), INFINITY);
    // representable only through the extended intermediate
    EXPECT_NEAR(hyp_dist(cplx(1e150, 1.0), cplx(-1e150, 1.0)) / 4e300, 1.0, 1e-12);
}

TEST(BranchSqrt, Examples) {
    EXPECT_EQ(branch_sqrt(4.0), cplx(2.0, 0.0));
    EXPECT_EQ(branch_sqrt(-4.0), cplx(0.0, 2.0));
    EXPECT_EQ(branch_sqrt(cplx(-4.0, -0.0)), cplx(0.0, 2.0));
    const cplx polar = std::polar(1.0, std::numbers::pi / 4.0);
    EXPECT_NEAR(std::abs(branch_sqrt(cplx(0, 1)) - polar), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(branch_sqrt(cplx(0, 1)) - cplx(1, 1) / std::numbers::sqrt2), 0.0, 1e-15);
    EXPECT_EQ(branch_sqrt(0.0), cplx(0.0, 0.0));
}

TEST(BranchSqrt, ArgumentHalvedAgainstPolarOracle) {
    CounterRng rng(3, StreamDomain::sample, 0);
    for (int i = 0; i < 1000; ++i) {
        const double r = 10.0 * rng.uniform() + 1e-3;
        const double th = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
        const cplx z = std::polar(r, th);
        EXPECT_NEAR(std::abs(branch_sqrt(z) - std::polar(std::sqrt(r), th / 2.0)), 0.0, 1e-12);
    }
}

TEST(FreeGreen, Examples) {
    EXPECT_NEAR(std::abs(free_green(0.0, 2) - cplx(0.0, 1.0 / std::numbers::sqrt2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(free_green(0.0, 2) - quadratic_root(0.0, 2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(free_green(3.0, 2) - cplx(-0.5, 0.0)), 0.0, 1e-15);
    // numpy.roots([2, 0.5+0.1j, 1]): -0.12051285+0.67143387j
    const cplx w = free_green(cplx(0.5, 0.1), 2);
    EXPECT_NEAR(std::abs(w - quadratic_root(cplx(0.5, 0.1), 2)), 0.0, 1e-14);
    EXPECT_NEAR(w.real(), -0.12051285, 1e-8);
    EXPECT_NEAR(w.imag(), 0.67143387, 1e-8);
}

TEST(FreeGreen, RootIdentityOnRandomPoints) {
    CounterRng rng(11, StreamDomain::sample, 1);
    for (int i = 0; i < 10000; ++i) {
        const int K = 2 + static_cast<int>(rng.below(5));
        const cplx z(20.0 * rng.uniform() - 10.0, std::pow(10.0, 8.0 * rng.uniform() - 6.0));
        const cplx w = free_green(z, K);
        EXPECT_GE(w.imag(), 0.0);
        const double residual = std::abs(static_cast<double>(K) * w * w + z * w + 1.0);
        EXPECT_LE(residual, 1e-12 * (1.0 + std::norm(z))) << "z = " << z << " K = " << K;
    }
}

TEST(FreeGreen, BoundaryModulus) {
    for (int K : {2, 3, 4}) {
        const double edge = K + 1.0;
        for (int i = 0; i < 1000; ++i) {
            const double E = -edge + 2.0 * edge * (i + 0.5) / 1000.0;
            const double m = std::abs(free_green(E, K));
            EXPECT_LE(m, 1.0 / std::sqrt(static_cast<double>(K)) * (1.0 + 1e-15)) << E;
            EXPECT_GT(m, 1.0 / K) << E;
        }
    }
}

TEST(FreeGreen, RealInHyperbolicRegimeComplexInElliptic) {
    EXPECT_EQ(free_green(2.9, 2).imag(), 0.0);
    EXPECT_GT(free_green(2.8, 2).imag(), 0.0);
    EXPECT_EQ(free_green(-2.9, 2).imag(), 0.0);
    EXPECT_GT(free_green(-2.9, 2).real(), 0.0);
    EXPECT_THROW(free_green(cplx(0, -1), 2), std::domain_error);
}

TEST(Moebius, NormalizesDeterminant) {
    MoebiusMap m(2.0, 1.0, 0.0, 8.0);
    EXPECT_NEAR(m.a() * m.d() - m.b() * m.c(), 1.0, 1e-15);
    EXPECT_THROW(MoebiusMap(1, 0, 0, -1), std::domain_error);
    EXPECT_THROW(MoebiusMap(0, 1, 1, 0), std::domain_error);
    const MoebiusMap phi = MoebiusMap::phi(3.0, 2);
    // (0, -1, K, E) normalized by sqrt(K)
    EXPECT_NEAR(phi.c() / -phi.b(), 2.0, 1e-15);
    EXPECT_NEAR(phi.d() / -phi.b(), 3.0, 1e-15);
}

TEST(Moebius, Examples) {
    const MoebiusMap psi = MoebiusMap::psi();
    EXPECT_EQ(moebius_apply(psi, HalfPlanePoint(0, 1)).value(), cplx(0, 1));
    EXPECT_NEAR(std::abs(moebius_apply(psi, HalfPlanePoint(0, 2)).value() - cplx(0, 0.5)), 0.0, 1e-16);
    // mpmath: -1/(2z + 3) at z = -0.5 + 1e-9 i is -0.5 + 5e-10 i
    const HalfPlanePoint out = moebius_apply(MoebiusMap::phi(3.0, 2), HalfPlanePoint(-0.5, 1e-9));
    EXPECT_NEAR(out.re(), -0.5, 1e-15);
    EXPECT_NEAR(out.im(), 5e-10, 1e-24);
}

TEST(Moebius, ComposeAndInverse) {
    const MoebiusMap a(1.0, 2.0, -0.5, 3.0), b = MoebiusMap::phi(0.7, 3);
    const cplx z(0.2, 0.9);
    EXPECT_NEAR(std::abs(a.compose(b).apply(z) - a.apply(b.apply(z))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(a.inverse().apply(a.apply(z)) - z), 0.0, 1e-14);
    MoebiusMap m = MoebiusMap::identity();
    for (int i = 0; i < 1000; ++i) m = m.compose(a);
    EXPECT_NEAR(m.a() * m.d() - m.b() * m.c(), 1.0, 1e-9);
}

TEST(Moebius, FixedPointOfPhiIsFreeGreen) {
    for (double E : {0.0, 1.0, 2.5}) {
        const cplx w = free_green(cplx(E, 1e-12), 2);
        const cplx phw = MoebiusMap::phi(E, 2).apply(w);
        EXPECT_LT(hyp_dist(phw, w), 1e-10);
    }
}
