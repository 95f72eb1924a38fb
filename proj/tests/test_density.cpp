#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "bethe/density.hpp"

using namespace bethe;

namespace {

constexpr double pi = std::numbers::pi;

GridDensity closed_form(const GridSpec& grid, cplx z) {
    GridDensity f{grid, std::vector<double>(grid.n), std::nullopt};
    for (std::size_t i = 0; i < grid.n; ++i) f.values[i] = cauchy_density(HalfPlanePoint(z), grid.x(i));
    return f;
}

double sup_diff(const GridDensity& a, const GridDensity& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

MeasurePool pool_of(std::initializer_list<cplx> zs, std::size_t copies = 1) {
    MeasurePool p;
    for (std::size_t c = 0; c < copies; ++c)
        for (cplx z : zs) p.samples.push_back(z);
    return p;
}

}  // namespace

TEST(Density, CauchyDensityExamples) {
    EXPECT_DOUBLE_EQ(cauchy_density(HalfPlanePoint(0, 1), 0.0), 1.0 / pi);
    EXPECT_DOUBLE_EQ(cauchy_density(HalfPlanePoint(0, 1), 1.0), 1.0 / (2 * pi));
    EXPECT_DOUBLE_EQ(cauchy_density(HalfPlanePoint(2, 3), 2.0), 1.0 / (3 * pi));
    EXPECT_NEAR(cauchy_mass({0.5, 0.2}, -1e300, 1e300), 1.0, 1e-15);
}

TEST(Density, ProjectCopiesOfI) {
    const GridSpec grid;
    const auto f = cauchy_project(pool_of({{0, 1}}, 50), grid);
    EXPECT_LE(sup_diff(f, closed_form(grid, {0, 1})), 1e-12);
    EXPECT_NEAR(f.mass(), 1.0, 1e-4);
    // sigma_i mass beyond [-8, 8): 1 - (atan(8) + atan(8 - dx)) / pi
    EXPECT_NEAR(f.tail_mass(), 1.0 - cauchy_mass({0, 1}, grid.x_min(), grid.x_max()), 1e-15);
}

TEST(Density, ProjectMixtureMatchesClosedForm) {
    const GridSpec grid;
    const auto f = cauchy_project(pool_of({{0, 1}, {-1, 1}}), grid);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        const double expect = 0.5 * (1.0 / (pi * (1 + x * x)) + 1.0 / (pi * (1 + (x + 1) * (x + 1))));
        ASSERT_NEAR(f.values[i], expect, 1e-12) << x;
    }
}

TEST(Density, ProjectErrors) {
    EXPECT_THROW(cauchy_project(MeasurePool{}, GridSpec{}), UsageError);
    EXPECT_THROW(cauchy_project(pool_of({{20, 1}}), GridSpec{}), ConfigError);
    EXPECT_THROW(cauchy_project(pool_of({{0, 1}}), GridSpec{8.0, 1000}), ConfigError);
}

TEST(Density, ProjectNarrowKernelKeepsMass) {
    const GridSpec grid;
    const auto f = cauchy_project(pool_of({{0.3, 1e-6}, {-2.0, 1e-9}}), grid);
    EXPECT_NEAR(f.mass(), 1.0, 1e-4);
    for (double v : f.values) EXPECT_GE(v, 0.0);
}

TEST(Density, ConvolveWithDeltaIsIdentity) {
    const GridSpec grid;
    const auto f = cauchy_grid({0.3, 0.5}, grid);
    const auto g = grid_convolve(f, delta_grid(grid));
    EXPECT_LE(sup_diff(f, g), 1e-12);
}

TEST(Density, ConvolveCauchySemigroupExample) {
    const GridSpec grid;
    const auto c = grid_convolve(cauchy_grid({0, 1}, grid), cauchy_grid({0, 1}, grid));
    EXPECT_LE(l1_distance(c, cauchy_grid({0, 2}, grid)), 1e-3);
    EXPECT_NEAR(c.mass(), 1.0, 1e-4);
}

TEST(Density, ProjectionSemigroupRandomPairs) {
    const GridSpec grid;
    CounterRng rng(42, StreamDomain::sample, 0);
    for (int k = 0; k < 20; ++k) {
        const cplx z(4 * rng.uniform() - 2, 0.05 + 1.95 * rng.uniform());
        const cplx w(4 * rng.uniform() - 2, 0.05 + 1.95 * rng.uniform());
        const auto conv = grid_convolve(cauchy_project(pool_of({z}, 3), grid), cauchy_grid(w, grid));
        EXPECT_LE(l1_distance(conv, cauchy_grid(z + w, grid)), 1e-3) << z << " " << w;
    }
}

TEST(Density, UniformConvolutionIsTriangle) {
    const GridSpec grid;
    const auto u = law_grid(DisorderLaw::uniform(1.0), grid);
    const auto t = grid_convolve(u, u);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i)
        sup = std::max(sup, std::abs(t.values[i] - std::max(0.0, (2.0 - std::abs(grid.x(i))) / 4.0)));
    EXPECT_LE(sup, grid.dx());
}

TEST(Density, ConvolutionCommutesAndAssociates) {
    const GridSpec grid;
    const auto a = cauchy_grid({0.2, 0.3}, grid), b = cauchy_grid({-1, 0.7}, grid);
    EXPECT_LE(l1_distance(grid_convolve(a, b), grid_convolve(b, a)), 1e-10);
    const auto u = law_grid(DisorderLaw::uniform(0.5), grid);
    const auto v = law_grid(DisorderLaw::gaussian(0.3), grid);
    const auto w = law_grid(DisorderLaw::uniform(1.0, 2, UniformScaling::moment_matched), grid);
    EXPECT_LE(l1_distance(grid_convolve(grid_convolve(u, v), w), grid_convolve(u, grid_convolve(v, w))), 1e-10);
}

TEST(Density, ConvolveRejectsMismatchedGrids) {
    EXPECT_THROW(grid_convolve(cauchy_grid({0, 1}, GridSpec{}), cauchy_grid({0, 1}, GridSpec{8.0, 1 << 12})),
                 UsageError);
}

TEST(Density, PushforwardFixesSigmaI) {
    const GridSpec grid;
    const auto f = cauchy_grid({0, 1}, grid);
    const auto g = pushforward_reciprocal(f, 0.0);
    EXPECT_LE(l1_distance(g, f), 1e-3);
    EXPECT_NEAR(g.mass(), 1.0, 1e-4);
}

TEST(Density, PushforwardMovesNarrowBumpToW) {
    // sigma at y0 + i eps, y0 = -1/w0 - E, maps to sigma at -1/(y0 + i eps + E).
    const GridSpec grid = GridSpec::for_energy(3.0);
    const double E = 3.0, w0 = -0.5, y0 = -1.0 / w0 - E;
    const cplx z(y0, 0.02);
    const auto g = pushforward_reciprocal(cauchy_grid(z, grid), E);
    const auto expect = cauchy_grid(-1.0 / (z + E), grid);
    EXPECT_LE(l1_distance(g, expect), 1e-3);
    const auto peak = std::max_element(g.values.begin(), g.values.end()) - g.values.begin();
    EXPECT_NEAR(grid.x(static_cast<std::size_t>(peak)), w0, 2 * grid.dx());
}

TEST(Density, PushforwardConservesMassOnRandomMixtures) {
    const GridSpec grid;
    CounterRng rng(7, StreamDomain::sample, 1);
    for (int k = 0; k < 10; ++k) {
        MeasurePool p;
        for (int j = 0; j < 5; ++j) p.samples.emplace_back(4 * rng.uniform() - 2, std::pow(10.0, -3 + 3 * rng.uniform()));
        const double E = 6 * rng.uniform() - 3;
        EXPECT_NEAR(pushforward_reciprocal(cauchy_project(p, grid), E).mass(), 1.0, 1e-4);
    }
}

TEST(Density, PushforwardNeedsTail) {
    auto f = cauchy_grid({0, 1}, GridSpec{});
    f.tail.reset();
    EXPECT_THROW(pushforward_reciprocal(f, 0.0), ConfigError);
}

TEST(Density, FreeStepKeepsSigmaW) {
    const EnergyPoint e(0.0, 0.01, 2);
    const GridSpec grid = GridSpec::for_energy(0.0);
    const cplx w = free_green(e);
    const auto f = cauchy_grid(w, grid);
    const auto g = density_step(f, DisorderLaw::point_mass(), e);
    EXPECT_LE(l1_distance(g, f), 5e-3);
}

TEST(Density, StepMatchesPopulationBackend) {
    const EnergyPoint e(0.5, 0.1, 2);
    const auto law = DisorderLaw::uniform(0.05);
    IterationConfig cfg{e, law};
    cfg.pool_size = 20000;
    cfg.seed = 17;
    const GridSpec grid = GridSpec::for_energy(e.E());
    MeasurePool pool = init_pool(free_start(cfg), cfg);
    GridDensity f = cauchy_project(pool, grid);
    for (int n = 1; n <= 20; ++n) {
        pool = step_pool(pool, cfg);
        f = density_step(f, law, e);
        if (n == 1 || n == 5 || n == 10 || n == 20)
            EXPECT_LE(l1_distance(f, cauchy_project(pool, grid)), 1e-2) << "n = " << n;
    }
}

TEST(Density, MassDriftThroughSteps) {
    const EnergyPoint e(0.5, 0.05, 2);
    const auto law = DisorderLaw::uniform(0.1);
    GridDensity f = cauchy_grid(free_green(e), GridSpec::for_energy(e.E()));
    double drift = 0.0;
    for (int k = 0; k < 100; ++k) {
        DensityStepDiagnostics d;
        f = density_step(f, law, e, &d);
        EXPECT_LE(std::abs(d.mass_before_normalize - 1.0), 1e-4) << k;
        drift += std::abs(d.mass_before_normalize - 1.0);
        for (double v : f.values) ASSERT_GE(v, 0.0);
    }
    EXPECT_LE(drift, 1e-2);
    EXPECT_NEAR(f.mass(), 1.0, 1e-12);
}

TEST(Density, FixedPointIterationConverges) {
    const EnergyPoint e(0.0, 0.1, 2);
    const GridSpec grid{8.0, 1 << 12};
    const auto res = density_fixed_point(cauchy_grid({0, 1}, grid), DisorderLaw::uniform(0.1), e, 300, 1e-7);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.trace.back(), 1e-7);
}

TEST(Density, TailCombineAndTauExamples) {
    const auto c = tail_combine({1, 0, 0}, {1, 0, 0}, 1.0);
    EXPECT_DOUBLE_EQ(c.s, 10.0);
    EXPECT_DOUBLE_EQ(c.r, 1.0);
    // 0.25 / 0.9025
    EXPECT_NEAR(tail_tau(-0.5, 0.1), 0.2770083102493075, 1e-15);
    const auto p = tail_pushforward({1.0, 0.1, 0.0}, -0.5);
    EXPECT_NEAR(p.s, 0.2770083102493075, 1e-15);
    EXPECT_NEAR(p.r, 0.02770083102493075, 1e-16);
    EXPECT_EQ(p.center, -0.5);
    EXPECT_THROW(tail_tau(-0.5, 2.0), CertificateBreakdown);
    EXPECT_THROW(tail_combine({1, 0, 0}, {1, 0, 0}, 0.0), UsageError);
}

TEST(Density, TailStepIsMonotone) {
    CounterRng rng(9, StreamDomain::property, 77);
    auto draw = [&] { return TailBound{1e-3 * rng.uniform(), 0.1 * rng.uniform(), 0.0}; };
    for (int k = 0; k < 2000; ++k) {
        const TailBound f = draw(), nu = draw(), eta = draw();
        const double t = 1e-3 + 1e-2 * rng.uniform();
        const auto base = tail_step(f, nu, eta, t, -0.5, 2);
        for (int which = 0; which < 6; ++which) {
            TailBound f2 = f, nu2 = nu, eta2 = eta;
            const double bump = 1.0 + rng.uniform();
            switch (which) {
            case 0: f2.s *= bump; break;
            case 1: f2.r *= bump; break;
            case 2: nu2.s *= bump; break;
            case 3: nu2.r *= bump; break;
            case 4: eta2.s *= bump; break;
            case 5: eta2.r *= bump; break;
            }
            const auto up = tail_step(f2, nu2, eta2, t, -0.5, 2);
            EXPECT_GE(up.s, base.s);
            EXPECT_GE(up.r, base.r);
        }
    }
}

TEST(Density, OneStepTailIsBoundedByTailStep) {
    // f0 = sigma at w + i beta w^2; one step on a grid fine enough to resolve it.
    const double beta = 1e-3, eta = 1e-6;
    const EnergyPoint e(3.0, eta, 2);
    const double w = free_green(cplx(3.0, 0.0), 2).real();
    const GridSpec grid{8.0, std::size_t{1} << 19};
    const auto law = DisorderLaw::uniform(beta);
    const auto f1 = density_step(cauchy_grid({w, beta * w * w}, grid), law, e);
    const TailBound f0_tail{beta * w * w / pi, 0.0, w};
    const TailBound bound = tail_step(f0_tail, law_tail(law), cauchy_tail(eta), std::sqrt(beta) * w * w, w, 2);
    int checked = 0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i) - w;
        if (std::abs(x) <= 1.1 * bound.r) continue;
        ++checked;
        ASSERT_LE(f1.values[i], 1.05 * bound.bound(grid.x(i))) << "x = " << grid.x(i);
    }
    EXPECT_GT(checked, 1000);
}

TEST(Certificate, SpecTailsDoNotClose) {
    // Exact rationals: s0 = 2.5e-4, r0 = 0.05, t = 2.5e-3; after combining,
    // s = 1.348106272e-3, r = 0.10760001, tau = 0.279237747, so tau s > s0.
    const EnergyPoint e(3.0, 1e-9, 2);
    const double b = 1e-4;
    const auto c = tail_certify(e, b, {2 * b, b, 0}, {2 * b * b, b * b, 0}, 50);
    EXPECT_FALSE(c.closes);
    EXPECT_FALSE(c.breakdown);
    EXPECT_EQ(c.first_failing_step, 1);
    EXPECT_NEAR(c.s0, 2.5e-4, 1e-18);
    EXPECT_NEAR(c.r0, 0.05, 1e-15);
    EXPECT_NEAR(c.t, 2.5e-3, 1e-17);
    ASSERT_EQ(c.history.size(), 2u);
    EXPECT_NEAR(c.history[1].s, 3.7644215858404715e-4, 1e-15);
}

TEST(Certificate, MeasuredTailsClose) {
    const EnergyPoint e(3.0, 1e-9, 2);
    const double b = 1e-4;
    const auto c = tail_certify(e, b, law_tail(DisorderLaw::uniform(b)), cauchy_tail(e.eta()), 200);
    EXPECT_TRUE(c.closes) << c.failure;
    EXPECT_EQ(c.history.size(), 201u);
    for (const auto& h : c.history) {
        EXPECT_LE(h.s, c.s0 * (1 + 1e-12));
        EXPECT_LE(h.r, c.r0 * (1 + 1e-12));
    }
    EXPECT_GT(c.concentration_bound, 0.0);
    EXPECT_LT(c.concentration_bound, 1.0);
    EXPECT_DOUBLE_EQ(c.concentration_radius, 2 * c.r0);
}

TEST(Certificate, ParabolicPointFails) {
    const double b = 1e-4;
    const EnergyPoint e(2.0 * std::sqrt(2.0), 1e-9, 2);
    for (const auto& c : {tail_certify(e, b, law_tail(DisorderLaw::uniform(b)), cauchy_tail(e.eta()), 200),
                          tail_certify_scan(e, b, law_tail(DisorderLaw::uniform(b)), cauchy_tail(e.eta()), 200)}) {
        EXPECT_FALSE(c.closes);
        EXPECT_TRUE(c.breakdown || c.first_failing_step >= 1);
    }
}

TEST(Certificate, DegenerateAndPreconditions) {
    const EnergyPoint e(3.0, 1e-9, 2);
    const auto c = tail_certify(e, 0.0, {}, {}, 10);
    EXPECT_TRUE(c.closes);
    EXPECT_EQ(c.s0, 0.0);
    EXPECT_EQ(c.r0, 0.0);
    EXPECT_THROW(tail_certify(EnergyPoint(2.0, 1e-9, 2), 1e-4, {}, {}, 10), UsageError);
    EXPECT_THROW(tail_certify(e, 1.5, {}, {}, 10), UsageError);
    EXPECT_THROW(tail_certify(e, 1e-4, {}, {}, 0), UsageError);
}

TEST(Density, ExportFormats) {
    const GridSpec grid{8.0, 16};
    const auto f = cauchy_grid({0, 1}, grid);
    std::ostringstream os;
    write_density(f, os);
    std::istringstream in(os.str());
    double x, v;
    int rows = 0;
    while (in >> x >> v) {
        EXPECT_EQ(x, grid.x(static_cast<std::size_t>(rows)));
        EXPECT_EQ(v, f.values[static_cast<std::size_t>(rows)]);
        ++rows;
    }
    EXPECT_EQ(rows, 16);
    const auto j = tail_json(f);
    EXPECT_NE(j.find("\"s\":"), std::string::npos);
    EXPECT_NE(j.find("\"center\":"), std::string::npos);
    GridDensity bare = f;
    bare.tail.reset();
    EXPECT_EQ(tail_json(bare), "null");
}
