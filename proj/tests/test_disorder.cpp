#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bethe/disorder.hpp"
#include "bethe/stats.hpp"

using namespace bethe;

namespace {

// Centered Gaussian sigma = 0.3 sampled on 401 nodes of [-1, 1].
DisorderLaw discretized_gaussian() {
    std::vector<double> x, w;
    for (int i = 0; i <= 400; ++i) {
        const double xi = -1.0 + i / 200.0;
        x.push_back(xi);
        w.push_back(std::exp(-xi * xi / (2 * 0.09)));
    }
    return DisorderLaw::table(x, w, 0.3);
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(Disorder, ConstructionInvariants) {
    EXPECT_THROW(DisorderLaw::uniform(0.0), ConfigError);
    EXPECT_THROW(DisorderLaw::uniform(-1.0), ConfigError);
    EXPECT_THROW(DisorderLaw::uniform(0.1, 0.5), ConfigError);
    EXPECT_NO_THROW(DisorderLaw::point_mass());
    EXPECT_THROW(DisorderLaw::table({0.0, 1.0}, {1.0, NAN}, 0.1), ConfigError);
    EXPECT_THROW(DisorderLaw::table({0.0, 1.0}, {1.0, -1.0}, 0.1), ConfigError);
    EXPECT_THROW(DisorderLaw::table({0.0, 0.0}, {1.0, 1.0}, 0.1), ConfigError);
    // not centered
    EXPECT_THROW(DisorderLaw::table({0.0, 1.0}, {1.0, 1.0}, 0.1), ConfigError);
    EXPECT_THROW(DisorderLaw::table({-1.0, 1.0}, {0.0, 0.0}, 0.1), ConfigError);
}

TEST(Disorder, SampleMeanUniform) {
    const auto xs = DisorderLaw::uniform(1.0).sample(101, 1000000);
    EXPECT_LT(std::abs(mean(xs)), 4e-3);
}

TEST(Disorder, SampleFourthMomentUniformPlain) {
    const auto xs = DisorderLaw::uniform(1.0).sample(102, 1000000);
    double m4 = 0.0;
    for (double x : xs) m4 += x * x * x * x;
    m4 /= static_cast<double>(xs.size());
    // integral of x^4 / 2 over [-1, 1]
    EXPECT_NEAR(m4, 0.2, 0.002);
}

TEST(Disorder, SampleVarianceDiscretizedGaussian) {
    const auto xs = discretized_gaussian().sample(103, 1000000);
    const double m = mean(xs);
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size());
    // mpmath quadrature of the sigma = 0.3 Gaussian truncated at +-1
    EXPECT_NEAR(v / 0.0890738378433383, 1.0, 0.01);
}

TEST(Disorder, SamplingIsDeterministic) {
    const auto law = DisorderLaw::gaussian(0.2);
    EXPECT_EQ(law.sample(5, 1000), law.sample(5, 1000));
    EXPECT_NE(law.sample(5, 1000), law.sample(6, 1000));
    EXPECT_THROW(law.sample(5, 0), UsageError);
}

TEST(Disorder, DensityExamples) {
    const auto u = DisorderLaw::uniform(1.0);
    EXPECT_DOUBLE_EQ(u.density(0.0), 0.5);
    EXPECT_DOUBLE_EQ(u.density(2.0), 0.0);
    // mpmath: 1 / integral of exp(-x^2 / 0.18) over [-1, 1]
    EXPECT_NEAR(discretized_gaussian().density(0.0), 1.330949716796022, 1e-4);
    EXPECT_THROW(DisorderLaw::point_mass().density(0.0), UsageError);
}

TEST(Disorder, DensitiesIntegrateToOne) {
    for (const auto& law : {DisorderLaw::uniform(0.3), DisorderLaw::uniform(0.3, 2, UniformScaling::moment_matched),
                            DisorderLaw::gaussian(0.3), discretized_gaussian()}) {
        const double R = law.support_radius();
        const int n = 200000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += law.density(-R + 2 * R * (i + 0.5) / n);
        EXPECT_NEAR(acc * 2 * R / n, 1.0, 1e-6) << law.describe();
    }
}

TEST(Disorder, MomentsAndScalings) {
    const double b = 0.1;
    EXPECT_NEAR(DisorderLaw::uniform(b).moment(4), std::pow(b, 4) / 5.0, 1e-18);
    EXPECT_NEAR(DisorderLaw::uniform(b, 2, UniformScaling::moment_matched).moment(4), std::pow(b, 4), 1e-17);
    // 3 sigma^4 = beta^4 before truncation; the 6 sigma cut removes about 1e-6
    EXPECT_NEAR(DisorderLaw::gaussian(b).moment(4) / std::pow(b, 4), 1.0, 1e-5);
    EXPECT_LE(DisorderLaw::gaussian(b).moment(4), std::pow(b, 4));
    for (const auto& law : {DisorderLaw::uniform(b), DisorderLaw::gaussian(b)})
        EXPECT_LE(std::abs(law.moment(1)), 1e-12 * b);
}

TEST(Disorder, SamplerMatchesCdf) {
    for (const auto& law : {DisorderLaw::uniform(0.5), DisorderLaw::gaussian(0.5), discretized_gaussian()}) {
        const double ks = ks_one_sample(law.sample(104, 1000000), [&](double x) { return law.cdf(x); });
        EXPECT_LE(ks, 0.002) << law.describe();
    }
}

TEST(Disorder, ValidateUniformPasses) {
    const auto rep = validate(DisorderLaw::uniform(0.1, 2.0), 0.01);
    EXPECT_TRUE(rep.passes.all());
    EXPECT_LE(rep.regularity_worst_ratio, 2.0);
    EXPECT_LE(rep.subcauchy_worst_ratio, 2.0);
    EXPECT_NEAR(rep.fourth_moment, 1e-4 / 5, 1e-18);
}

TEST(Disorder, ValidatePointMassFailsRegularity) {
    const auto rep = validate(DisorderLaw::point_mass(0.0, 0.1, 2.0), 0.01);
    EXPECT_FALSE(rep.passes.regularity);
    EXPECT_GE(rep.regularity_worst_ratio, 1000.0);
}

TEST(Disorder, ValidateReportsMeasuredRatioAgainstTightL) {
    const auto rep = validate(DisorderLaw::uniform(0.1, 1.0001), 0.01);
    EXPECT_EQ(rep.passes.regularity, rep.regularity_worst_ratio <= 1.0001 * (1 + 1e-12));
    EXPECT_GT(rep.regularity_worst_ratio, 1.0);
    EXPECT_FALSE(rep.passes.regularity);
}

TEST(Disorder, ValidateIsDeterministicAndChecksTol) {
    const auto law = DisorderLaw::gaussian(0.05);
    EXPECT_EQ(validate(law, 0.05), validate(law, 0.05));
    EXPECT_THROW(validate(law, 0.0), UsageError);
    EXPECT_THROW(validate(law, 0.2), UsageError);
}

TEST(Disorder, LoadTableLineAnchoredErrors) {
    const std::string path = ::testing::TempDir() + "bethe_table.txt";
    {
        std::ofstream f(path);
        f << "# x weight\n-1 1\n0 2\nbad 1\n";
    }
    try {
        DisorderLaw::load_table(path, 0.5);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos) << e.what();
    }
    {
        std::ofstream f(path);
        f << "-1 1\n0 2\n1 1\n";
    }
    const auto law = DisorderLaw::load_table(path, 0.5);
    // triangle with trapezoid mass 3
    EXPECT_NEAR(law.density(0.0), 2.0 / 3.0, 1e-12);
    std::remove(path.c_str());
    EXPECT_THROW(DisorderLaw::load_table("/nonexistent/table.txt", 0.5), ConfigError);
}
