#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/monotonicity.hpp"

using namespace quenchlab;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::usage;
}

SpaceTimeField constant_field(int n, double c, std::size_t cells) {
    const ModelParams m(3.0, n);
    return tabulate(m, GridSpec::box(n, -4, 4, cells, -1, 0), linspace(-1, 0, 3),
                    [c](const SpatialPoint&, double) { return c; });
}

std::vector<double> geometric(double a, double b, int count) {
    std::vector<double> s;
    for (int i = 0; i < count; ++i) s.push_back(a * std::pow(b / a, i / double(count - 1)));
    return s;
}

}  // namespace

TEST(HeatKernel, TailMassMatchesChiDistribution) {
    for (int n : {1, 2, 3}) {
        for (double k : {2.0, 4.0, 6.0}) {
            EXPECT_NEAR(gaussian_tail_mass(n, k), oracle::chi_tail(n, k), 1e-12 + 1e-9 * oracle::chi_tail(n, k));
        }
    }
    EXPECT_NEAR(heat_kernel(1, 0.0, 0.25), 1.0 / std::sqrt(M_PI), 1e-14);
    EXPECT_NEAR(heat_kernel(2, 1.0, 0.25), std::exp(-1.0) / M_PI, 1e-14);
}

TEST(WeightSpec, RejectsShortTruncation) {
    WeightSpec w;
    w.truncation_multiple = 3.0;
    EXPECT_EQ(kind_of([&] { w.validate(); }), ErrorKind::validation);
}

TEST(WeightedEnergy, ConstantFieldMatchesClosedForm) {
    for (int n : {1, 2}) {
        const SpaceTimeField f = constant_field(n, 0.7, n == 1 ? 800 : 200);
        for (double s : {0.05, 0.2}) {
            const WeightedValue v = weighted_energy(f, make_point(n == 1 ? std::initializer_list<double>{0.0}
                                                                         : std::initializer_list<double>{0.0, 0.0},
                                                                  0.0),
                                                    s, WeightSpec::full_space());
            const double exact = oracle::energy_of_constant(3.0, 0.7, s);
            EXPECT_NEAR(v.value, exact, 1e-6 * std::abs(exact));
            EXPECT_FALSE(v.flagged);
            EXPECT_LE(v.tail_bound, 1e-7);
        }
    }
}

TEST(WeightedEnergy, OdeFieldIsConstantInScale) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -4, 4, 512, -1, 0), linspace(-1, 0, 4001));
    for (double s : {0.01, 0.05, 0.2}) {
        EXPECT_NEAR(weighted_energy(f, make_point({0.0}, 0.0), s, WeightSpec::full_space()).value, -0.5, 1e-6);
    }
    // The cutoff removes mass once the kernel reaches its transition layer.
    EXPECT_GT(weighted_energy(f, make_point({0.0}, 0.0), 0.2, WeightSpec{}).value, -0.45);
}

TEST(WeightedEnergy, FlagsSingularMass) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = tabulate(m, GridSpec::box(1, -4, 4, 256, -1, 0), linspace(-1, 0, 3),
                                      [](const SpatialPoint& x, double) { return std::max(x[0], 0.0); });
    const WeightedValue v = weighted_energy(f, make_point({0.0}, 0.0), 0.1, WeightSpec::full_space());
    EXPECT_TRUE(v.flagged);
    EXPECT_NEAR(v.excluded_fraction, 0.5, 0.05);
}

TEST(WeightedEnergy, WindowErrors) {
    const SpaceTimeField f = constant_field(1, 1.0, 64);
    EXPECT_EQ(kind_of([&] { weighted_energy(f, make_point({0.0}, 0.0), 2.0, WeightSpec{}); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([&] { weighted_energy(f, make_point({3.5}, 0.0), 0.1, WeightSpec::full_space()); }),
              ErrorKind::domain);
}

TEST(Averaging, TrapezoidIsExactForLinear) {
    EXPECT_NEAR(doubling_average([](double t) { return 3.0 * t + 1.0; }, 0.2), 3.0 * 0.3 + 1.0, 1e-14);
    EXPECT_THROW(doubling_average([](double t) { return t; }, 0.2, 4), Error);
    const SlackModel slack;
    EXPECT_NEAR(slack.allowance(0.01), 1e-6 + 1e-3 * std::exp(-12.5), 1e-18);
}

TEST(Density, OdeFieldHasDensityMinusHalf) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -2, 2, 256, -1, 0), graded_times(-1, 0, 400, 4));
    const DensityResult d = density_estimate(f, make_point({0.0}, 0.0), WeightSpec{}, 1e-4, 0.25);
    ASSERT_TRUE(d.theta.has_value());
    EXPECT_NEAR(*d.theta, -0.5, 1e-3);
    EXPECT_FALSE(d.diverging);
    EXPECT_TRUE(d.trace.violations.empty());
    EXPECT_GE(d.trace.s_samples.size(), 3u);
    // Samples ascend in s and E is nondecreasing.
    EXPECT_NEAR(d.trace.E_values.front(), -0.5, 1e-3);
    for (std::size_t i = 1; i < d.trace.E_values.size(); ++i) {
        EXPECT_GT(d.trace.s_samples[i], d.trace.s_samples[i - 1]);
        EXPECT_GE(d.trace.E_values[i], d.trace.E_values[i - 1] - 1e-6);
    }
}

TEST(Density, DivergesAwayFromQuenchPoint) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -2, 2, 64, -1, 0), linspace(-1, 0, 2001));
    const DensityResult d = density_estimate(f, make_point({0.0}, -0.5), WeightSpec{}, 2e-3, 0.2);
    EXPECT_TRUE(d.diverging);
    EXPECT_FALSE(d.theta.has_value());
    EXPECT_LE(d.trace.divergence_slope, -0.25);
}

TEST(Density, Preconditions) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -2, 2, 64, -1, 0), linspace(-1, 0, 2001));
    const auto x0 = make_point({0.0}, -0.5);
    // Below h^2 / 4 the kernel is not resolved by the grid.
    EXPECT_EQ(kind_of([&] { density_estimate(f, x0, WeightSpec{}, 2e-5, 0.2); }), ErrorKind::usage);
    // Ladder with fewer than three points.
    EXPECT_EQ(kind_of([&] { density_estimate(f, x0, WeightSpec{}, 0.15, 0.2); }), ErrorKind::usage);
    // History too short for s_max.
    EXPECT_EQ(kind_of([&] { density_estimate(f, x0, WeightSpec{}, 2e-3, 0.3); }), ErrorKind::domain);
}

TEST(Frequency, HomogeneousDegreeFromFullWeight) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = tabulate(m, GridSpec::box(1, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                      [](const SpatialPoint& x, double) { return std::abs(x[0]); });
    const FrequencyValue v = frequency(f, make_point({0.0}, 0.0), 0.5, WeightSpec::full_space());
    ASSERT_TRUE(v.N.has_value());
    EXPECT_NEAR(v.H, 2.0 * 0.5, 1e-5);
    EXPECT_NEAR(*v.N, 0.5, 1e-6);
}

TEST(Almgren, ConstantFrequencyForHomogeneousCaloric) {
    const auto s = geometric(0.1, 1.0, 10);
    const ModelParams m1(3.0, 1);
    const SpaceTimeField f1 = tabulate(m1, GridSpec::box(1, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                       [](const SpatialPoint& x, double) { return std::abs(x[0]); });
    const FrequencyTrace t1 = almgren_scan(f1, make_point({0.0}, 0.0), WeightSpec::full_space(), s, 0.5);
    ASSERT_TRUE(t1.max_gamma_deviation.has_value());
    EXPECT_LT(*t1.max_gamma_deviation, 1e-5);
    EXPECT_TRUE(t1.violations.empty());
    ASSERT_TRUE(t1.log_h_identity_error.has_value());
    EXPECT_LT(*t1.log_h_identity_error, 1e-4);

    const ModelParams m2(3.0, 2);
    const SpaceTimeField f2 = tabulate(m2, GridSpec::box(2, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                       [](const SpatialPoint& x, double) { return std::abs(x[0] * x[1]); });
    const FrequencyTrace t2 = almgren_scan(f2, make_point({0.0, 0.0}, 0.0), WeightSpec::full_space(), s, 1.0);
    EXPECT_LT(*t2.max_gamma_deviation, 1e-4);
    EXPECT_TRUE(t2.violations.empty());
}

TEST(Almgren, UnclaimedScanReportsNoViolations) {
    const ModelParams m(3.0, 1);
    // N decreases in s for this profile, so a claimed scan must flag it.
    const SpaceTimeField f = tabulate(m, GridSpec::box(1, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                      [](const SpatialPoint& x, double) { return 1.0 + x[0] * x[0]; });
    const auto s = geometric(0.1, 1.0, 6);
    const FrequencyTrace claimed = almgren_scan(f, make_point({0.0}, 0.0), WeightSpec::full_space(), s);
    const FrequencyTrace unclaimed =
        almgren_scan(f, make_point({0.0}, 0.0), WeightSpec::full_space(), s, std::nullopt, false);
    EXPECT_TRUE(unclaimed.violations.empty());
    EXPECT_FALSE(unclaimed.monotonicity_claimed);
    EXPECT_EQ(claimed.s_samples, unclaimed.s_samples);
}
