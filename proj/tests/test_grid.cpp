#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "quenchlab/cutoff.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/grid.hpp"

using namespace quenchlab;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::usage;
}

SpaceTimeField quadratic_field() {
    const ModelParams p(3.0, 2);
    const GridSpec g = GridSpec::box(2, -1.0, 1.0, 32, 0.0, 1.0);
    return tabulate(p, g, linspace(0.0, 1.0, 11), [](const SpatialPoint& x, double t) {
        return 1.0 + x[0] * x[0] + 2.0 * x[1] * x[1] + x[0] * x[1] + t * t;
    });
}

}  // namespace

TEST(ModelParams, RejectsSmallExponent) {
    try {
        ModelParams(0.5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
        EXPECT_STREQ(e.what(), "p > 1 required");
    }
    EXPECT_EQ(kind_of([] { ModelParams(3.0, 4); }), ErrorKind::validation);
    EXPECT_DOUBLE_EQ(ModelParams(3.0, 1).alpha(), 0.5);
}

TEST(GridSpec, RejectsAnisotropicSpacing) {
    GridSpec g = GridSpec::box(2, 0.0, 1.0, 10, 0.0, 1.0);
    g.cells[1] = 11;
    EXPECT_EQ(kind_of([&] { g.validate(); }), ErrorKind::validation);
    g = GridSpec::box(1, 0.0, 1.0, 10, 0.0, 1.0);
    g.time_end = g.time_start;
    EXPECT_EQ(kind_of([&] { g.validate(); }), ErrorKind::validation);
}

TEST(Lattice, FlatIndexRoundTrip) {
    const Lattice lat(GridSpec::box(3, 0.0, 1.0, 4, 0.0, 1.0));
    for (std::size_t f = 0; f < lat.size(); ++f) EXPECT_EQ(lat.flat(lat.unflat(f)), f);
    EXPECT_EQ(lat.size(), 125u);
    EXPECT_TRUE(lat.on_boundary({0, 2, 2}));
    EXPECT_FALSE(lat.on_boundary({1, 2, 3}));
}

TEST(SpaceTimeField, RejectsNonIncreasingTimes) {
    const ModelParams p(3.0, 1);
    const GridSpec g = GridSpec::box(1, 0.0, 1.0, 2, 0.0, 1.0);
    EXPECT_EQ(kind_of([&] {
                  SpaceTimeField(p, g, {0.5, 0.5}, std::vector<double>(6, 1.0),
                                 BoundaryKind::analytic);
              }),
              ErrorKind::validation);
}

TEST(Sample, ReproducesBilinearFunctionsExactly) {
    const ModelParams p(3.0, 2);
    const GridSpec g = GridSpec::box(2, -1.0, 1.0, 8, 0.0, 1.0);
    auto fn = [](const SpatialPoint& x, double t) { return 2.0 + x[0] - 3.0 * x[1] + x[0] * x[1] + 0.5 * t; };
    const SpaceTimeField f = tabulate(p, g, linspace(0.0, 1.0, 3), fn);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const ParabolicPoint x = make_point({u(rng), u(rng)}, ut(rng));
        EXPECT_NEAR(sample(f, x), fn(x.x, x.t), 1e-12);
    }
}

TEST(Sample, StaysWithinNodeBounds) {
    const ModelParams p(3.0, 1);
    const GridSpec g = GridSpec::box(1, 0.0, 1.0, 16, 0.0, 1.0);
    const SpaceTimeField f = tabulate(p, g, linspace(0.0, 1.0, 5),
                                      [](const SpatialPoint& x, double t) { return std::sin(9 * x[0] + t); });
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double v = sample(f, make_point({u(rng)}, u(rng)));
        EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    }
}

TEST(Sample, OutsideGridIsDomainError) {
    const SpaceTimeField f = quadratic_field();
    EXPECT_EQ(kind_of([&] { sample(f, make_point({1.5, 0.0}, 0.5)); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([&] { sample(f, make_point({0.0, 0.0}, 1.5)); }), ErrorKind::domain);
}

TEST(Derivatives, ExactOnQuadratics) {
    const SpaceTimeField f = quadratic_field();
    const ParabolicPoint x = make_point({0.25, -0.375}, 0.4);
    const auto g = gradient(f, x);
    EXPECT_NEAR(g[0], 2 * 0.25 - 0.375, 1e-12);
    EXPECT_NEAR(g[1], 4 * -0.375 + 0.25, 1e-12);
    EXPECT_NEAR(laplacian(f, x), 6.0, 1e-9);
    EXPECT_NEAR(time_derivative(f, x), 0.8, 1e-10);
    EXPECT_EQ(kind_of([&] { gradient(f, make_point({1.0, 0.0}, 0.5)); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([&] { time_derivative(f, make_point({0.0, 0.0}, 1.0)); }), ErrorKind::domain);
}

TEST(ParabolicDistance, MaxOfSpaceAndRootTime) {
    EXPECT_DOUBLE_EQ(parabolic_distance(make_point({0.0, 0.0}, 0.0), make_point({0.3, 0.4}, 0.01)), 0.5);
    EXPECT_DOUBLE_EQ(parabolic_distance(make_point({0.0}, 0.0), make_point({0.1}, -0.25)), 0.5);
}

TEST(ParabolicCylinder, BackwardMembership) {
    ParabolicCylinder q{make_point({0.0}, 0.0), 0.5, CylinderKind::backward};
    EXPECT_TRUE(q.contains(make_point({0.5}, 0.0)));
    EXPECT_TRUE(q.contains(make_point({0.1}, -0.2)));
    EXPECT_FALSE(q.contains(make_point({0.1}, -0.25)));
    EXPECT_FALSE(q.contains(make_point({0.1}, 0.01)));
}

TEST(Restriction, WholeBoxKeepsGeometryAndMeasure) {
    const SpaceTimeField f = quadratic_field();
    ParabolicCylinder q{make_point({0.0, 0.0}, 1.0), 10.0, CylinderKind::backward};
    const Restriction r = restrict_to(f, q);
    EXPECT_TRUE(r.field == f);
    EXPECT_NEAR(mask_measure(r), 4.0 * (1.0 + 1.0 / 32) * (1.0 + 1.0 / 32), 1e-9);
}

TEST(Restriction, CylinderMeasureApproachesVolume) {
    const ModelParams p(3.0, 2);
    const GridSpec g = GridSpec::box(2, -1.0, 1.0, 128, -1.0, 0.0);
    const SpaceTimeField f = tabulate(p, g, linspace(-1.0, 0.0, 257),
                                      [](const SpatialPoint&, double) { return 1.0; });
    ParabolicCylinder q{make_point({0.0, 0.0}, 0.0), 0.5, CylinderKind::backward};
    const Restriction r = restrict_to(f, q);
    const double exact = M_PI * 0.25 * 0.25;
    EXPECT_NEAR(mask_measure(r), exact, 0.03 * exact);
}

TEST(SmoothStep, LimitsAndDerivatives) {
    EXPECT_EQ(smooth_step(-0.1).value, 1.0);
    EXPECT_EQ(smooth_step(1.1).value, 0.0);
    EXPECT_NEAR(smooth_step(0.5).value, 0.5, 1e-15);
    for (double s : {0.1, 0.3, 0.62, 0.9}) {
        const double h = 1e-5;
        const SmoothStep q = smooth_step(s);
        EXPECT_NEAR(q.d1, (smooth_step(s + h).value - smooth_step(s - h).value) / (2 * h), 1e-6);
        EXPECT_NEAR(q.d2, (smooth_step(s + h).d1 - smooth_step(s - h).d1) / (2 * h), 1e-4);
    }
}

TEST(Cutoff, LaplacianMatchesFiniteDifferences) {
    CutoffSpec eta;
    eta.center = {0.1, -0.2, 0.0};
    for (int n : {1, 2, 3}) {
        const SpatialPoint x{0.5, 0.3, -0.2};
        const ScalarJet j = cutoff_jet(eta, n, x);
        const double h = 1e-4;
        double lap = 0.0;
        for (int a = 0; a < n; ++a) {
            SpatialPoint xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            const double vp = cutoff_jet(eta, n, xp).value, vm = cutoff_jet(eta, n, xm).value;
            EXPECT_NEAR(j.grad[a], (vp - vm) / (2 * h), 1e-6);
            lap += (vp - 2 * j.value + vm) / (h * h);
        }
        EXPECT_NEAR(j.laplacian, lap, 1e-4);
    }
    EXPECT_EQ(cutoff_jet(eta, 2, {0.1, -0.2, 0.0}).value, 1.0);
    EXPECT_EQ(cutoff_jet(eta, 2, {1.2, -0.2, 0.0}).value, 0.0);
}

TEST(TestVectorField, RadialDivergence) {
    SpaceTimeBump psi;
    const TestVectorField y = TestVectorField::radial(psi);
    const VectorJet j = y.jet(2, {0.2, 0.1, 0.0}, 0.0);
    EXPECT_NEAR(j.divergence(2), 2.0, 1e-12);
    EXPECT_NEAR(j.value[0], 0.2, 1e-15);
}
