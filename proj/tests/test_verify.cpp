#include <doctest.h>

#include <cmath>
#include <limits>

#include "sqm/battery.hpp"
#include "sqm/errors.hpp"
#include "sqm/models.hpp"
#include "sqm/pde.hpp"
#include "sqm/process.hpp"
#include "sqm/spectral.hpp"
#include "sqm/verify.hpp"

using namespace sqm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DiffusionSpec oscillator() { return oscillator_spec(ModelConfig{}); }

Grid1D reference() { return Grid1D::with_spacing(-8.0, 8.0, 1.0 / 32.0); }

// Mehler kernel with mode 1 altered: its decay rate or its amplitude
TransitionKernel faulty_kernel(double rate, double amplitude) {
    return [rate, amplitude](double x, double x0, double tau) {
        const double mode1 = stationary_density(x) * 2.0 * x * x0;  // h1(x) h1(x0) e^{-x^2}/sqrt(pi)
        return transition_density_closed(x, x0, tau) + mode1 * (amplitude * std::exp(-rate * tau) - std::exp(-tau));
    };
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("Chapman-Kolmogorov holds for exact kernels") {
    CHECK(chapman_kolmogorov_gap(oscillator_closed_kernel(), 0.0, 0.5, 1.0, reference()).metric <= 1e-6);
    CHECK(chapman_kolmogorov_gap(oscillator_series_kernel(), 0.0, 0.5, 1.0, reference()).metric <= 1e-6);
    const Grid1D wide = Grid1D::with_spacing(-16.0, 16.0, 1.0 / 32.0);
    for (auto [t1, t2] : {std::pair{0.5, 1.0}, std::pair{0.3, 2.0}, std::pair{1.5, 1.8}}) {
        CHECK(chapman_kolmogorov_gap(wiener_kernel(0.5), 0.0, t1, t2, wide).metric <= 1e-6);
    }
}

TEST_CASE("Chapman-Kolmogorov detects an amplitude fault") {
    const auto r = chapman_kolmogorov_gap(faulty_kernel(1.0, 1.1), 0.0, 0.5, 1.0, reference());
    CHECK(r.metric > 1e-3);
    CHECK_FALSE(r.passed);
}

TEST_CASE("a decay-rate fault on one mode keeps the semigroup property") {
    // e^{-1.1 tau} still composes, so the gap cannot see it
    const auto r = chapman_kolmogorov_gap(faulty_kernel(1.1, 1.0), 0.0, 0.5, 1.0, reference());
    CHECK(r.metric <= 1e-6);
}

TEST_CASE("Chapman-Kolmogorov argument checks") {
    CHECK_THROWS_AS(chapman_kolmogorov_gap(oscillator_closed_kernel(), 0.0, 0.2, 1.0, reference()), InvalidArgument);
    CHECK_THROWS_AS(chapman_kolmogorov_gap(oscillator_closed_kernel(), 0.0, 1.0, 0.5, reference()), InvalidArgument);
}

TEST_CASE("H-theorem decay") {
    const std::vector<double> ladder{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto one = h_theorem_curve(oscillator_closed_kernel(), 1.0, ladder, reference());
    CHECK(one.slope >= -1.2);
    CHECK(one.slope <= -0.8);
    CHECK(one.expected_rate == 1);
    CHECK(one.slope_report.passed);
    CHECK(one.monotone_report.passed);
    for (std::size_t k = 1; k < one.distances.size(); ++k) CHECK(one.distances[k] < one.distances[k - 1]);

    const auto zero = h_theorem_curve(oscillator_closed_kernel(), 0.0, ladder, reference());
    CHECK(zero.slope >= -2.2);
    CHECK(zero.slope <= -1.8);
    CHECK(zero.expected_rate == 2);

    const std::vector<double> bad{0.1, 1.0};
    CHECK_THROWS_AS(h_theorem_curve(oscillator_closed_kernel(), 1.0, bad, reference()), InvalidArgument);
}

TEST_CASE("ergodic averages") {
    const SamplePath path = simulate_path(oscillator(), {{0.0, 0.0}, 2000.0, 1e-3, Direction::forward, 1}, 31);
    CHECK(ergodic_average(path, [](double x) { return x * x; }, reference()).metric <= 0.05);
    CHECK(ergodic_average(path, [](double x) { return x; }, reference()).metric <= 0.05);
    CHECK(ergodic_average(path, [](double) { return 1.0; }, reference()).metric <= 1e-12);
    const SamplePath short_path = simulate_path(oscillator(), {{0.0, 0.0}, 100.0, 1e-2, Direction::forward, 1}, 31);
    CHECK_THROWS_AS(ergodic_average(short_path, [](double x) { return x; }, reference()), PathTooShort);
}

TEST_CASE("region probabilities") {
    const ConditionedState origin(Anchor{0.0, 0.0});
    for (double t : {0.01, 0.3, 1.0, 5.0}) {
        CHECK(std::abs(region_probability(origin, {-kInf, 0.0}, t) - 0.5) <= 1e-8);
        CHECK(std::abs(region_probability(origin, {-kInf, kInf}, t) - 1.0) <= 1e-8);
    }
    const ConditionedState one(Anchor{1.0, 0.0});
    CHECK(std::abs(region_probability(one, {-kInf, 0.0}, 20.0) - 0.5) <= 1e-6);
    const ConditionedState series(Anchor{1.0, 0.0}, SeriesKernel{60});
    CHECK(std::abs(region_probability(series, {-kInf, 0.0}, 20.0) - 0.5) <= 1e-6);
    CHECK(std::abs(region_probability(series, {-1.0, 0.5}, 1.0) - region_probability(one, {-1.0, 0.5}, 1.0)) <= 1e-8);
    CHECK_THROWS_AS(region_probability(origin, {1.0, 0.0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(region_probability(origin, {0.0, 1.0}, 0.0), InvalidArgument);
}

TEST_CASE("PDE-backed conditioned state") {
    const ConditionedState pde(Anchor{1.0, 0.0}, PdeKernel{oscillator(), reference(), SolverConfig{}});
    const ConditionedState exact(Anchor{1.0, 0.0});
    CHECK(std::abs(region_probability(pde, {-kInf, 1.0}, 1.0) - region_probability(exact, {-kInf, 1.0}, 1.0)) <= 5e-3);
    const DensityField f = pde.predict(reference(), 1.0);
    CHECK(std::abs(mass(f) - 1.0) <= 1e-8);
    CHECK_THROWS_AS(pde.density(0.0, 1.0), InvalidArgument);
}

TEST_CASE("measurement update") {
    const ConditionedState prior(Anchor{0.0, 0.0});
    const ConditionedState updated = measurement_update(prior, Anchor{2.0, 1.0});
    CHECK(updated.anchor().x == 2.0);
    REQUIRE(updated.history().size() == 1);
    CHECK(updated.history()[0].x == 0.0);
    CHECK(region_probability(updated, {1.7, 2.3}, 1.01) >= 0.95);
    for (double x : {-3.0, 0.0, 1.0, 2.5}) CHECK(std::abs(updated.density(x, 21.0) - stationary_density(x)) <= 1e-6);
    CHECK_THROWS_AS(measurement_update(updated, Anchor{0.0, 0.5}), TimeRegression);
    CHECK_NOTHROW(measurement_update(updated, Anchor{1.0, 1.0}));
}

TEST_CASE("predictions depend only on the latest anchor") {
    const ConditionedState direct = measurement_update(ConditionedState(Anchor{0.0, 0.0}), Anchor{2.0, 1.0});
    const ConditionedState detour =
        measurement_update(measurement_update(ConditionedState(Anchor{-3.0, -1.0}), Anchor{0.7, 0.2}), Anchor{2.0, 1.0});
    const ConditionedState stripped = detour.without_history();
    const ConditionedState twice = measurement_update(direct, Anchor{2.0, 1.0});
    CHECK(stripped.history().empty());
    const Grid1D grid(-4.0, 4.0, 64);
    for (double t : {1.05, 1.5, 4.0}) {
        for (Interval r : {Interval{-kInf, 0.0}, Interval{1.0, 3.0}, Interval{-kInf, kInf}}) {
            const double p = region_probability(direct, r, t);
            CHECK(region_probability(detour, r, t) == p);
            CHECK(region_probability(stripped, r, t) == p);
            CHECK(region_probability(twice, r, t) == p);
        }
        CHECK(detour.predict(grid, t).values() == direct.predict(grid, t).values());
    }
}

TEST_CASE("gated histograms") {
    const PathRequest req{{0.0, 0.0}, 2.0, 1e-3, Direction::forward, 100};
    const Ensemble small = simulate_ensemble(oscillator(), req, 2000, 5);
    const Grid1D bins(-4.0, 4.0, 16);
    CHECK_THROWS_AS(gated_histogram(small, Gate{1.0, {0.9, 1.1}}, 2.0, bins), GateTooNarrow);
    CHECK_THROWS_AS(gated_histogram(small, Gate{1.0, {-kInf, kInf}}, 0.5, bins), InvalidArgument);
    CHECK_THROWS_AS(gated_histogram(small, Gate{1.05, {-kInf, kInf}}, 2.0, bins), InvalidArgument);

    const GatedHistogram all = gated_histogram(small, Gate{1.0, {-kInf, kInf}}, 2.0, bins);
    CHECK(all.n_gated == 2000);
    double total = all.below + all.above;
    for (double p : all.bin_probability) total += p;
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("full-line gate reduces to the unconditioned density") {
    const PathRequest req{{1.0, 0.0}, 2.0, 1e-3, Direction::forward, 100};
    const Ensemble e = simulate_ensemble(oscillator(), req, 20000, 12);
    const auto r = markov_conditioning_test(e, Gate{1.0, {-kInf, kInf}}, 2.0, Grid1D(-4.0, 4.0, 16), oscillator_closed_kernel());
    CHECK(r.details.at("tau") == 2.0);
    CHECK(r.metric <= 0.05);
}

TEST_CASE("osmotic relation") {
    const DensityField p = sample_field(reference(), 0.0, [](double x) { return stationary_density(x); });
    const Field u = [](double x, double) { return -x; };
    CHECK(osmotic_residual(p, u, 0.5, [](double x, double) { return -x * stationary_density(x); }).metric <= 1e-9);

    const DensityField fine = sample_field(reference().refined(), 0.0, [](double x) { return stationary_density(x); });
    const double ratio = osmotic_residual(p, u, 0.5).metric / osmotic_residual(fine, u, 0.5).metric;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);

    // the wrong velocity leaves half of p u unexplained
    const auto wrong = osmotic_residual(p, [](double x, double) { return -2.0 * x; }, 0.5,
                                        [](double x, double) { return -x * stationary_density(x); });
    CHECK(wrong.metric == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(wrong.passed);

    const DensityField hole = sample_field(reference(), 0.0, [](double x) { return x == 0.0 ? 0.0 : stationary_density(x); });
    CHECK_THROWS_AS(osmotic_residual(hole, u, 0.5), NonPositiveDensity);
}

TEST_CASE("continuity of a stationary density") {
    std::vector<DensityField> seq;
    for (int k = 0; k < 3; ++k) seq.push_back(sample_field(reference(), k * 1e-3, [](double x) { return stationary_density(x); }));
    const Field zero = [](double, double) { return 0.0; };
    CHECK(continuity_residual(seq, zero).report.metric <= 1e-9);
    seq.pop_back();
    CHECK_THROWS_AS(continuity_residual(seq, zero), InsufficientSnapshots);
}

TEST_CASE("continuity residual of a relaxing kernel is the osmotic flux divergence") {
    const double dt = 1e-3;
    std::vector<DensityField> seq;
    for (int k = -1; k <= 1; ++k) {
        const double t = 1.0 + k * dt;
        seq.push_back(sample_field(reference(), t, [t](double x) { return transition_density_closed(x, 1.0, t); }));
    }
    const ContinuityResult c = continuity_residual(seq, [](double, double) { return 0.0; });
    REQUIRE(c.residuals.size() == 1);
    // p_t = -d/dx (p u - d(p w)/dx) with u = -x, w = 1/2: p + x p_x + p_xx / 2
    const double m = std::exp(-1.0), s = 0.5 * (1.0 - std::exp(-2.0));
    double worst = 0.0;
    const ResidualField& r = c.residuals[0];
    for (std::size_t i = r.first_valid; i <= r.last_valid; ++i) {
        const double x = reference().node(i);
        const double p = transition_density_closed(x, 1.0, 1.0);
        const double px = -(x - m) / s * p;
        const double pxx = ((x - m) * (x - m) / (s * s) - 1.0 / s) * p;
        worst = std::max(worst, std::abs(r.field[i] - (p + x * px + 0.5 * pxx)));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("continuity of a translating Gaussian converges at second order") {
    auto residual = [](double dx, double dt) {
        constexpr double c = 0.7;
        const Grid1D grid = Grid1D::with_spacing(-8.0, 8.0, dx);
        std::vector<DensityField> seq;
        for (int k = -1; k <= 1; ++k) {
            const double t = 1.0 + k * dt;
            seq.push_back(sample_field(grid, t, [t](double x) { return heat_kernel(x - c * t, 0.0, 0.1, 0.5); }));
        }
        return continuity_residual(seq, [](double, double) { return c; }).report.metric;
    };
    const double ratio = residual(1.0 / 16.0, 2e-2) / residual(1.0 / 32.0, 1e-2);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("ground state consistency") {
    const auto r = ground_state_consistency(reference());
    CHECK(r.passed);
    CHECK(r.metric <= 1e-10);
}

TEST_CASE("battery suites") {
    CHECK(is_known_suite("all"));
    CHECK_FALSE(is_known_suite("bogus"));
    CHECK_THROWS_AS(run_battery("bogus", 1), InvalidArgument);
    const auto a = run_battery("nelson", 42);
    const auto b = run_battery("nelson", 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].check_name == b[i].check_name);
        CHECK(a[i].metric == b[i].metric);
        CHECK(a[i].passed == (a[i].metric <= a[i].tolerance));
    }
    CHECK(all_passed(a));
    const auto kernel = run_battery("kernel", 42);
    for (const auto& r : kernel) {
        INFO(r.check_name << " metric " << r.metric);
        CHECK(r.passed);
    }
}

}
