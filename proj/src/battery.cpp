#include "sqm/battery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sqm/errors.hpp"
#include "sqm/models.hpp"
#include "sqm/pde.hpp"
#include "sqm/process.hpp"
#include "sqm/spectral.hpp"
#include "sqm/verify.hpp"

namespace sqm {

namespace {

using Reports = std::vector<VerificationReport>;

const Grid1D& reference_grid() {
    static const Grid1D grid = Grid1D::with_spacing(-8.0, 8.0, 1.0 / 32.0);
    return grid;
}

DiffusionSpec oscillator() { return oscillator_spec(ModelConfig{}); }

void kernel_suite(Reports& out) {
    const auto lattice = Grid1D(-4.0, 4.0, 32).nodes();
    auto series_vs_closed = [&](double tau, int terms) {
        double worst = 0.0;
        for (double x : lattice) {
            for (double x0 : lattice) {
                worst = std::max(worst, std::abs(transition_density_series(x, x0, tau, terms).value -
                                                 transition_density_closed(x, x0, tau)));
            }
        }
        out.push_back(make_report("series_vs_closed_tau" + std::to_string(tau) + "_N" + std::to_string(terms), worst,
                                  1e-8, {{"tau", tau}, {"terms", static_cast<double>(terms)}}));
    };
    series_vs_closed(0.25, 200);
    for (double tau : {0.5, 1.0, 2.0}) series_vs_closed(tau, kDefaultSeriesTerms);

    double limit = 0.0;
    for (double x0 : {-2.0, 0.0, 1.0}) {
        for (double x : lattice) {
            limit = std::max(limit, std::abs(transition_density_series(x, x0, 20.0).value - stationary_density(x)));
        }
    }
    out.push_back(make_report("stationary_limit", limit, 1e-8, {{"tau", 20.0}}));

    double modes = 0.0;
    for (int n = 0; n <= 20; ++n) modes = std::max(modes, mode_check(n, Grid1D(-4.0, 4.0, 256)).metric);
    out.push_back(make_report("hermite_mode_checks", modes, 1e-9, {{"max_order", 20.0}}));
    out.push_back(hermite_orthogonality(15));
    out.push_back(ground_state_consistency(reference_grid()));

    auto ck = chapman_kolmogorov_gap(oscillator_closed_kernel(), 0.0, 0.5, 1.0, reference_grid());
    ck.check_name = "chapman_kolmogorov_closed";
    out.push_back(ck);
    auto cks = chapman_kolmogorov_gap(oscillator_series_kernel(), 0.0, 0.5, 1.0, reference_grid());
    cks.check_name = "chapman_kolmogorov_series";
    out.push_back(cks);
    auto ckw = chapman_kolmogorov_gap(wiener_kernel(0.5), 0.0, 0.5, 1.0, reference_grid());
    ckw.check_name = "chapman_kolmogorov_wiener";
    out.push_back(ckw);

    const std::vector<double> ladder{1.0, 2.0, 3.0, 4.0, 5.0};
    for (double x0 : {1.0, 0.0}) {
        auto h = h_theorem_curve(oscillator_closed_kernel(), x0, ladder, reference_grid());
        out.push_back(h.slope_report);
        out.push_back(h.monotone_report);
    }
}

double pde_error(double dx, double dt, double tau_end, double* mass_drift = nullptr) {
    const Grid1D grid = Grid1D::with_spacing(-8.0, 8.0, dx);
    constexpr double warm = 0.05;
    const DensityField init = sample_field(grid, warm, [](double x) { return transition_density_closed(x, 1.0, warm); });
    const Evolution evo = evolve_kolmogorov_forward(oscillator(), init, SolverConfig{dt, 3.0}, tau_end - warm);
    const DensityField& last = evo.snapshots.back();
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        err = std::max(err, std::abs(last[i] - transition_density_closed(grid.node(i), 1.0, tau_end)));
    }
    if (mass_drift != nullptr) *mass_drift = evo.diagnostics.mass_drift_max;
    return err;
}

void pde_suite(Reports& out) {
    const double coarse = pde_error(1.0 / 32.0, 1e-3, 1.0);
    const double fine = pde_error(1.0 / 64.0, 5e-4, 1.0);
    out.push_back(make_report("pde_vs_spectral", coarse, 5e-3, {{"dx", 1.0 / 32.0}, {"dt", 1e-3}}));
    out.push_back(make_report("pde_convergence_order", std::abs(coarse / fine - 4.0), 0.5,
                              {{"ratio", coarse / fine}, {"error_coarse", coarse}, {"error_fine", fine}}));

    double drift = 0.0;
    const double limit = pde_error(1.0 / 32.0, 1e-3, 20.0, &drift);
    out.push_back(make_report("pde_mass_conservation", drift, 1e-8, {{"tau_end", 20.0}}));
    out.push_back(make_report("pde_stationary_limit", limit, 1e-4, {{"tau_end", 20.0}}));

    const Grid1D& grid = reference_grid();
    double low_modes = 0.0, decay = 0.0;
    constexpr double span = 0.5;
    for (int n = 0; n <= 4; ++n) {
        const DensityField terminal = sample_field(grid, 0.0, [n](double x) { return hermite_eval(n, x); });
        const Evolution evo = evolve_kolmogorov_backward(oscillator(), terminal, SolverConfig{}, span);
        const DensityField& f = evo.snapshots.back();
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.node(i);
            if (std::abs(x) > 4.0) continue;
            const double expected = kolmogorov1_mode(n, x, -span);
            scale = std::max(scale, std::abs(expected));
            err = std::max(err, std::abs(f[i] - expected));
        }
        if (n <= 2) low_modes = std::max(low_modes, err);
        decay = std::max(decay, err / scale);
    }
    out.push_back(make_report("backward_mode_decay_low", low_modes, 1e-4, {{"span", span}, {"max_order", 2.0}}));
    // the O(dx^2) error grows with the fourth derivative of H_n
    out.push_back(make_report("backward_mode_decay", decay, 1e-3, {{"span", span}, {"max_order", 4.0}}));

    std::vector<DensityField> stationary;
    for (int k = -1; k <= 1; ++k) {
        stationary.push_back(sample_field(grid, k * 1e-3, [](double x) { return stationary_density(x); }));
    }
    const auto res = pde_residual(stationary, oscillator(), Equation::fokker_planck, TimeSense::forward, 8);
    out.push_back(make_report("fokker_planck_stationary_residual", res.front().max_abs(), 1e-9, {{"stencil_order", 8.0}}));
}

void process_suite(Reports& out, std::uint64_t seed) {
    const DiffusionSpec spec = oscillator();
    constexpr double lag = 1e-2;
    PathRequest fwd{{1.0, 0.0}, lag, 1e-3, Direction::forward, 1};
    PathRequest bwd{{1.0, 0.0}, -lag, 1e-3, Direction::backward, 1};
    const Ensemble ef = simulate_ensemble(spec, fwd, 100000, sub_seed(seed, 1));
    const Ensemble eb = simulate_ensemble(spec, bwd, 100000, sub_seed(seed, 2));

    const Estimate vp = estimate_drift(ef, lag, Direction::forward);
    out.push_back(make_report("forward_drift", std::abs(vp.value + 1.0), std::max(3.0 * vp.std_error, 0.02),
                              {{"estimate", vp.value}, {"std_error", vp.std_error}}));
    const Estimate vm = estimate_drift(eb, lag, Direction::backward);
    out.push_back(make_report("backward_drift", std::abs(vm.value - 1.0), std::max(3.0 * vm.std_error, 0.02),
                              {{"estimate", vm.value}, {"std_error", vm.std_error}}));
    const Estimate wf = estimate_diffusion(ef, lag);
    out.push_back(make_report("diffusion", std::abs(wf.value - 0.5), std::max(3.0 * wf.std_error, 0.01),
                              {{"estimate", wf.value}, {"std_error", wf.std_error}}));
    const Estimate wb = estimate_diffusion(eb, lag);
    const double combined = std::hypot(wf.std_error, wb.std_error);
    out.push_back(make_report("diffusion_symmetry", std::abs(wf.value - wb.value), 3.0 * combined,
                              {{"forward", wf.value}, {"backward", wb.value}}));

    // one-step increment normality
    PathRequest one{{0.0, 0.0}, 1e-3, 1e-3, Direction::forward, 1};
    const Ensemble e1 = simulate_ensemble(spec, one, 100000, sub_seed(seed, 3));
    const double sd = std::sqrt(2.0 * spec.w * 1e-3);
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const auto& p : e1.paths) m1 += (p.states[1] - p.states[0] - spec.forward_drift(0.0, 0.0) * 1e-3) / sd;
    const auto n = static_cast<double>(e1.size());
    m1 /= n;
    for (const auto& p : e1.paths) {
        const double z = (p.states[1] - p.states[0] - spec.forward_drift(0.0, 0.0) * 1e-3) / sd - m1;
        m2 += z * z;
        m3 += z * z * z;
        m4 += z * z * z * z;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2) - 3.0;
    out.push_back(make_report("increment_normality", std::max(std::abs(skew) / 0.05, std::abs(kurt) / 0.1), 1.0,
                              {{"skewness", skew}, {"excess_kurtosis", kurt}}));

    const SamplePath rough = simulate_path(spec, {{0.0, 0.0}, 100.0, 1e-4, Direction::forward, 1}, sub_seed(seed, 4));
    const std::vector<double> lags{1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3};
    const QuadraticVariation qv = quadratic_variation_exponent(rough, lags);
    out.push_back(make_report("quadratic_variation_exponent", std::abs(qv.exponent - 1.0), 0.1, {{"exponent", qv.exponent}}));
    out.push_back(make_report("quadratic_variation_rate", std::abs(qv.qv_rate - 2.0 * spec.w) / (2.0 * spec.w), 0.05,
                              {{"qv_rate", qv.qv_rate}}));

    const SamplePath erg = simulate_path(spec, {{0.0, 0.0}, 2000.0, 1e-3, Direction::forward, 1}, sub_seed(seed, 5));
    auto x2 = ergodic_average(erg, [](double x) { return x * x; }, reference_grid());
    x2.check_name = "ergodic_second_moment";
    out.push_back(x2);
    auto x1 = ergodic_average(erg, [](double x) { return x; }, reference_grid());
    x1.check_name = "ergodic_mean";
    out.push_back(x1);
}

void nelson_suite(Reports& out) {
    FieldPair ground;
    ground.u = [](double x, double) { return -x; };
    ground.v = [](double, double) { return 0.0; };
    ground.derivatives = FieldDerivatives{[](double, double) { return -1.0; }, [](double, double) { return 0.0; },
                                          [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                                          {}, {}};
    const Grid1D grid(-6.0, 6.0, 384);
    const ModelConfig cfg;
    out.push_back(make_report("nelson_analytic", nelson_residuals(ground, cfg, grid, 0.0).max_abs(), 1e-12));
    ground.derivative_mode = DerivativeMode::finite_difference;
    out.push_back(make_report("nelson_finite_difference", nelson_residuals(ground, cfg, grid, 0.0).max_abs(), 1e-12));

    const DensityField p = sample_field(reference_grid(), 0.0, [](double x) { return stationary_density(x); });
    const Field u = [](double x, double) { return -x; };
    out.push_back(osmotic_residual(p, u, 0.5, [](double x, double) { return -x * stationary_density(x); }));
    auto fd = osmotic_residual(p, u, 0.5, 1e-3);
    fd.check_name = "osmotic_relation_fd";
    out.push_back(fd);
}

void measure_suite(Reports& out, std::uint64_t seed) {
    const ConditionedState prior(Anchor{0.0, 0.0});
    const ConditionedState updated = measurement_update(prior, Anchor{2.0, 1.0});
    const double near = region_probability(updated, {1.7, 2.3}, 1.01);
    out.push_back(make_report("measurement_concentration", 1.0 - near, 0.05, {{"mass", near}}));

    double forget = 0.0;
    for (double x : Grid1D(-4.0, 4.0, 64).nodes()) {
        forget = std::max(forget, std::abs(updated.density(x, 21.0) - stationary_density(x)));
    }
    out.push_back(make_report("measurement_stationary_limit", forget, 1e-6));

    const ConditionedState twice = measurement_update(measurement_update(prior, Anchor{-1.0, 0.5}), Anchor{2.0, 1.0});
    const ConditionedState stripped = twice.without_history();
    double diff = 0.0;
    for (double t : {1.01, 1.3, 3.0}) {
        diff = std::max(diff, std::abs(region_probability(twice, {-1.0, 0.5}, t) - region_probability(updated, {-1.0, 0.5}, t)));
        diff = std::max(diff, std::abs(region_probability(twice, {-1.0, 0.5}, t) - region_probability(stripped, {-1.0, 0.5}, t)));
    }
    out.push_back(make_report("markov_prediction_invariance", diff, 0.0));

    const double half = region_probability(prior, {-std::numeric_limits<double>::infinity(), 0.0}, 0.7);
    out.push_back(make_report("region_symmetry", std::abs(half - 0.5), 1e-8, {{"probability", half}}));

    const DiffusionSpec spec = oscillator();
    const Grid1D bins(-4.0, 4.0, 16);
    const Gate gate{1.0, {0.9, 1.1}};
    PathRequest req{{0.0, 0.0}, 2.0, 1e-3, Direction::forward, 100};
    const Ensemble from0 = simulate_ensemble(spec, req, 100000, sub_seed(seed, 6));
    req.anchor = {1.5, 0.0};
    const Ensemble from15 = simulate_ensemble(spec, req, 100000, sub_seed(seed, 7));
    auto m0 = markov_conditioning_test(from0, gate, 2.0, bins, oscillator_closed_kernel());
    m0.check_name = "markov_conditioning_x0=0";
    out.push_back(m0);
    auto m15 = markov_conditioning_test(from15, gate, 2.0, bins, oscillator_closed_kernel());
    m15.check_name = "markov_conditioning_x0=1.5";
    out.push_back(m15);
    out.push_back(markov_gate_comparison(from0, from15, gate, 2.0, bins));
}

}  // namespace

std::vector<std::string> known_suites() { return {"kernel", "pde", "process", "nelson", "measure", "all"}; }

bool is_known_suite(const std::string& suite) {
    const auto s = known_suites();
    return std::find(s.begin(), s.end(), suite) != s.end();
}

std::vector<VerificationReport> run_battery(const std::string& suite, std::uint64_t seed) {
    if (!is_known_suite(suite)) throw InvalidArgument("unknown suite '" + suite + "'");
    Reports out;
    const bool all = suite == "all";
    if (all || suite == "kernel") kernel_suite(out);
    if (all || suite == "pde") pde_suite(out);
    if (all || suite == "process") process_suite(out, seed);
    if (all || suite == "nelson") nelson_suite(out);
    if (all || suite == "measure") measure_suite(out, seed);
    return out;
}

}  // namespace sqm
