#include "sqm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sqm/errors.hpp"

namespace sqm {

TransitionKernel oscillator_closed_kernel() {
    return [](double x, double x0, double tau) { return transition_density_closed(x, x0, tau); };
}

TransitionKernel oscillator_series_kernel(int terms) {
    return [terms](double x, double x0, double tau) { return transition_density_series(x, x0, tau, terms).value; };
}

TransitionKernel wiener_kernel(double w) {
    return [w](double x, double x0, double tau) { return heat_kernel(x, x0, tau, w); };
}

bool Interval::is_full_line() const { return std::isinf(a) && a < 0 && std::isinf(b) && b > 0; }

VerificationReport chapman_kolmogorov_gap(const TransitionKernel& kernel, double t0, double t1, double t2,
                                          const Grid1D& grid, CkSamples samples, double tolerance) {
    if (!(t0 < t1 && t1 < t2)) throw InvalidArgument("Chapman-Kolmogorov times must be strictly increasing");
    if (t1 - t0 < 0.25 || t2 - t1 < 0.25) throw InvalidArgument("Chapman-Kolmogorov gaps must be at least 0.25");
    if (samples.count < 1) throw InvalidArgument("need at least one sample per axis");

    std::vector<double> pts(static_cast<std::size_t>(samples.count));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = samples.count == 1 ? samples.lo
                                    : samples.lo + (samples.hi - samples.lo) * static_cast<double>(i) /
                                                       static_cast<double>(samples.count - 1);
    }
    const std::vector<double> mid = grid.nodes();
    // first[a][i] = p(mid_i, t1 | pts_a, t0); second[b][i] = p(pts_b, t2 | mid_i, t1)
    std::vector<std::vector<double>> first(pts.size(), std::vector<double>(mid.size()));
    std::vector<std::vector<double>> second(pts.size(), std::vector<double>(mid.size()));
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t i = 0; i < mid.size(); ++i) {
            first[a][i] = kernel(mid[i], pts[a], t1 - t0);
            second[a][i] = kernel(pts[a], mid[i], t2 - t1);
        }
    }
    double gap = 0.0, worst_x2 = 0.0, worst_x0 = 0.0;
    std::vector<double> product(mid.size());
    for (std::size_t b = 0; b < pts.size(); ++b) {
        for (std::size_t a = 0; a < pts.size(); ++a) {
            for (std::size_t i = 0; i < mid.size(); ++i) product[i] = second[b][i] * first[a][i];
            const double composed = trapezoid(grid, product);
            const double direct = kernel(pts[b], pts[a], t2 - t0);
            const double d = std::abs(composed - direct);
            if (d > gap) {
                gap = d;
                worst_x2 = pts[b];
                worst_x0 = pts[a];
            }
        }
    }
    return make_report("chapman_kolmogorov", gap, tolerance,
                       {{"gap1", t1 - t0}, {"gap2", t2 - t1}, {"dx", grid.dx()}, {"worst_x2", worst_x2},
                        {"worst_x0", worst_x0}});
}

HTheoremResult h_theorem_curve(const TransitionKernel& kernel, double x0, std::span<const double> tau_ladder,
                               const Grid1D& grid, double slope_tolerance) {
    if (tau_ladder.size() < 2) throw InvalidArgument("H-theorem ladder needs at least two times");
    for (std::size_t k = 0; k < tau_ladder.size(); ++k) {
        if (tau_ladder[k] < 0.25) throw InvalidArgument("H-theorem ladder times must be at least 0.25");
        if (k > 0 && !(tau_ladder[k] > tau_ladder[k - 1])) throw InvalidArgument("H-theorem ladder must increase");
    }
    HTheoremResult res;
    res.taus.assign(tau_ladder.begin(), tau_ladder.end());
    const std::vector<double> xs = grid.nodes();
    for (double tau : tau_ladder) {
        double d = 0.0;
        for (double x : xs) d = std::max(d, std::abs(kernel(x, x0, tau) - stationary_density(x)));
        res.distances.push_back(d);
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < res.taus.size(); ++k) {
        const double ly = std::log(res.distances[k]);
        sx += res.taus[k];
        sy += ly;
        sxx += res.taus[k] * res.taus[k];
        sxy += res.taus[k] * ly;
    }
    const auto n = static_cast<double>(res.taus.size());
    res.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    // Mode n decays as e^{-n tau} with amplitude proportional to H_n(x0).
    std::vector<double> h(kMaxHermiteOrder + 1);
    normalized_hermite(x0, h);
    res.expected_rate = 1;
    while (res.expected_rate < kMaxHermiteOrder && std::abs(h[static_cast<std::size_t>(res.expected_rate)]) < 1e-12) {
        ++res.expected_rate;
    }

    double worst_ratio = 0.0;
    for (std::size_t k = 1; k < res.distances.size(); ++k) {
        worst_ratio = std::max(worst_ratio, res.distances[k] / res.distances[k - 1]);
    }
    res.slope_report = make_report("h_theorem_slope_x0=" + std::to_string(x0),
                                   std::abs(res.slope + res.expected_rate), slope_tolerance,
                                   {{"x0", x0},
                                    {"slope", res.slope},
                                    {"expected_rate", static_cast<double>(res.expected_rate)},
                                    {"d_first", res.distances.front()},
                                    {"d_last", res.distances.back()}});
    // strictly decreasing <=> every ratio < 1
    res.monotone_report = make_report("h_theorem_monotone_x0=" + std::to_string(x0), worst_ratio,
                                      std::nextafter(1.0, 0.0), {{"x0", x0}, {"worst_ratio", worst_ratio}});
    return res;
}

VerificationReport ergodic_average(const SamplePath& path, const std::function<double(double)>& f,
                                   const Grid1D& grid, double tolerance) {
    if (path.duration() < kMinErgodicSpan) {
        throw PathTooShort("ergodic averages need a path of duration >= " + std::to_string(kMinErgodicSpan));
    }
    // left Riemann sum over the recorded steps
    const std::size_t n = path.states.size() - 1;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += f(path.states[i]);
    const double time_avg = sum / static_cast<double>(n);

    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < integrand.size(); ++i) {
        const double x = grid.node(i);
        integrand[i] = f(x) * stationary_density(x);
    }
    const double expectation = trapezoid(grid, integrand);
    return make_report("ergodic_average", std::abs(time_avg - expectation), tolerance,
                       {{"time_average", time_avg}, {"expectation", expectation}, {"duration", path.duration()}});
}

// --- conditioning ---------------------------------------------------------

ConditionedState::ConditionedState(Anchor anchor, KernelChoice kernel) : anchor_(anchor), kernel_(std::move(kernel)) {}

ConditionedState ConditionedState::without_history() const { return ConditionedState(anchor_, kernel_); }

double ConditionedState::density(double x, double t) const {
    const double tau = t - anchor_.t;
    if (std::holds_alternative<ClosedFormKernel>(kernel_)) return transition_density_closed(x, anchor_.x, tau);
    if (const auto* s = std::get_if<SeriesKernel>(&kernel_)) {
        return transition_density_series(x, anchor_.x, tau, s->terms).value;
    }
    throw InvalidArgument("pointwise density is not available for PDE kernels; use predict()");
}

namespace {

DensityField evolve_from_anchor(const PdeKernel& k, Anchor anchor, double t) {
    const double tau = t - anchor.t;
    if (!(tau > 0.0)) throw InvalidArgument("prediction time must follow the anchor time");
    const DensityField init = delta_profile(k.grid, anchor.x, k.config.delta_width, anchor.t);
    Evolution evo = evolve_kolmogorov_forward(k.spec, init, k.config, tau);
    return evo.snapshots.back();
}

}  // namespace

DensityField ConditionedState::predict(const Grid1D& grid, double t) const {
    if (const auto* k = std::get_if<PdeKernel>(&kernel_)) {
        const DensityField field = evolve_from_anchor(*k, anchor_, t);
        if (field.grid() == grid) return field;
        return sample_field(grid, t, [&](double x) { return field.interpolate(x); });
    }
    return sample_field(grid, t, [&](double x) { return density(x, t); });
}

ConditionedState measurement_update(const ConditionedState& state, Anchor measurement) {
    if (measurement.t < state.anchor().t) {
        throw TimeRegression("measurement at t=" + std::to_string(measurement.t) + " precedes the anchor at t=" +
                             std::to_string(state.anchor().t));
    }
    ConditionedState next(measurement, state.kernel());
    next.history_ = state.history();
    next.history_.push_back(state.anchor());
    return next;
}

namespace {

constexpr double kRegionReach = 12.0;
constexpr double kRegionSpacing = 1.0 / 256.0;

template <typename F>
double integrate(double a, double b, double spacing, F&& f) {
    if (!(b > a)) return 0.0;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / spacing)));
    const double h = (b - a) / static_cast<double>(n);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
    return s * h;
}

}  // namespace

double region_probability(const ConditionedState& state, Interval region, double t) {
    if (!(region.a <= region.b)) throw InvalidArgument("region needs a <= b");
    if (const auto* k = std::get_if<PdeKernel>(&state.kernel())) {
        const DensityField field = evolve_from_anchor(*k, state.anchor(), t);
        const double a = std::max(region.a, field.grid().x_min());
        const double b = std::min(region.b, field.grid().x_max());
        const double spacing = std::min(field.grid().dx(), kRegionSpacing);
        return integrate(a, b, spacing, [&](double x) { return field.interpolate(x); });
    }
    const double lo = std::min(state.anchor().x, 0.0) - kRegionReach;
    const double hi = std::max(state.anchor().x, 0.0) + kRegionReach;
    const double a = std::max(region.a, lo);
    const double b = std::min(region.b, hi);
    return integrate(a, b, kRegionSpacing, [&](double x) { return state.density(x, t); });
}

// --- Markov conditioning ----------------------------------------------------

namespace {

std::size_t time_index(const Ensemble& ens, double t) {
    if (ens.direction() != Direction::forward) throw InvalidArgument("gating needs a forward ensemble");
    const double ratio = (t - ens.anchor.t) / ens.dt();
    const double rounded = std::round(ratio);
    if (rounded < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw InvalidArgument("gate time is not on the recorded time lattice");
    }
    const auto i = static_cast<std::size_t>(rounded);
    if (i >= ens.paths.front().states.size()) throw InvalidArgument("gate time beyond the simulated span");
    return i;
}

}  // namespace

GatedHistogram gated_histogram(const Ensemble& ensemble, const Gate& gate, double t2, const Grid1D& grid) {
    if (!(t2 > gate.t1)) throw InvalidArgument("comparison time must follow the gate time");
    const std::size_t i1 = time_index(ensemble, gate.t1);
    const std::size_t i2 = time_index(ensemble, t2);

    GatedHistogram hist{grid, std::vector<double>(grid.n_cells(), 0.0), 0.0, 0.0, 0, 0.0};
    double mean_sum = 0.0;
    std::vector<std::size_t> counts(grid.n_cells(), 0);
    std::size_t below = 0, above = 0;
    for (const auto& p : ensemble.paths) {
        const double x1 = p.states[i1];
        if (x1 < gate.bin.a || x1 > gate.bin.b) continue;
        ++hist.n_gated;
        mean_sum += x1;
        const double x2 = p.states[i2];
        if (x2 < grid.x_min()) {
            ++below;
        } else if (x2 > grid.x_max()) {
            ++above;
        } else {
            auto j = static_cast<std::size_t>((x2 - grid.x_min()) / grid.dx());
            counts[std::min(j, grid.n_cells() - 1)]++;
        }
    }
    if (hist.n_gated < kMinGatedPaths) {
        throw GateTooNarrow("only " + std::to_string(hist.n_gated) + " paths pass the gate (need " +
                            std::to_string(kMinGatedPaths) + ")");
    }
    const auto n = static_cast<double>(hist.n_gated);
    for (std::size_t j = 0; j < counts.size(); ++j) hist.bin_probability[j] = static_cast<double>(counts[j]) / n;
    hist.below = static_cast<double>(below) / n;
    hist.above = static_cast<double>(above) / n;
    hist.gate_mean = mean_sum / n;
    return hist;
}

VerificationReport markov_conditioning_test(const Ensemble& ensemble, const Gate& gate, double t2,
                                            const Grid1D& grid, const TransitionKernel& kernel, double tolerance) {
    const GatedHistogram hist = gated_histogram(ensemble, gate, t2, grid);
    const bool full = gate.bin.is_full_line();
    const double from = full ? ensemble.anchor.x : hist.gate_mean;
    const double tau = full ? t2 - ensemble.anchor.t : t2 - gate.t1;
    auto p = [&](double x) { return kernel(x, from, tau); };

    const double cell_spacing = grid.dx() / 16.0;
    double l1 = 0.0, expected_noise = 0.0;
    const auto n = static_cast<double>(hist.n_gated);
    auto accumulate = [&](double observed, double reference) {
        l1 += std::abs(observed - reference);
        expected_noise += std::sqrt(std::max(reference * (1.0 - reference), 0.0) / n);
    };
    for (std::size_t j = 0; j < grid.n_cells(); ++j) {
        accumulate(hist.bin_probability[j], integrate(grid.node(j), grid.node(j + 1), cell_spacing, p));
    }
    const double reach = std::abs(from) + kRegionReach;
    accumulate(hist.below, integrate(std::min(grid.x_min(), -reach), grid.x_min(), kRegionSpacing, p));
    accumulate(hist.above, integrate(grid.x_max(), std::max(grid.x_max(), reach), kRegionSpacing, p));

    return make_report("markov_conditioning", l1, tolerance,
                       {{"n_gated", n},
                        {"gate_mean", hist.gate_mean},
                        {"tau", tau},
                        {"expected_sampling_l1", std::sqrt(2.0 / std::numbers::pi) * expected_noise}});
}

VerificationReport markov_gate_comparison(const Ensemble& a, const Ensemble& b, const Gate& gate, double t2,
                                          const Grid1D& grid, double sigma_factor) {
    const GatedHistogram ha = gated_histogram(a, gate, t2, grid);
    const GatedHistogram hb = gated_histogram(b, gate, t2, grid);
    const auto na = static_cast<double>(ha.n_gated);
    const auto nb = static_cast<double>(hb.n_gated);
    double l1 = 0.0, combined = 0.0;
    auto accumulate = [&](double pa, double pb) {
        l1 += std::abs(pa - pb);
        const double pooled = (pa * na + pb * nb) / (na + nb);
        combined += std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
    };
    for (std::size_t j = 0; j < grid.n_cells(); ++j) accumulate(ha.bin_probability[j], hb.bin_probability[j]);
    accumulate(ha.below, hb.below);
    accumulate(ha.above, hb.above);
    return make_report("markov_gate_comparison", l1, sigma_factor * combined,
                       {{"n_gated_a", na},
                        {"n_gated_b", nb},
                        {"gate_mean_a", ha.gate_mean},
                        {"gate_mean_b", hb.gate_mean},
                        {"combined_sampling_error", combined}});
}

// --- field relations --------------------------------------------------------

namespace {

VerificationReport osmotic_report(const DensityField& p, const Field& u_field, const std::vector<double>& d_pw,
                                  double tolerance, bool analytic) {
    const std::size_t n = p.values().size();
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double pu = p[i] * u_field(p.grid().node(i), p.time());
        worst = std::max(worst, std::abs(pu - d_pw[i]));
        scale = std::max(scale, std::abs(pu));
    }
    const double metric = scale > 0.0 ? worst / scale : worst;
    return make_report("osmotic_relation", metric, tolerance,
                       {{"max_abs_residual", worst}, {"max_abs_pu", scale}, {"dx", p.grid().dx()},
                        {"analytic_derivative", analytic ? 1.0 : 0.0}});
}

void require_positive_interior(const DensityField& p) {
    for (std::size_t i = 1; i + 1 < p.values().size(); ++i) {
        if (!(p[i] > 0.0)) {
            throw NonPositiveDensity("density is not strictly positive at x=" + std::to_string(p.grid().node(i)));
        }
    }
}

}  // namespace

VerificationReport osmotic_residual(const DensityField& p, const Field& u_field, double w, double tolerance) {
    require_positive_interior(p);
    const std::size_t n = p.values().size();
    const double dx = p.grid().dx();
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = w * (p[i + 1] - p[i - 1]) / (2.0 * dx);
    return osmotic_report(p, u_field, d, tolerance, false);
}

VerificationReport osmotic_residual(const DensityField& p, const Field& u_field, double /*w*/, const Field& d_pw_dx,
                                    double tolerance) {
    require_positive_interior(p);
    std::vector<double> d(p.values().size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = d_pw_dx(p.grid().node(i), p.time());
    return osmotic_report(p, u_field, d, tolerance, true);
}

ContinuityResult continuity_residual(std::span<const DensityField> sequence, const Field& v_field, double tolerance) {
    if (sequence.size() < 3) throw InsufficientSnapshots("continuity residual needs at least three snapshots");
    const Grid1D& grid = sequence.front().grid();
    const std::size_t n = grid.size();
    const double dx = grid.dx();
    ContinuityResult out;
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < sequence.size(); ++j) {
        const auto& cur = sequence[j];
        const double span = sequence[j + 1].time() - sequence[j - 1].time();
        if (span == 0.0) throw InvalidArgument("snapshots must have distinct times");
        std::vector<double> flux(n);
        for (std::size_t i = 0; i < n; ++i) flux[i] = cur[i] * v_field(grid.node(i), cur.time());
        std::vector<double> res(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            res[i] = (sequence[j + 1][i] - sequence[j - 1][i]) / span + (flux[i + 1] - flux[i - 1]) / (2.0 * dx);
            worst = std::max(worst, std::abs(res[i]));
        }
        out.residuals.push_back({DensityField(grid, std::move(res), cur.time()), 1, n - 2});
    }
    out.report = make_report("continuity", worst, tolerance,
                             {{"snapshots", static_cast<double>(sequence.size())}, {"dx", dx}});
    return out;
}

VerificationReport ground_state_consistency(const Grid1D& grid, double tolerance) {
    const double norm = 1.0 / std::pow(std::numbers::pi, 0.25);
    const std::vector<double> xs = grid.nodes();
    double deviation = 0.0, mode0 = 0.0;
    std::vector<double> squared(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double p = stationary_density(x);
        const double psi = norm * std::exp(-0.5 * x * x);
        deviation = std::max(deviation, std::abs(psi * psi - p) / p);
        const double root = std::sqrt(p);
        squared[i] = root * root;
        for (double tau : {0.25, 1.0, 5.0}) {
            mode0 = std::max(mode0, std::abs(transition_density_series(x, 0.7, tau, 1).value - p) / p);
        }
    }
    const double norm_error = std::abs(trapezoid(grid, squared) - 1.0);
    return make_report("ground_state_consistency", std::max({deviation, norm_error, mode0}), tolerance,
                       {{"density_deviation", deviation}, {"sqrt_norm_error", norm_error}, {"mode0_deviation", mode0}});
}

}  // namespace sqm
