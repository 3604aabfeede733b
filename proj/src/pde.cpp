#include "sqm/pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>

#include <json.hpp>

#include "sqm/errors.hpp"
#include "sqm/io.hpp"

namespace sqm {

double mass(const DensityField& field) { return trapezoid(field.grid(), field.values()); }

DensityField delta_profile(const Grid1D& grid, double x0, double delta_width, double time) {
    if (!(delta_width >= 2.0)) throw InvalidArgument("delta_width must be at least 2 cells");
    const double sigma = delta_width * grid.dx();
    if (x0 - grid.x_min() < 4.0 * sigma || grid.x_max() - x0 < 4.0 * sigma) {
        throw AnchorTooCloseToBoundary("anchor must sit at least 4 delta widths inside the grid");
    }
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z = (grid.node(i) - x0) / sigma;
        values[i] = std::exp(-0.5 * z * z);
    }
    const double m = trapezoid(grid, values);
    for (double& v : values) v /= m;
    return DensityField(grid, std::move(values), time);
}

namespace {

struct Tridiagonal {
    std::vector<double> lower, diag, upper;  // lower[0] and upper[n-1] unused

    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

    std::vector<double> apply(const std::vector<double>& p) const {
        const std::size_t n = p.size();
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * p[i];
            if (i > 0) s += lower[i] * p[i - 1];
            if (i + 1 < n) s += upper[i] * p[i + 1];
            out[i] = s;
        }
        return out;
    }
};

// Solves (I - c A) x = rhs by the Thomas algorithm.
std::vector<double> solve_shifted(const Tridiagonal& a, double c, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    std::vector<double> cp(n);
    double denom = 1.0 - c * a.diag[0];
    cp[0] = -c * a.upper[0] / denom;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        const double lo = -c * a.lower[i];
        denom = 1.0 - c * a.diag[i] - lo * cp[i - 1];
        cp[i] = i + 1 < n ? -c * a.upper[i] / denom : 0.0;
        rhs[i] = (rhs[i] - lo * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
    return rhs;
}

// Conservative operator for dp/dt = -d(a p)/dx + w p_xx on node control volumes
// with zero flux through both ends.
Tridiagonal forward_operator(const DiffusionSpec& spec, const Grid1D& grid, double t) {
    const std::size_t n = grid.size();
    const double dx = grid.dx();
    const double diff = spec.w / dx;
    std::vector<double> alpha(n - 1), beta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = spec.forward_drift(grid.node(i) + 0.5 * dx, t);
        alpha[i] = 0.5 * a + diff;  // flux F_{i+1/2} = alpha p_i + beta p_{i+1}
        beta[i] = 0.5 * a - diff;
    }
    Tridiagonal op(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double vol = (i == 0 || i + 1 == n) ? 0.5 * dx : dx;
        double d = 0.0;
        if (i + 1 < n) {
            d -= alpha[i];
            op.upper[i] = -beta[i] / vol;
        }
        if (i > 0) {
            d += beta[i - 1];
            op.lower[i] = alpha[i - 1] / vol;
        }
        op.diag[i] = d / vol;
    }
    return op;
}

// dp/ds = a p_x + w p_xx with s running backward in t0; Neumann ends.
Tridiagonal backward_operator(const DiffusionSpec& spec, const Grid1D& grid, double t0) {
    const std::size_t n = grid.size();
    const double dx = grid.dx();
    const double dd = spec.w / (dx * dx);
    Tridiagonal op(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double a = spec.forward_drift(grid.node(i), t0) / (2.0 * dx);
        op.lower[i] = dd - a;
        op.diag[i] = -2.0 * dd;
        op.upper[i] = dd + a;
    }
    op.diag[0] = -2.0 * dd;
    op.upper[0] = 2.0 * dd;
    op.lower[n - 1] = 2.0 * dd;
    op.diag[n - 1] = -2.0 * dd;
    return op;
}

struct StepSchedule {
    long steps;
    double dt;
    std::set<long> snapshots;
};

StepSchedule schedule(double span, double dt, std::span<const double> snapshot_times) {
    if (!(dt > 0.0)) throw InvalidArgument("solver dt must be positive");
    if (!(span > 0.0)) throw InvalidArgument("evolution span must be positive");
    double count = span / dt;
    long steps = std::llround(count);
    if (steps < 1 || std::abs(count - static_cast<double>(steps)) > 1e-9 * static_cast<double>(steps)) {
        steps = static_cast<long>(std::ceil(count));
    }
    StepSchedule s{steps, span / static_cast<double>(steps), {}};
    for (double t : snapshot_times) {
        const long k = std::llround(t / s.dt);
        if (k < 0 || k > steps) throw InvalidArgument("snapshot time outside the evolution span");
        s.snapshots.insert(k);
    }
    s.snapshots.insert(steps);
    return s;
}

double min_value(const std::vector<double>& p) { return *std::min_element(p.begin(), p.end()); }

}  // namespace

Evolution evolve_kolmogorov_forward(const DiffusionSpec& spec, const DensityField& init, const SolverConfig& cfg,
                                    double tau_end, std::span<const double> snapshot_times) {
    spec.validate();
    const double m0 = mass(init);
    if (std::abs(m0 - 1.0) > kInitialMassTolerance) {
        throw InvalidArgument("initial density must have unit mass (got " + format_double(m0) + ")");
    }
    const Grid1D& grid = init.grid();
    const StepSchedule plan = schedule(tau_end, cfg.dt, snapshot_times);

    Evolution evo;
    evo.diagnostics.dx = grid.dx();
    evo.diagnostics.dt = plan.dt;
    evo.diagnostics.steps = plan.steps;
    evo.diagnostics.mass_drift_max = std::abs(m0 - 1.0);
    evo.diagnostics.min_value = min_value(init.values());

    std::vector<double> p = init.values();
    if (plan.snapshots.contains(0)) evo.snapshots.emplace_back(grid, p, init.time());

    const double half = 0.5 * plan.dt;
    Tridiagonal op_now = forward_operator(spec, grid, init.time());
    for (long k = 1; k <= plan.steps; ++k) {
        const double t_next = init.time() + static_cast<double>(k) * plan.dt;
        Tridiagonal op_next = forward_operator(spec, grid, t_next);
        std::vector<double> rhs = op_now.apply(p);
        for (std::size_t i = 0; i < p.size(); ++i) rhs[i] = p[i] + half * rhs[i];
        p = solve_shifted(op_next, half, std::move(rhs));
        op_now = std::move(op_next);

        const double m = trapezoid(grid, p);
        if (!std::isfinite(m)) throw InstabilityError("forward solve produced non-finite values");
        const double drift = std::abs(m - 1.0);
        evo.diagnostics.mass_drift_max = std::max(evo.diagnostics.mass_drift_max, drift);
        if (drift > kMassDriftTolerance) throw MassDriftError(t_next, m);
        evo.diagnostics.min_value = std::min(evo.diagnostics.min_value, min_value(p));
        if (plan.snapshots.contains(k)) evo.snapshots.emplace_back(grid, p, t_next);
    }
    return evo;
}

Evolution evolve_kolmogorov_backward(const DiffusionSpec& spec, const DensityField& terminal,
                                     const SolverConfig& cfg, double tau_span,
                                     std::span<const double> snapshot_times) {
    spec.validate();
    const Grid1D& grid = terminal.grid();
    const StepSchedule plan = schedule(tau_span, cfg.dt, snapshot_times);

    Evolution evo;
    evo.diagnostics.dx = grid.dx();
    evo.diagnostics.dt = plan.dt;
    evo.diagnostics.steps = plan.steps;
    evo.diagnostics.min_value = min_value(terminal.values());

    std::vector<double> p = terminal.values();
    if (plan.snapshots.contains(0)) evo.snapshots.emplace_back(grid, p, terminal.time());

    const double half = 0.5 * plan.dt;
    Tridiagonal op_now = backward_operator(spec, grid, terminal.time());
    for (long k = 1; k <= plan.steps; ++k) {
        const double t0 = terminal.time() - static_cast<double>(k) * plan.dt;
        Tridiagonal op_next = backward_operator(spec, grid, t0);
        std::vector<double> rhs = op_now.apply(p);
        for (std::size_t i = 0; i < p.size(); ++i) rhs[i] = p[i] + half * rhs[i];
        p = solve_shifted(op_next, half, std::move(rhs));
        op_now = std::move(op_next);
        for (double v : p) {
            if (!std::isfinite(v)) throw InstabilityError("backward solve produced non-finite values");
        }
        evo.diagnostics.min_value = std::min(evo.diagnostics.min_value, min_value(p));
        if (plan.snapshots.contains(k)) evo.snapshots.emplace_back(grid, p, t0);
    }
    return evo;
}

double ResidualField::max_abs() const {
    double m = 0.0;
    for (std::size_t i = first_valid; i <= last_valid; ++i) m = std::max(m, std::abs(field[i]));
    return m;
}

double ResidualField::max_abs_within(double radius) const {
    double m = 0.0;
    for (std::size_t i = first_valid; i <= last_valid; ++i) {
        if (std::abs(field.grid().node(i)) <= radius) m = std::max(m, std::abs(field[i]));
    }
    return m;
}

namespace {

struct Stencil {
    std::vector<double> d1;  // coefficients for offsets -r..r, scaled by 1/dx
    std::vector<double> d2;  // scaled by 1/dx^2
    std::size_t radius;
};

Stencil central_stencil(int order) {
    switch (order) {
        case 2:
            return {{-0.5, 0.0, 0.5}, {1.0, -2.0, 1.0}, 1};
        case 4:
            return {{1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}, {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12}, 2};
        case 6:
            return {{-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60},
                    {1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90},
                    3};
        case 8:
            return {{1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280},
                    {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560},
                    4};
        default:
            throw InvalidArgument("stencil order must be 2, 4, 6 or 8");
    }
}

double apply(const std::vector<double>& coeffs, const std::vector<double>& f, std::size_t i, std::size_t r) {
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * f[i + k - r];
    return s;
}

}  // namespace

std::vector<ResidualField> pde_residual(std::span<const DensityField> sequence, const DiffusionSpec& spec,
                                        Equation equation, TimeSense sense, int stencil_order) {
    if (sequence.size() < 3) throw InsufficientSnapshots("time derivatives need at least three snapshots");
    spec.validate();
    const Grid1D& grid = sequence.front().grid();
    for (const auto& f : sequence) {
        if (!(f.grid() == grid)) throw InvalidArgument("all snapshots must share one grid");
    }
    const Stencil st = central_stencil(stencil_order);
    const std::size_t n = grid.size();
    if (n <= 2 * st.radius) throw InvalidArgument("grid too small for the stencil");
    const double dx = grid.dx();
    const double sign = sense == TimeSense::forward ? 1.0 : -1.0;
    const Direction drift_dir = sense == TimeSense::forward ? Direction::forward : Direction::backward;

    std::vector<ResidualField> out;
    for (std::size_t j = 1; j + 1 < sequence.size(); ++j) {
        const auto& prev = sequence[j - 1].values();
        const auto& cur = sequence[j].values();
        const auto& next = sequence[j + 1].values();
        const double t = sequence[j].time();
        const double span = sequence[j + 1].time() - sequence[j - 1].time();
        if (span == 0.0) throw InvalidArgument("snapshots must have distinct times");

        std::vector<double> drift(n);
        for (std::size_t i = 0; i < n; ++i) drift[i] = spec.drift(drift_dir, grid.node(i), t);
        std::vector<double> flux(n);
        for (std::size_t i = 0; i < n; ++i) flux[i] = drift[i] * cur[i];

        std::vector<double> res(n, 0.0);
        for (std::size_t i = st.radius; i + st.radius < n; ++i) {
            const double p_t = (next[i] - prev[i]) / span;
            const double p_xx = apply(st.d2, cur, i, st.radius) / (dx * dx);
            if (equation == Equation::kolmogorov_1) {
                const double p_x = apply(st.d1, cur, i, st.radius) / dx;
                res[i] = p_t + drift[i] * p_x + sign * spec.w * p_xx;
            } else {
                const double q_x = apply(st.d1, flux, i, st.radius) / dx;
                res[i] = p_t + q_x - sign * spec.w * p_xx;
            }
        }
        out.push_back({DensityField(grid, std::move(res), t), st.radius, n - 1 - st.radius});
    }
    return out;
}

std::string diagnostics_to_json(const SolverDiagnostics& d) {
    nlohmann::json j = {{"scheme", d.scheme},   {"dx", d.dx},       {"dt", d.dt},
                        {"mass_drift_max", d.mass_drift_max}, {"steps", d.steps}, {"min_value", d.min_value}};
    return j.dump(2);
}

void write_snapshots_csv(std::ostream& out, std::span<const DensityField> snapshots) {
    out << "t,x,p\n";
    for (const auto& f : snapshots) {
        const std::string t = format_double(f.time());
        for (std::size_t i = 0; i < f.values().size(); ++i) {
            out << t << ',' << format_double(f.grid().node(i)) << ',' << format_double(f[i]) << '\n';
        }
    }
}

}  // namespace sqm
