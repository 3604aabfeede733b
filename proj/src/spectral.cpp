#include "sqm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sqm/errors.hpp"

namespace sqm {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;
// Cramér's bound: |H_n(x)| e^{-x^2/2} <= K sqrt(2^n n!)
constexpr double kCramer = 1.086435;

void check_order(int n) {
    if (n < 0 || n > kMaxHermiteOrder) {
        throw OrderOutOfRange("Hermite order " + std::to_string(n) + " outside [0, " +
                              std::to_string(kMaxHermiteOrder) + "]");
    }
}

}  // namespace

double hermite_eval(int n, double x) {
    check_order(n);
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_derivative(int n, double x) {
    check_order(n);
    return n == 0 ? 0.0 : 2.0 * n * hermite_eval(n - 1, x);
}

double hermite_second_derivative(int n, double x) {
    check_order(n);
    return n < 2 ? 0.0 : 4.0 * n * (n - 1) * hermite_eval(n - 2, x);
}

void normalized_hermite(double x, std::span<double> out) {
    if (out.empty()) return;
    check_order(static_cast<int>(out.size()) - 1);
    out[0] = 1.0;
    if (out.size() == 1) return;
    out[1] = std::numbers::sqrt2 * x;
    for (std::size_t n = 1; n + 1 < out.size(); ++n) {
        const auto nd = static_cast<double>(n);
        out[n + 1] = x * std::sqrt(2.0 / (nd + 1.0)) * out[n] - std::sqrt(nd / (nd + 1.0)) * out[n - 1];
    }
}

double stationary_density(double x) { return kInvSqrtPi * std::exp(-x * x); }

SeriesValue transition_density_series(double x, double x0, double tau, int terms) {
    if (!(tau > 0.0)) throw SeriesDivergence("the series needs tau > 0 (tau = 0 is the delta limit)");
    if (terms < 1 || terms > kMaxHermiteOrder + 1) {
        throw OrderOutOfRange("series terms must lie in [1, " + std::to_string(kMaxHermiteOrder + 1) + "]");
    }
    double hx[kMaxHermiteOrder + 1];
    double hy[kMaxHermiteOrder + 1];
    const auto n_terms = static_cast<std::size_t>(terms);
    normalized_hermite(x, std::span(hx, n_terms));
    normalized_hermite(x0, std::span(hy, n_terms));

    const double rho = std::exp(-tau);
    const double weight = kInvSqrtPi * std::exp(-x * x);
    double sum = 0.0;
    double decay = 1.0;
    double last = 0.0;
    for (std::size_t n = 0; n < n_terms; ++n) {
        last = hx[n] * hy[n] * decay;
        sum += last;
        decay *= rho;
    }
    SeriesValue out;
    out.value = weight * sum;
    out.last_term = std::abs(weight * last);
    // decay now equals rho^terms, the factor of the first omitted mode
    out.truncation_bound = kInvSqrtPi * kCramer * kCramer * std::exp(0.5 * (x0 * x0 - x * x)) * decay / (1.0 - rho);
    return out;
}

double transition_density_closed(double x, double x0, double tau) {
    if (!(tau > 0.0)) throw SeriesDivergence("the closed-form kernel needs tau > 0");
    const double spread = -std::expm1(-2.0 * tau);  // 1 - e^{-2 tau}
    const double d = x - x0 * std::exp(-tau);
    return std::exp(-d * d / spread) / std::sqrt(std::numbers::pi * spread);
}

double heat_kernel(double x, double x0, double tau, double w) {
    if (!(tau > 0.0)) throw SeriesDivergence("the heat kernel needs tau > 0");
    if (!(w > 0.0)) throw InvalidArgument("the heat kernel needs w > 0");
    const double var = 2.0 * w * tau;
    const double d = x - x0;
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double kolmogorov1_mode(int n, double x0, double t0) { return hermite_eval(n, x0) * std::exp(n * t0); }

double kolmogorov2_mode(int n, double x, double t) { return std::exp(-x * x) * hermite_eval(n, x) * std::exp(-n * t); }

namespace {

// |residual| relative to the largest term magnitude; exact zeros stay zero.
double relative(double residual, std::initializer_list<double> terms) {
    double scale = 0.0;
    for (double t : terms) scale = std::max(scale, std::abs(t));
    if (scale == 0.0) return std::abs(residual);
    return std::abs(residual) / scale;
}

}  // namespace

VerificationReport mode_check(int n, const Grid1D& grid, double tolerance) {
    check_order(n);
    if (grid.x_min() < -6.0 || grid.x_max() > 6.0) throw InvalidArgument("mode_check grid must lie within |x| <= 6");

    double hermite_ode = 0.0, g_ode = 0.0, kolmogorov1 = 0.0, kolmogorov2 = 0.0;
    const double nd = n;
    for (double x : grid.nodes()) {
        const double H = hermite_eval(n, x);
        const double H1 = hermite_derivative(n, x);
        const double H2 = hermite_second_derivative(n, x);

        hermite_ode = std::max(hermite_ode, relative(H2 - 2.0 * x * H1 + 2.0 * nd * H, {H2, 2.0 * x * H1, 2.0 * nd * H}));

        const double e = std::exp(-x * x);
        const double G = e * H;
        const double G1 = e * (H1 - 2.0 * x * H);
        const double G2 = e * (H2 - 4.0 * x * H1 + (4.0 * x * x - 2.0) * H);
        g_ode = std::max(g_ode, relative(G2 + 2.0 * x * G1 + 2.0 * G + 2.0 * nd * G, {G2, 2.0 * x * G1, 2.0 * G, 2.0 * nd * G}));

        // f = H_n(x0) e^{n t0}:  f_t0 - x0 f_x0 + f_x0x0 / 2, evaluated at t0 = 0
        kolmogorov1 = std::max(kolmogorov1, relative(nd * H - x * H1 + 0.5 * H2, {nd * H, x * H1, 0.5 * H2}));

        // g = G_n(x) e^{-n t}:  g_t - (x g)_x - g_xx / 2, evaluated at t = 0
        const double g_t = -nd * G;
        const double flux = G + x * G1;
        kolmogorov2 = std::max(kolmogorov2, relative(g_t - flux - 0.5 * G2, {g_t, G, x * G1, 0.5 * G2}));
    }
    const double worst = std::max({hermite_ode, g_ode, kolmogorov1, kolmogorov2});
    return make_report("mode_check_n" + std::to_string(n), worst, tolerance,
                       {{"order", nd},
                        {"hermite_ode", hermite_ode},
                        {"g_ode", g_ode},
                        {"kolmogorov1_particular", kolmogorov1},
                        {"kolmogorov2_particular", kolmogorov2}});
}

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1 || n > kMaxHermiteOrder) throw OrderOutOfRange("Gauss-Hermite rule size out of range");
    GaussHermiteRule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = z;
        rule.nodes[hi] = -z;
        rule.weights[lo] = 2.0 / (pp * pp);
        rule.weights[hi] = rule.weights[lo];
    }
    return rule;
}

VerificationReport hermite_orthogonality(int max_order, double tolerance) {
    check_order(max_order);
    const GaussHermiteRule rule = gauss_hermite(max_order + 1);
    const auto size = static_cast<std::size_t>(max_order + 1);
    std::vector<std::vector<double>> h(size, std::vector<double>(rule.nodes.size()));
    for (std::size_t n = 0; n < size; ++n) {
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) h[n][i] = hermite_eval(static_cast<int>(n), rule.nodes[i]);
    }
    auto inner = [&](std::size_t m, std::size_t n) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * h[m][i] * h[n][i];
        return s;
    };
    std::vector<double> diag(size);
    double diagonal_error = 0.0;
    double norm = std::sqrt(std::numbers::pi);  // 2^n n! sqrt(pi)
    for (std::size_t n = 0; n < size; ++n) {
        if (n > 0) norm *= 2.0 * static_cast<double>(n);
        diag[n] = inner(n, n);
        diagonal_error = std::max(diagonal_error, std::abs(diag[n] - norm) / norm);
    }
    double off = 0.0;
    for (std::size_t m = 0; m < size; ++m) {
        for (std::size_t n = m + 1; n < size; ++n) {
            off = std::max(off, std::abs(inner(m, n)) / std::sqrt(diag[m] * diag[n]));
        }
    }
    return make_report("hermite_orthogonality", std::max(off, diagonal_error), tolerance,
                       {{"max_order", static_cast<double>(max_order)},
                        {"off_diagonal", off},
                        {"diagonal_error", diagonal_error},
                        {"rule_points", static_cast<double>(rule.nodes.size())}});
}

}  // namespace sqm
