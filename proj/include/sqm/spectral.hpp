#pragma once

#include <span>
#include <vector>

#include "sqm/grid.hpp"
#include "sqm/report.hpp"

namespace sqm {

inline constexpr int kMaxHermiteOrder = 200;
inline constexpr int kDefaultSeriesTerms = 60;

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
double hermite_eval(int n, double x);
/// H_n'(x) = 2 n H_{n-1}(x).
double hermite_derivative(int n, double x);
/// H_n''(x) = 4 n (n-1) H_{n-2}(x).
double hermite_second_derivative(int n, double x);

/// H_n(x) / sqrt(2^n n!) for n = 0..out.size()-1, by the normalized recurrence.
void normalized_hermite(double x, std::span<double> out);

/// e^{-x^2} / sqrt(pi).
double stationary_density(double x);

struct SeriesValue {
    double value = 0.0;
    double last_term = 0.0;         // magnitude of the last retained term
    double truncation_bound = 0.0;  // bound on the omitted tail
};

/// Hermite-series transition density of the dimensionless oscillator,
/// truncated after `terms` modes (n = 0 .. terms-1).
SeriesValue transition_density_series(double x, double x0, double tau, int terms = kDefaultSeriesTerms);

/// Gaussian with mean x0 e^{-tau} and variance (1 - e^{-2 tau}) / 2.
double transition_density_closed(double x, double x0, double tau);

/// Zero-drift transition density: Gaussian with mean x0 and variance 2 w tau.
double heat_kernel(double x, double x0, double tau, double w);

/// Particular solution H_n(x0) e^{n t0} of the first (backward) Kolmogorov equation.
double kolmogorov1_mode(int n, double x0, double t0);
/// Particular solution e^{-x^2} H_n(x) e^{-n t} of the second (forward) Kolmogorov equation.
double kolmogorov2_mode(int n, double x, double t);

/// Series kernel anchored at (x0, t0).
struct SpectralKernel {
    int n_terms = kDefaultSeriesTerms;
    double x0 = 0.0;
    double t0 = 0.0;

    static constexpr double normalization() { return 0.56418958354775628695; }  // 1/sqrt(pi)
    SeriesValue operator()(double x, double t) const {
        return transition_density_series(x, x0, t - t0, n_terms);
    }
};

/// Residuals of the Hermite ODE, the G_n ODE and both Kolmogorov particular
/// solutions for mode n on the grid, using analytic derivatives.
VerificationReport mode_check(int n, const Grid1D& grid, double tolerance = 1e-9);

struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the weight e^{-x^2}.
GaussHermiteRule gauss_hermite(int n);

/// Largest |<H_m, H_n>| / sqrt(<H_m,H_m><H_n,H_n>) over m != n <= max_order, plus the
/// worst relative deviation of the diagonal from 2^n n! sqrt(pi).
VerificationReport hermite_orthogonality(int max_order, double tolerance = 1e-9);

}  // namespace sqm
