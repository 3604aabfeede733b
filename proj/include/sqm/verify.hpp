#pragma once

#include <functional>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "sqm/grid.hpp"
#include "sqm/pde.hpp"
#include "sqm/process.hpp"
#include "sqm/report.hpp"
#include "sqm/spectral.hpp"

namespace sqm {

/// p(x, t0 + tau | x0, t0) for a time-homogeneous process.
using TransitionKernel = std::function<double(double x, double x0, double tau)>;

TransitionKernel oscillator_closed_kernel();
TransitionKernel oscillator_series_kernel(int terms = kDefaultSeriesTerms);
TransitionKernel wiener_kernel(double w = 0.5);

struct Interval {
    double a = -std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();

    bool is_full_line() const;
};

// --- Chapman-Kolmogorov --------------------------------------------------

struct CkSamples {
    double lo = -3.0;
    double hi = 3.0;
    int count = 13;  // per axis
};

/// sup |∫ p(x2,t2|x1,t1) p(x1,t1|x0,t0) dx1 - p(x2,t2|x0,t0)| over a lattice of (x2, x0).
VerificationReport chapman_kolmogorov_gap(const TransitionKernel& kernel, double t0, double t1, double t2,
                                          const Grid1D& grid, CkSamples samples = {}, double tolerance = 1e-6);

// --- H-theorem -----------------------------------------------------------

struct HTheoremResult {
    std::vector<double> taus;
    std::vector<double> distances;  // sup_x |p(x,tau|x0) - stationary(x)|
    double slope = 0.0;             // least-squares slope of log distance
    int expected_rate = 1;          // slowest mode excited by x0
    VerificationReport slope_report;
    VerificationReport monotone_report;
};

HTheoremResult h_theorem_curve(const TransitionKernel& kernel, double x0, std::span<const double> tau_ladder,
                               const Grid1D& grid, double slope_tolerance = 0.2);

// --- ergodicity ----------------------------------------------------------

inline constexpr double kMinErgodicSpan = 500.0;

/// |time average of f along the path - ∫ f p_stationary dx|.
VerificationReport ergodic_average(const SamplePath& path, const std::function<double(double)>& f,
                                   const Grid1D& grid, double tolerance = 0.05);

// --- conditioning and measurement ----------------------------------------

struct ClosedFormKernel {};
struct SeriesKernel {
    int terms = kDefaultSeriesTerms;
};
struct PdeKernel {
    DiffusionSpec spec;
    Grid1D grid;
    SolverConfig config;
};
using KernelChoice = std::variant<ClosedFormKernel, SeriesKernel, PdeKernel>;

/// Knowledge of the particle after its most recent measurement. Predictions
/// use only the latest anchor; the history is kept for audit.
class ConditionedState {
public:
    explicit ConditionedState(Anchor anchor, KernelChoice kernel = ClosedFormKernel{});

    const Anchor& anchor() const { return anchor_; }
    const std::vector<Anchor>& history() const { return history_; }
    const KernelChoice& kernel() const { return kernel_; }

    ConditionedState without_history() const;

    /// Density of the position at time t > anchor().t, sampled on `grid`.
    DensityField predict(const Grid1D& grid, double t) const;
    /// Pointwise density; not available for PDE kernels.
    double density(double x, double t) const;

private:
    friend ConditionedState measurement_update(const ConditionedState&, Anchor);

    Anchor anchor_;
    std::vector<Anchor> history_;
    KernelChoice kernel_;
};

ConditionedState measurement_update(const ConditionedState& state, Anchor measurement);

/// P{x in [a, b] at time t | latest anchor}; infinite ends are allowed.
double region_probability(const ConditionedState& state, Interval region, double t);

// --- Markov conditioning on ensembles -------------------------------------

struct Gate {
    double t1 = 1.0;
    Interval bin;
};

inline constexpr std::size_t kMinGatedPaths = 1000;

struct GatedHistogram {
    Grid1D grid;
    std::vector<double> bin_probability;  // one entry per grid cell
    double below = 0.0;                   // fraction left of the grid
    double above = 0.0;                   // fraction right of the grid
    std::size_t n_gated = 0;
    double gate_mean = 0.0;  // mean position of the gated paths at t1
};

GatedHistogram gated_histogram(const Ensemble& ensemble, const Gate& gate, double t2, const Grid1D& grid);

/// L1 distance between the gated histogram at t2 and the kernel re-anchored at
/// (gate mean, t1); a full-line gate compares with the kernel from the ensemble anchor.
VerificationReport markov_conditioning_test(const Ensemble& ensemble, const Gate& gate, double t2,
                                            const Grid1D& grid, const TransitionKernel& kernel,
                                            double tolerance = 0.05);

/// L1 distance between two gated histograms against `sigma_factor` times their
/// combined sampling error (sum of per-bin standard errors of the difference).
VerificationReport markov_gate_comparison(const Ensemble& a, const Ensemble& b, const Gate& gate, double t2,
                                          const Grid1D& grid, double sigma_factor = 3.0);

// --- field relations ------------------------------------------------------

/// max |p u - d(p w)/dx| / max |p u| over interior nodes, with a central
/// difference derivative.
VerificationReport osmotic_residual(const DensityField& p, const Field& u_field, double w,
                                    double tolerance = 1e-9);
/// Same, with d(p w)/dx supplied analytically.
VerificationReport osmotic_residual(const DensityField& p, const Field& u_field, double w,
                                    const Field& d_pw_dx, double tolerance = 1e-9);

struct ContinuityResult {
    VerificationReport report;
    std::vector<ResidualField> residuals;  // dp/dt + d(p v)/dx, one per interior snapshot
};

ContinuityResult continuity_residual(std::span<const DensityField> sequence, const Field& v_field,
                                     double tolerance = 1e-9);

/// Compares the stationary density with the squared oscillator ground state.
VerificationReport ground_state_consistency(const Grid1D& grid, double tolerance = 1e-10);

}  // namespace sqm
