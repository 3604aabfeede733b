#pragma once

#include <span>
#include <string>
#include <vector>

#include "sqm/grid.hpp"
#include "sqm/process.hpp"

namespace sqm {

/// Crank-Nicolson with reflecting (zero-flux) boundaries; both are fixed.
struct SolverConfig {
    double dt = 1e-3;
    double delta_width = 3.0;  // delta profile standard deviation, in cells
};

struct SolverDiagnostics {
    std::string scheme = "crank-nicolson";
    double dx = 0.0;
    double dt = 0.0;
    double mass_drift_max = 0.0;
    double min_value = 0.0;
    long steps = 0;
};

struct Evolution {
    std::vector<DensityField> snapshots;
    SolverDiagnostics diagnostics;
};

inline constexpr double kInitialMassTolerance = 1e-8;
inline constexpr double kMassDriftTolerance = 1e-6;

/// Trapezoid mass of the field.
double mass(const DensityField& field);

/// Normalized Gaussian of width delta_width * dx centred on x0.
DensityField delta_profile(const Grid1D& grid, double x0, double delta_width, double time = 0.0);

/// Evolves a density under dp/dt = -d(v+ p)/dx + w d2p/dx2 from init.time() to
/// init.time() + tau_end. Snapshots are taken at the requested elapsed times
/// (rounded to the nearest step); the final state is always included.
Evolution evolve_kolmogorov_forward(const DiffusionSpec& spec, const DensityField& init, const SolverConfig& cfg,
                                    double tau_end, std::span<const double> snapshot_times = {});

/// Integrates dp/dt0 + v+ dp/dx0 + w d2p/dx0^2 = 0 from the terminal time
/// terminal.time() down to terminal.time() - tau_span. Snapshot times are
/// elapsed spans measured backward from the terminal time.
Evolution evolve_kolmogorov_backward(const DiffusionSpec& spec, const DensityField& terminal,
                                     const SolverConfig& cfg, double tau_span,
                                     std::span<const double> snapshot_times = {});

enum class Equation { fokker_planck, kolmogorov_1, kolmogorov_2 };
enum class TimeSense { forward, backward };

/// Residual of one snapshot; nodes outside [first_valid, last_valid] are zero
/// because the spatial stencil does not fit there.
struct ResidualField {
    DensityField field;
    std::size_t first_valid = 0;
    std::size_t last_valid = 0;

    double max_abs() const;
    /// Max |residual| over valid nodes with |x| <= radius.
    double max_abs_within(double radius) const;
};

/// Pointwise residuals of the selected equation at every interior snapshot,
/// by central differences in t and central differences of the given accuracy
/// order (2, 4, 6 or 8) in x.
///   fokker-planck / kolmogorov-2 (+/-): p_t + d(v± p)/dx ∓ w p_xx
///   kolmogorov-1 (+/-):                 p_t0 + v± p_x0 ± w p_x0x0
std::vector<ResidualField> pde_residual(std::span<const DensityField> sequence, const DiffusionSpec& spec,
                                        Equation equation, TimeSense sense, int stencil_order = 2);

std::string diagnostics_to_json(const SolverDiagnostics& diagnostics);
void write_snapshots_csv(std::ostream& out, std::span<const DensityField> snapshots);

}  // namespace sqm
