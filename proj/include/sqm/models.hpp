#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sqm/grid.hpp"
#include "sqm/process.hpp"

namespace sqm {

enum class UnitMode { physical, dimensionless };

/// Physical parameters of a one-particle model. k == 0 means no restoring force.
struct ModelConfig {
    double m = 1.0;
    double k = 1.0;
    double h = 1.0;
    UnitMode mode = UnitMode::dimensionless;

    /// sqrt(k/m) in physical mode; 1 (oscillator) or 0 (k == 0) in dimensionless mode.
    double omega() const;
    void validate() const;
};

/// Parses `key=value` lines with keys m, k, h, mode. Blank lines and `#` comments are skipped.
ModelConfig parse_model_config(std::istream& in);
ModelConfig load_model_config(const std::string& path);

/// h / (4 pi m) in physical mode, 1/2 in dimensionless mode.
double diffusion_constant(const ModelConfig& cfg);

enum class Quantity { position, time };
enum class RescaleDirection { to_dimensionless, to_physical };

/// t' = omega t and x' = sqrt(2 pi m omega / h) x, or the inverse.
double rescale(const ModelConfig& cfg, double value, Quantity quantity, RescaleDirection direction);

/// Ground-state oscillator process: u = -omega x, v = 0, w = diffusion_constant(cfg).
DiffusionSpec oscillator_spec(const ModelConfig& cfg);
/// Free particle: u = v = 0.
DiffusionSpec wiener_spec(const ModelConfig& cfg);

enum class DerivativeMode { analytic, finite_difference };

/// Closed-form derivatives of a FieldPair. Missing time derivatives are zero.
struct FieldDerivatives {
    Field u_x, u_xx, v_x, v_xx;
    Field u_t, v_t;
};

struct FieldPair {
    Field u;
    Field v;
    DerivativeMode derivative_mode = DerivativeMode::analytic;
    std::optional<FieldDerivatives> derivatives;
};

struct NelsonResiduals {
    std::vector<double> r1;
    std::vector<double> r2;
    // nu-proportional parts of r1 and r2 (nu v_xx and -nu u_xx)
    std::vector<double> r1_diffusive;
    std::vector<double> r2_diffusive;

    double max_abs() const;
};

/// Residuals of the two Nelson equations for the force -omega^2 x:
///   r1 = u_t + (u v)_x + nu v_xx
///   r2 = v_t + v v_x - u u_x - nu u_xx + omega^2 x
NelsonResiduals nelson_residuals(const FieldPair& fields, const ModelConfig& cfg, const Grid1D& grid, double t);

}  // namespace sqm
