#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sqm {

/// Scalar field of position and time.
using Field = std::function<double(double x, double t)>;

enum class Direction { forward, backward };

struct Anchor {
    double x = 0.0;
    double t = 0.0;
};

/// One-dimensional diffusion Markov process described by its osmotic and
/// current velocities and a constant diffusion coefficient.
///
/// The forward drift is v + u and the backward drift is v - u.
struct DiffusionSpec {
    int dimension = 1;
    Field u_field;
    Field v_field;
    double w = 0.5;
    std::string label;

    double forward_drift(double x, double t) const { return v_field(x, t) + u_field(x, t); }
    double backward_drift(double x, double t) const { return v_field(x, t) - u_field(x, t); }
    double drift(Direction d, double x, double t) const {
        return d == Direction::forward ? forward_drift(x, t) : backward_drift(x, t);
    }

    /// Throws InvalidArgument unless w > 0, dimension == 1 and both fields are set.
    void validate() const;
};

DiffusionSpec make_diffusion_spec(Field u, Field v, double w, std::string label);

struct VelocityDecomposition {
    Field u;  // osmotic velocity, (v+ - v-) / 2
    Field v;  // current velocity, (v+ + v-) / 2
};

struct DriftPair {
    Field v_plus;
    Field v_minus;
};

VelocityDecomposition drift_decomposition(Field v_plus, Field v_minus);
DriftPair drift_merge(Field u, Field v);

/// A simulated trajectory. `dt` is the spacing of the recorded states; each
/// recorded step is integrated with `substeps` Euler-Maruyama steps.
struct SamplePath {
    double t0 = 0.0;
    double t1 = 0.0;
    double dt = 0.0;
    int substeps = 1;
    std::vector<double> states;
    std::uint64_t seed = 0;
    Direction direction = Direction::forward;

    double time_at(std::size_t i) const {
        const double step = static_cast<double>(i) * dt;
        return direction == Direction::forward ? t0 + step : t0 - step;
    }
    double duration() const { return direction == Direction::forward ? t1 - t0 : t0 - t1; }
};

struct PathRequest {
    Anchor anchor;
    double horizon = 1.0;  // absolute end time t1
    double dt = 1e-3;      // Euler-Maruyama step
    Direction direction = Direction::forward;
    int record_every = 1;  // keep one state every this many steps
};

/// States with |x| above this abort the path with NonFinitePath.
inline constexpr double kPathOverflow = 1e12;

SamplePath simulate_path(const DiffusionSpec& spec, const PathRequest& request, std::uint64_t seed);

/// SplitMix64-based derivation of the seed of path k.
std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t k);

struct Ensemble {
    std::vector<SamplePath> paths;
    std::uint64_t master_seed = 0;
    Anchor anchor;

    std::size_t size() const { return paths.size(); }
    double dt() const { return paths.front().dt; }
    Direction direction() const { return paths.front().direction; }
};

/// Simulates n_paths independent paths; path k uses sub_seed(master_seed, k).
/// `threads == 0` uses the hardware concurrency. Output does not depend on it.
Ensemble simulate_ensemble(const DiffusionSpec& spec, const PathRequest& request, std::size_t n_paths,
                           std::uint64_t master_seed, unsigned threads = 0);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

Estimate estimate_drift(const Ensemble& ensemble, double lag, Direction direction);
Estimate estimate_diffusion(const Ensemble& ensemble, double lag);

struct QuadraticVariation {
    double exponent = 0.0;  // slope of log E[(dx)^2] against log lag
    double qv_rate = 0.0;   // sum of squared increments / T at the finest lag
    std::vector<double> lags;
    std::vector<double> mean_square;
};

QuadraticVariation quadratic_variation_exponent(const SamplePath& path, std::span<const double> lags);

void write_path_csv(std::ostream& out, const SamplePath& path);
void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble);

}  // namespace sqm
