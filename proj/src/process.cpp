#include "sqm/process.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "sqm/errors.hpp"
#include "sqm/io.hpp"

namespace sqm {

void DiffusionSpec::validate() const {
    if (dimension != 1) throw InvalidArgument("only one-dimensional processes are supported");
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("diffusion coefficient w must be positive");
    if (!u_field || !v_field) throw InvalidArgument("diffusion spec needs both u and v fields");
}

DiffusionSpec make_diffusion_spec(Field u, Field v, double w, std::string label) {
    DiffusionSpec spec{1, std::move(u), std::move(v), w, std::move(label)};
    spec.validate();
    return spec;
}

VelocityDecomposition drift_decomposition(Field v_plus, Field v_minus) {
    Field u = [vp = v_plus, vm = v_minus](double x, double t) { return 0.5 * (vp(x, t) - vm(x, t)); };
    Field v = [vp = std::move(v_plus), vm = std::move(v_minus)](double x, double t) {
        return 0.5 * (vp(x, t) + vm(x, t));
    };
    return {std::move(u), std::move(v)};
}

DriftPair drift_merge(Field u, Field v) {
    Field plus = [u, v](double x, double t) { return v(x, t) + u(x, t); };
    Field minus = [u = std::move(u), v = std::move(v)](double x, double t) { return v(x, t) - u(x, t); };
    return {std::move(plus), std::move(minus)};
}

namespace {

struct StepPlan {
    std::size_t recorded_steps;
    double recorded_dt;
};

StepPlan plan_steps(const PathRequest& request) {
    if (!(request.dt > 0.0) || !std::isfinite(request.dt)) throw InvalidArgument("dt must be positive");
    if (request.record_every < 1) throw InvalidArgument("record_every must be at least 1");
    const double span = request.direction == Direction::forward ? request.horizon - request.anchor.t
                                                                : request.anchor.t - request.horizon;
    if (!(span > 0.0)) {
        throw InvalidArgument(request.direction == Direction::forward
                                  ? "forward paths need a horizon after the anchor time"
                                  : "backward paths need a horizon before the anchor time");
    }
    const double recorded_dt = request.dt * request.record_every;
    const double count = span / recorded_dt;
    const double rounded = std::round(count);
    if (rounded < 1.0 || std::abs(count - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw InvalidArgument("path span is not a multiple of dt * record_every");
    }
    return {static_cast<std::size_t>(rounded), recorded_dt};
}

SamplePath simulate_indexed(const DiffusionSpec& spec, const PathRequest& request, const StepPlan& plan,
                            std::uint64_t seed, std::size_t path_index) {
    SamplePath path;
    path.t0 = request.anchor.t;
    path.t1 = request.horizon;
    path.dt = plan.recorded_dt;
    path.substeps = request.record_every;
    path.seed = seed;
    path.direction = request.direction;
    path.states.resize(plan.recorded_steps + 1);

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double h = request.dt;
    const double sigma = std::sqrt(2.0 * spec.w * h);
    const bool forward = request.direction == Direction::forward;

    double x = request.anchor.x;
    path.states[0] = x;
    std::size_t step = 0;
    for (std::size_t r = 1; r <= plan.recorded_steps; ++r) {
        for (int s = 0; s < request.record_every; ++s, ++step) {
            const double t = forward ? path.t0 + static_cast<double>(step) * h
                                     : path.t0 - static_cast<double>(step) * h;
            const double drift = forward ? spec.forward_drift(x, t) : -spec.backward_drift(x, t);
            x += drift * h + sigma * normal(gen);
            if (!(std::abs(x) <= kPathOverflow)) throw NonFinitePath(path_index, step + 1, x);
        }
        path.states[r] = x;
    }
    return path;
}

}  // namespace

SamplePath simulate_path(const DiffusionSpec& spec, const PathRequest& request, std::uint64_t seed) {
    spec.validate();
    return simulate_indexed(spec, request, plan_steps(request), seed, 0);
}

std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t k) {
    std::uint64_t z = master_seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Ensemble simulate_ensemble(const DiffusionSpec& spec, const PathRequest& request, std::size_t n_paths,
                           std::uint64_t master_seed, unsigned threads) {
    if (n_paths < 1) throw InvalidArgument("an ensemble needs at least one path");
    spec.validate();
    const StepPlan plan = plan_steps(request);

    Ensemble ens;
    ens.master_seed = master_seed;
    ens.anchor = request.anchor;
    ens.paths.resize(n_paths);

    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_paths));

    // Each worker takes a strided slice and stops at its first failure, so the
    // smallest failing index across workers is the smallest failing index overall.
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::size_t> failed_at(workers, std::numeric_limits<std::size_t>::max());
    auto work = [&](unsigned id) {
        for (std::size_t k = id; k < n_paths; k += workers) {
            try {
                ens.paths[k] = simulate_indexed(spec, request, plan, sub_seed(master_seed, k), k);
            } catch (...) {
                failures[id] = std::current_exception();
                failed_at[id] = k;
                return;
            }
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
    }

    auto first = std::min_element(failed_at.begin(), failed_at.end());
    if (*first != std::numeric_limits<std::size_t>::max()) {
        std::rethrow_exception(failures[static_cast<std::size_t>(first - failed_at.begin())]);
    }
    return ens;
}

namespace {

std::size_t lag_index(const Ensemble& ensemble, double lag) {
    if (ensemble.size() < 2) throw InsufficientPaths("at least two paths are needed for a standard error");
    if (!(lag > 0.0)) throw InvalidArgument("lag must be positive");
    const double ratio = lag / ensemble.dt();
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw InvalidArgument("lag is not a multiple of the recorded dt");
    }
    const auto j = static_cast<std::size_t>(rounded);
    if (j >= ensemble.paths.front().states.size()) throw InvalidArgument("lag exceeds the simulated span");
    return j;
}

// Mean and standard error, accumulated in path order.
template <typename F>
Estimate sample_mean(const Ensemble& ensemble, F&& sample) {
    const auto n = static_cast<double>(ensemble.size());
    double sum = 0.0;
    for (const auto& p : ensemble.paths) sum += sample(p);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& p : ensemble.paths) {
        const double d = sample(p) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

Estimate estimate_drift(const Ensemble& ensemble, double lag, Direction direction) {
    const std::size_t j = lag_index(ensemble, lag);
    if (ensemble.direction() != direction) {
        throw InvalidArgument("drift direction does not match the ensemble direction");
    }
    const double sign = direction == Direction::forward ? 1.0 : -1.0;
    return sample_mean(ensemble, [&](const SamplePath& p) { return sign * (p.states[j] - p.states[0]) / lag; });
}

Estimate estimate_diffusion(const Ensemble& ensemble, double lag) {
    const std::size_t j = lag_index(ensemble, lag);
    return sample_mean(ensemble, [&](const SamplePath& p) {
        const double d = p.states[j] - p.states[0];
        return d * d / (2.0 * lag);
    });
}

QuadraticVariation quadratic_variation_exponent(const SamplePath& path, std::span<const double> lags) {
    std::vector<std::size_t> steps;
    for (double lag : lags) {
        const double ratio = lag / path.dt;
        const double rounded = std::round(ratio);
        if (!(lag > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
            throw InvalidArgument("quadratic variation lags must be positive multiples of the path dt");
        }
        steps.push_back(static_cast<std::size_t>(rounded));
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    if (steps.size() < 3) throw InvalidArgument("at least three distinct lags are needed");
    const std::size_t n = path.states.size();
    if (steps.back() >= n) throw InvalidArgument("lag exceeds the path length");

    QuadraticVariation qv;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t m : steps) {
        double ss = 0.0;
        for (std::size_t i = 0; i + m < n; ++i) {
            const double d = path.states[i + m] - path.states[i];
            ss += d * d;
        }
        const double mean_sq = ss / static_cast<double>(n - m);
        if (!(mean_sq > 0.0)) throw DegeneratePath("path has no increments at lag " + std::to_string(m));
        const double lag = static_cast<double>(m) * path.dt;
        qv.lags.push_back(lag);
        qv.mean_square.push_back(mean_sq);
        const double lx = std::log(lag), ly = std::log(mean_sq);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto k = static_cast<double>(steps.size());
    qv.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);

    const std::size_t m = steps.front();
    double sum_sq = 0.0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i + m < n; i += m) {
        const double d = path.states[i + m] - path.states[i];
        sum_sq += d * d;
        covered += m;
    }
    qv.qv_rate = sum_sq / (static_cast<double>(covered) * path.dt);
    return qv;
}

void write_path_csv(std::ostream& out, const SamplePath& path) {
    out << "t,x\n";
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        out << format_double(path.time_at(i)) << ',' << format_double(path.states[i]) << '\n';
    }
}

void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble) {
    out << "path,t,x\n";
    for (std::size_t k = 0; k < ensemble.paths.size(); ++k) {
        const auto& p = ensemble.paths[k];
        for (std::size_t i = 0; i < p.states.size(); ++i) {
            out << k << ',' << format_double(p.time_at(i)) << ',' << format_double(p.states[i]) << '\n';
        }
    }
}

}  // namespace sqm
