#include "sqm/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "sqm/errors.hpp"

namespace sqm {

double ModelConfig::omega() const {
    if (mode == UnitMode::dimensionless) return k > 0.0 ? 1.0 : 0.0;
    return std::sqrt(k / m);
}

void ModelConfig::validate() const {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("m must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h must be positive");
    if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("k must be non-negative");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError("invalid value for key '" + key + "': '" + text + "'");
    }
    return v;
}

}  // namespace

ModelConfig parse_model_config(std::istream& in) {
    ModelConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
        if (key == "m") {
            cfg.m = parse_number(key, value);
        } else if (key == "k") {
            cfg.k = parse_number(key, value);
        } else if (key == "h") {
            cfg.h = parse_number(key, value);
        } else if (key == "mode") {
            if (value == "physical") {
                cfg.mode = UnitMode::physical;
            } else if (value == "dimensionless") {
                cfg.mode = UnitMode::dimensionless;
            } else {
                throw ConfigError("invalid value for key 'mode': '" + value + "'");
            }
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read model config '" + path + "'");
    return parse_model_config(in);
}

double diffusion_constant(const ModelConfig& cfg) {
    cfg.validate();
    if (cfg.mode == UnitMode::dimensionless) return 0.5;
    return cfg.h / (4.0 * std::numbers::pi * cfg.m);
}

double rescale(const ModelConfig& cfg, double value, Quantity quantity, RescaleDirection direction) {
    cfg.validate();
    if (cfg.mode != UnitMode::physical) throw InvalidArgument("rescale needs a physical-mode config");
    if (!(cfg.k > 0.0)) throw InvalidArgument("rescale needs k > 0 to define omega");
    const double omega = cfg.omega();
    const double scale = quantity == Quantity::time ? omega : std::sqrt(2.0 * std::numbers::pi * cfg.m * omega / cfg.h);
    return direction == RescaleDirection::to_dimensionless ? value * scale : value / scale;
}

DiffusionSpec oscillator_spec(const ModelConfig& cfg) {
    cfg.validate();
    if (!(cfg.k > 0.0)) throw InvalidArgument("the oscillator needs k > 0");
    const double omega = cfg.omega();
    return make_diffusion_spec([omega](double x, double) { return -omega * x; },
                               [](double, double) { return 0.0; }, diffusion_constant(cfg), "oscillator");
}

DiffusionSpec wiener_spec(const ModelConfig& cfg) {
    return make_diffusion_spec([](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                               diffusion_constant(cfg), "wiener");
}

double NelsonResiduals::max_abs() const {
    double m = 0.0;
    for (double r : r1) m = std::max(m, std::abs(r));
    for (double r : r2) m = std::max(m, std::abs(r));
    return m;
}

namespace {

struct Sampled {
    std::vector<double> f, f_x, f_xx, f_t;
};

// Central second-order differences inside, one-sided second-order at the edges.
void grid_derivatives(const std::vector<double>& f, double h, std::vector<double>& d1, std::vector<double>& d2) {
    const std::size_t n = f.size();
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d1[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        d2[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
    d2[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
}

Sampled sample(const Field& f, const Field* fx, const Field* fxx, const Field* ft, const Grid1D& grid, double t,
               bool analytic) {
    Sampled s;
    const std::size_t n = grid.size();
    s.f.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.f[i] = f(grid.node(i), t);
    s.f_t.assign(n, 0.0);
    if (analytic) {
        s.f_x.resize(n);
        s.f_xx.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            s.f_x[i] = (*fx)(x, t);
            s.f_xx[i] = (*fxx)(x, t);
            if (ft != nullptr && *ft) s.f_t[i] = (*ft)(x, t);
        }
    } else {
        grid_derivatives(s.f, grid.dx(), s.f_x, s.f_xx);
        const double delta = grid.dx();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            s.f_t[i] = (f(x, t + delta) - f(x, t - delta)) / (2.0 * delta);
        }
    }
    return s;
}

}  // namespace

NelsonResiduals nelson_residuals(const FieldPair& fields, const ModelConfig& cfg, const Grid1D& grid, double t) {
    if (!fields.u || !fields.v) throw InvalidArgument("field pair needs both u and v");
    const bool analytic = fields.derivative_mode == DerivativeMode::analytic;
    if (analytic) {
        const auto& d = fields.derivatives;
        if (!d || !d->u_x || !d->u_xx || !d->v_x || !d->v_xx) {
            throw DerivativeUnavailable("analytic mode needs u_x, u_xx, v_x and v_xx");
        }
    }
    const FieldDerivatives* d = analytic ? &*fields.derivatives : nullptr;
    const Sampled u = sample(fields.u, d ? &d->u_x : nullptr, d ? &d->u_xx : nullptr, d ? &d->u_t : nullptr, grid, t,
                             analytic);
    const Sampled v = sample(fields.v, d ? &d->v_x : nullptr, d ? &d->v_xx : nullptr, d ? &d->v_t : nullptr, grid, t,
                             analytic);

    const double nu = diffusion_constant(cfg);
    const double omega2 = cfg.omega() * cfg.omega();
    const std::size_t n = grid.size();
    NelsonResiduals r;
    r.r1.resize(n);
    r.r2.resize(n);
    r.r1_diffusive.resize(n);
    r.r2_diffusive.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        r.r1_diffusive[i] = nu * v.f_xx[i];
        r.r2_diffusive[i] = -nu * u.f_xx[i];
        r.r1[i] = u.f_t[i] + u.f_x[i] * v.f[i] + u.f[i] * v.f_x[i] + r.r1_diffusive[i];
        r.r2[i] = v.f_t[i] + v.f[i] * v.f_x[i] - u.f[i] * u.f_x[i] + r.r2_diffusive[i] + omega2 * x;
    }
    return r;
}

}  // namespace sqm
