#include "sqm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqm/battery.hpp"
#include "sqm/errors.hpp"
#include "sqm/io.hpp"
#include "sqm/models.hpp"
#include "sqm/pde.hpp"
#include "sqm/process.hpp"
#include "sqm/spectral.hpp"

namespace sqm::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double parse_real(const std::string& text, const std::string& what) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    if (!text.empty() && text[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw UsageError(what + ": '" + text + "' is not a number");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("--grid: expected min:max:nodes, got '" + text + "'");
    GridSpec g;
    g.min = parse_real(parts[0], "--grid");
    g.max = parse_real(parts[1], "--grid");
    std::size_t nodes = 0;
    auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), nodes);
    if (ec != std::errc() || ptr != parts[2].data() + parts[2].size()) {
        throw UsageError("--grid: node count '" + parts[2] + "' is not an integer");
    }
    g.nodes = nodes;
    if (!std::isfinite(g.min) || !std::isfinite(g.max) || !(g.min < g.max)) {
        throw UsageError("--grid: needs finite min < max");
    }
    if (g.nodes < Grid1D::kMinCells + 1) {
        throw UsageError("--grid: needs at least " + std::to_string(Grid1D::kMinCells + 1) + " nodes");
    }
    return g;
}

Interval parse_region(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) throw UsageError("--region: expected a:b, got '" + text + "'");
    Interval r{parse_real(parts[0], "--region"), parse_real(parts[1], "--region")};
    if (!(r.a < r.b)) throw UsageError("--region: needs a < b");
    return r;
}

namespace {

struct RawOptions {
    std::string model = "oscillator";
    std::string format = "csv";
    std::string grid;
    std::string region;
    std::string direction = "forward";
    std::vector<std::string> then;
    std::string snapshots;
};

void add_common(CLI::App* sub, CommandRequest& req, RawOptions& raw) {
    sub->add_option("--model", raw.model, "oscillator | wiener")->check(CLI::IsMember({"oscillator", "wiener"}));
    sub->add_option("--config", req.config_path, "model config file (key=value: m, k, h, mode)");
    sub->add_option("--seed", req.seed, "random seed (default: $SQM_SEED or 0)")->envname("SQM_SEED");
    sub->add_option("--out", req.out, "output path (default: stdout)");
    sub->add_option("--format", raw.format, "csv | json (verify defaults to json)")->check(CLI::IsMember({"csv", "json"}));
}

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

void validate(CommandRequest& req, const RawOptions& raw, const std::set<std::string>& given) {
    req.model = raw.model == "wiener" ? Model::wiener : Model::oscillator;
    req.format = raw.format == "json" ? OutputFormat::json : OutputFormat::csv;
    if (!raw.grid.empty()) req.grid = parse_grid(raw.grid);
    if (!raw.region.empty()) req.region = parse_region(raw.region);
    req.direction = raw.direction == "backward" ? Direction::backward : Direction::forward;

    require(std::isfinite(req.x0), "--x0: must be finite");
    require(std::isfinite(req.t0), "--t0: must be finite");
    switch (req.subcommand) {
        case Subcommand::simulate:
            require(req.tau > 0.0 && std::isfinite(req.tau), "--tau: must be > 0");
            require(req.dt > 0.0 && std::isfinite(req.dt), "--dt: must be > 0");
            require(req.paths >= 1, "--paths: must be at least 1");
            require(req.record_every >= 1, "--record-every: must be at least 1");
            {
                const double steps = req.tau / (req.dt * req.record_every);
                require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps) && std::round(steps) >= 1,
                        "--tau: must be a positive multiple of --dt times --record-every");
            }
            break;
        case Subcommand::kernel:
            require(req.tau > 0.0 && std::isfinite(req.tau), "--tau: must be > 0 (the series needs tau > 0)");
            require(req.terms >= 1 && req.terms <= kMaxHermiteOrder + 1,
                    "--terms: must lie in [1, " + std::to_string(kMaxHermiteOrder + 1) + "]");
            require(req.method == "series" || req.method == "closed", "--method: must be series or closed");
            break;
        case Subcommand::pde:
            require(req.tau > 0.0 && std::isfinite(req.tau), "--tau: must be > 0");
            require(req.dt > 0.0 && std::isfinite(req.dt), "--dt: must be > 0");
            require(req.delta_width >= 2.0, "--delta-width: must be at least 2 cells");
            if (!raw.snapshots.empty()) {
                for (const auto& s : split(raw.snapshots, ',')) {
                    const double t = parse_real(s, "--snapshots");
                    require(t >= 0.0 && t <= req.tau, "--snapshots: times must lie in [0, tau]");
                    req.snapshots.push_back(t);
                }
            }
            {
                const double dx = (req.grid.max - req.grid.min) / static_cast<double>(req.grid.nodes - 1);
                const double sigma = req.delta_width * dx;
                require(req.x0 - req.grid.min >= 4.0 * sigma && req.grid.max - req.x0 >= 4.0 * sigma,
                        "--x0: must sit at least 4 delta widths inside the grid");
            }
            break;
        case Subcommand::verify:
            require(is_known_suite(req.suite), "--suite: unknown suite '" + req.suite + "'");
            break;
        case Subcommand::measure: {
            require(req.model == Model::oscillator, "--model: measure supports the oscillator only");
            require(req.method == "closed" || req.method == "series", "--kernel: must be closed or series");
            require(req.terms >= 1 && req.terms <= kMaxHermiteOrder + 1, "--terms: out of range");
            double last = req.t0;
            for (const auto& m : raw.then) {
                const auto parts = split(m, ',');
                require(parts.size() == 2, "--then: expected x,t, got '" + m + "'");
                Anchor a{parse_real(parts[0], "--then"), parse_real(parts[1], "--then")};
                require(std::isfinite(a.x) && std::isfinite(a.t), "--then: values must be finite");
                require(a.t >= last, "--then: measurement times must not decrease");
                last = a.t;
                req.measurements.push_back(a);
            }
            require(given.contains("--predict"), "--predict: required");
            require(req.predict > last, "--predict: must be later than the latest measurement");
            require(given.contains("--region"), "--region: required");
            break;
        }
    }
}

}  // namespace

ParseOutcome parse(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CommandRequest req;
    RawOptions raw;
    CLI::App app{"Diffusion-process simulation and verification toolkit", "sqm"};
    app.require_subcommand(1, 1);

    auto* simulate = app.add_subcommand("simulate", "simulate sample paths (CSV t,x or path,t,x)");
    add_common(simulate, req, raw);
    simulate->add_option("--x0", req.x0, "start position");
    simulate->add_option("--t0", req.t0, "start time");
    simulate->add_option("--tau", req.tau, "elapsed time to simulate");
    simulate->add_option("--dt", req.dt, "Euler-Maruyama step");
    simulate->add_option("--paths", req.paths, "number of paths");
    simulate->add_option("--record-every", req.record_every, "keep one state every N steps");
    simulate->add_option("--direction", raw.direction, "forward | backward")
        ->check(CLI::IsMember({"forward", "backward"}));
    simulate->add_option("--threads", req.threads, "worker threads (0 = all cores)");

    auto* kernel = app.add_subcommand("kernel", "evaluate the transition density on a grid (CSV x,x0,tau,p)");
    add_common(kernel, req, raw);
    kernel->add_option("--x0", req.x0, "anchor position");
    kernel->add_option("--tau", req.tau, "elapsed time (> 0)");
    kernel->add_option("--grid", raw.grid, "min:max:nodes");
    kernel->add_option("--terms", req.terms, "Hermite series terms");
    kernel->add_option("--method", req.method, "series | closed");

    auto* pde = app.add_subcommand("pde", "evolve a delta profile with Crank-Nicolson (CSV t,x,p)");
    add_common(pde, req, raw);
    pde->add_option("--x0", req.x0, "anchor position");
    pde->add_option("--tau", req.tau, "elapsed time");
    pde->add_option("--grid", raw.grid, "min:max:nodes");
    pde->add_option("--dt", req.dt, "time step");
    pde->add_option("--delta-width", req.delta_width, "initial width in cells");
    pde->add_option("--snapshots", raw.snapshots, "comma-separated elapsed times to record");
    pde->add_option("--diagnostics", req.diagnostics_path, "solver diagnostics JSON path");

    auto* verify = app.add_subcommand("verify", "run the verification battery (JSON report)");
    add_common(verify, req, raw);
    verify->add_option("--suite", req.suite, "kernel | pde | process | nelson | measure | all");

    auto* measure = app.add_subcommand("measure", "region probability after a sequence of measurements");
    add_common(measure, req, raw);
    measure->add_option("--x0", req.x0, "initial anchor position");
    measure->add_option("--t0", req.t0, "initial anchor time");
    measure->add_option("--then", raw.then, "measurement x,t (repeatable)");
    measure->add_option("--predict", req.predict, "prediction time");
    measure->add_option("--region", raw.region, "a:b (use -inf / inf)");
    measure->add_option("--kernel", req.method, "closed | series")->default_str("closed");
    measure->add_option("--terms", req.terms, "series terms");

    // CLI11 treats tokens like -6:6:241 or -inf:0 as flags; glue values that
    // start with '-' onto their option so they parse as values.
    std::vector<std::string> args;
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const std::string& a = argv[i];
        if (a.rfind("--", 0) == 0 && a.find('=') == std::string::npos && i + 1 < argv.size() &&
            argv[i + 1].size() > 1 && argv[i + 1][0] == '-' && argv[i + 1][1] != '-') {
            args.push_back(a + "=" + argv[i + 1]);
            ++i;
        } else {
            args.push_back(a);
        }
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return {std::nullopt, kExitOk};
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return {std::nullopt, kExitUsage};
    }

    auto* chosen = app.get_subcommands().front();
    if (chosen == simulate) req.subcommand = Subcommand::simulate;
    if (chosen == kernel) req.subcommand = Subcommand::kernel;
    if (chosen == pde) req.subcommand = Subcommand::pde;
    if (chosen == verify) req.subcommand = Subcommand::verify;
    if (chosen == measure) {
        req.subcommand = Subcommand::measure;
        if (req.method == "series" && chosen->count("--kernel") == 0) req.method = "closed";
    }

    std::set<std::string> given;
    for (const auto* opt : chosen->get_options()) {
        if (opt->count() > 0) given.insert(opt->get_name());
    }
    // the battery report is JSON unless csv is asked for
    if (req.subcommand == Subcommand::verify && !given.contains("--format")) raw.format = "json";
    try {
        validate(req, raw, given);
        if (req.config_path) load_model_config(*req.config_path);
    } catch (const std::exception& e) {
        err << "usage error: " << e.what() << "\n";
        return {std::nullopt, kExitUsage};
    }
    return {req, kExitOk};
}

namespace {

ModelConfig model_config(const CommandRequest& req) {
    return req.config_path ? load_model_config(*req.config_path) : ModelConfig{};
}

DiffusionSpec make_spec(const CommandRequest& req) {
    const ModelConfig cfg = model_config(req);
    return req.model == Model::wiener ? wiener_spec(cfg) : oscillator_spec(cfg);
}

Grid1D make_grid(const GridSpec& g) { return Grid1D(g.min, g.max, g.nodes - 1); }

// One record per row; each column is a (name, value) pair.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<bool> integral;  // columns printed as integers
};

void write_table(std::ostream& os, const Table& t, OutputFormat format) {
    if (format == OutputFormat::csv) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) os << ',';
                if (!t.integral.empty() && t.integral[c]) {
                    os << static_cast<long long>(row[c]);
                } else {
                    os << format_double(row[c]);
                }
            }
            os << '\n';
        }
        return;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json rec = nlohmann::json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!t.integral.empty() && t.integral[c]) {
                rec[t.columns[c]] = static_cast<long long>(row[c]);
            } else if (std::isfinite(row[c])) {
                rec[t.columns[c]] = row[c];
            } else {
                rec[t.columns[c]] = format_double(row[c]);
            }
        }
        arr.push_back(std::move(rec));
    }
    os << arr.dump(2) << '\n';
}

void emit(const CommandRequest& req, std::ostream& out, const std::function<void(std::ostream&)>& writer) {
    if (req.out) {
        write_file_atomically(*req.out, writer);
    } else {
        writer(out);
    }
}

int run_simulate(const CommandRequest& req, std::ostream& out) {
    const DiffusionSpec spec = make_spec(req);
    PathRequest pr;
    pr.anchor = {req.x0, req.t0};
    pr.horizon = req.direction == Direction::forward ? req.t0 + req.tau : req.t0 - req.tau;
    pr.dt = req.dt;
    pr.direction = req.direction;
    pr.record_every = req.record_every;
    const Ensemble ens = simulate_ensemble(spec, pr, req.paths, req.seed, req.threads);

    Table t;
    const bool single = ens.size() == 1;
    t.columns = single ? std::vector<std::string>{"t", "x"} : std::vector<std::string>{"path", "t", "x"};
    t.integral = single ? std::vector<bool>{false, false} : std::vector<bool>{true, false, false};
    for (std::size_t k = 0; k < ens.size(); ++k) {
        const auto& p = ens.paths[k];
        for (std::size_t i = 0; i < p.states.size(); ++i) {
            if (single) {
                t.rows.push_back({p.time_at(i), p.states[i]});
            } else {
                t.rows.push_back({static_cast<double>(k), p.time_at(i), p.states[i]});
            }
        }
    }
    emit(req, out, [&](std::ostream& os) { write_table(os, t, req.format); });
    return kExitOk;
}

int run_kernel(const CommandRequest& req, std::ostream& out) {
    const ModelConfig cfg = model_config(req);
    const Grid1D grid = make_grid(req.grid);
    Table t{{"x", "x0", "tau", "p"}, {}, {}};
    const bool physical = cfg.mode == UnitMode::physical;
    for (double x : grid.nodes()) {
        double p = 0.0;
        if (req.model == Model::wiener) {
            p = heat_kernel(x, req.x0, req.tau, diffusion_constant(cfg));
        } else {
            // dimensionless kernel with the Jacobian of the position rescaling
            double xs = x, x0s = req.x0, taus = req.tau, jac = 1.0;
            if (physical) {
                xs = rescale(cfg, x, Quantity::position, RescaleDirection::to_dimensionless);
                x0s = rescale(cfg, req.x0, Quantity::position, RescaleDirection::to_dimensionless);
                taus = rescale(cfg, req.tau, Quantity::time, RescaleDirection::to_dimensionless);
                jac = rescale(cfg, 1.0, Quantity::position, RescaleDirection::to_dimensionless);
            }
            p = jac * (req.method == "closed" ? transition_density_closed(xs, x0s, taus)
                                              : transition_density_series(xs, x0s, taus, req.terms).value);
        }
        t.rows.push_back({x, req.x0, req.tau, p});
    }
    emit(req, out, [&](std::ostream& os) { write_table(os, t, req.format); });
    return kExitOk;
}

int run_pde(const CommandRequest& req, std::ostream& out, std::ostream& err) {
    const DiffusionSpec spec = make_spec(req);
    const Grid1D grid = make_grid(req.grid);
    const DensityField init = delta_profile(grid, req.x0, req.delta_width, req.t0);
    const Evolution evo =
        evolve_kolmogorov_forward(spec, init, SolverConfig{req.dt, req.delta_width}, req.tau, req.snapshots);

    Table t{{"t", "x", "p"}, {}, {}};
    for (const auto& f : evo.snapshots) {
        for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({f.time(), grid.node(i), f[i]});
    }
    emit(req, out, [&](std::ostream& os) { write_table(os, t, req.format); });

    const std::string diag = diagnostics_to_json(evo.diagnostics);
    if (req.diagnostics_path) {
        write_file_atomically(*req.diagnostics_path, [&](std::ostream& os) { os << diag << '\n'; });
    } else {
        (req.out ? out : err) << diag << '\n';
    }
    return kExitOk;
}

int run_verify(const CommandRequest& req, std::ostream& out) {
    const auto reports = run_battery(req.suite, req.seed);
    emit(req, out, [&](std::ostream& os) {
        if (req.format == OutputFormat::json) {
            os << reports_to_json(reports) << '\n';
            return;
        }
        os << "check,metric,tolerance,passed\n";
        for (const auto& r : reports) {
            os << r.check_name << ',' << format_double(r.metric) << ',' << format_double(r.tolerance) << ','
               << (r.passed ? "true" : "false") << '\n';
        }
    });
    return all_passed(reports) ? kExitOk : kExitNumerical;
}

int run_measure(const CommandRequest& req, std::ostream& out) {
    const ModelConfig cfg = model_config(req);
    const bool physical = cfg.mode == UnitMode::physical;
    auto pos = [&](double x) {
        return physical && std::isfinite(x) ? rescale(cfg, x, Quantity::position, RescaleDirection::to_dimensionless) : x;
    };
    auto time = [&](double t) {
        return physical ? rescale(cfg, t, Quantity::time, RescaleDirection::to_dimensionless) : t;
    };
    KernelChoice kernel = ClosedFormKernel{};
    if (req.method == "series") kernel = SeriesKernel{req.terms};
    ConditionedState state(Anchor{pos(req.x0), time(req.t0)}, kernel);
    for (const auto& m : req.measurements) state = measurement_update(state, Anchor{pos(m.x), time(m.t)});
    const double prob = region_probability(state, Interval{pos(req.region.a), pos(req.region.b)}, time(req.predict));

    Table t{{"t", "a", "b", "probability"}, {{req.predict, req.region.a, req.region.b, prob}}, {}};
    emit(req, out, [&](std::ostream& os) { write_table(os, t, req.format); });
    return kExitOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    err << j.dump() << '\n';
}

}  // namespace

int run(const CommandRequest& req, std::ostream& out, std::ostream& err) {
    try {
        switch (req.subcommand) {
            case Subcommand::simulate: return run_simulate(req, out);
            case Subcommand::kernel: return run_kernel(req, out);
            case Subcommand::pde: return run_pde(req, out, err);
            case Subcommand::verify: return run_verify(req, out);
            case Subcommand::measure: return run_measure(req, out);
        }
    } catch (const NumericalError& e) {
        report_error(err, e.kind(), e.what());
        return kExitNumerical;
    } catch (const IoError& e) {
        report_error(err, "IoError", e.what());
        return kExitIo;
    } catch (const Error& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const ParseOutcome parsed = parse(argv, out, err);
    if (!parsed.request) return parsed.exit_code;
    return run(*parsed.request, out, err);
}

}  // namespace sqm::cli
