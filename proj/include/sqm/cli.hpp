#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sqm/verify.hpp"

namespace sqm::cli {

enum class Subcommand { simulate, kernel, pde, verify, measure };
enum class Model { oscillator, wiener };
enum class OutputFormat { csv, json };

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;

struct GridSpec {
    double min = -8.0;
    double max = 8.0;
    std::size_t nodes = 513;
};

struct CommandRequest {
    Subcommand subcommand = Subcommand::kernel;
    Model model = Model::oscillator;
    std::optional<std::string> config_path;
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    OutputFormat format = OutputFormat::csv;

    double x0 = 0.0;
    double t0 = 0.0;
    double tau = 1.0;
    GridSpec grid;
    int terms = 60;
    std::string method = "series";  // kernel: series | closed
    std::size_t paths = 1;
    double dt = 1e-3;
    int record_every = 1;
    Direction direction = Direction::forward;
    unsigned threads = 0;
    double delta_width = 3.0;
    std::vector<double> snapshots;
    std::optional<std::string> diagnostics_path;
    std::string suite = "all";
    std::vector<Anchor> measurements;
    double predict = 1.0;
    Interval region;
};

struct ParseOutcome {
    std::optional<CommandRequest> request;  // empty when help was shown or parsing failed
    int exit_code = kExitOk;
};

/// Parses argv (argv[0] is the program name). Usage text and diagnostics go to `out`/`err`.
ParseOutcome parse(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Executes a validated request. Returns the process exit code.
int run(const CommandRequest& request, std::ostream& out, std::ostream& err);

int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Parses `min:max:nodes`.
GridSpec parse_grid(const std::string& text);
/// Parses `a:b`, accepting -inf / inf.
Interval parse_region(const std::string& text);

}  // namespace sqm::cli
