#pragma once

#include <map>
#include <string>
#include <vector>

namespace sqm {

/// Named metric compared against a tolerance. `passed` is always metric <= tolerance.
struct VerificationReport {
    std::string check_name;
    double metric = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::map<std::string, double> details;
};

VerificationReport make_report(std::string name, double metric, double tolerance,
                               std::map<std::string, double> details = {});

bool all_passed(const std::vector<VerificationReport>& reports);

/// JSON array of {check, metric, tolerance, passed, details}.
std::string reports_to_json(const std::vector<VerificationReport>& reports);

}  // namespace sqm
