#include "sqm/report.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace sqm {

VerificationReport make_report(std::string name, double metric, double tolerance,
                               std::map<std::string, double> details) {
    VerificationReport r;
    r.check_name = std::move(name);
    r.metric = metric;
    r.tolerance = tolerance;
    r.passed = metric <= tolerance;  // NaN fails
    r.details = std::move(details);
    return r;
}

bool all_passed(const std::vector<VerificationReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
}

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string reports_to_json(const std::vector<VerificationReport>& reports) {
    auto arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json details = nlohmann::json::object();
        for (const auto& [k, v] : r.details) details[k] = number(v);
        arr.push_back({{"check", r.check_name},
                       {"metric", number(r.metric)},
                       {"tolerance", number(r.tolerance)},
                       {"passed", r.passed},
                       {"details", details}});
    }
    return arr.dump(2);
}

}  // namespace sqm
