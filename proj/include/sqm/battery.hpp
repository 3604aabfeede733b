#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqm/report.hpp"

namespace sqm {

/// Suites: kernel, pde, process, nelson, measure, all.
bool is_known_suite(const std::string& suite);
std::vector<std::string> known_suites();

std::vector<VerificationReport> run_battery(const std::string& suite, std::uint64_t seed);

}  // namespace sqm
