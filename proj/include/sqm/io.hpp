#pragma once

#include <functional>
#include <stdexcept>
#include <iosfwd>
#include <string>
#include <string_view>

namespace sqm {

/// Decimal text with 17 significant digits.
std::string format_double(double value);

/// Writes via a temporary sibling file and renames it into place; on failure
/// (exception from `writer` or an I/O error) nothing is left at `path`.
void write_file_atomically(const std::string& path, const std::function<void(std::ostream&)>& writer);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sqm
