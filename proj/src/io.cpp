#include "sqm/io.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

#include <unistd.h>

namespace sqm {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_file_atomically(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    static std::atomic<unsigned> counter{0};
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);

    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
            writer(out);
            out.flush();
            if (!out) throw IoError("write to " + tmp.string() + " failed");
        }
        std::error_code ec;
        fs::rename(tmp, target, ec);
        if (ec) throw IoError("cannot move output into " + path + ": " + ec.message());
    } catch (...) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw;
    }
}

}  // namespace sqm
