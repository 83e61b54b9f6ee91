#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "glore/error.hpp"

namespace glore::tsv {

inline std::vector<std::string_view> split(std::string_view line, char sep = '\t') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("invalid number for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("invalid count for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

/// Calls `fn(fields, line_number)` for every non-empty line. Lines starting
/// with '#' are skipped. Each line must have exactly `columns` fields.
inline void for_each_record(const std::filesystem::path& path, std::size_t columns,
                            const std::function<void(const std::vector<std::string_view>&,
                                                     std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto fields = split(line);
        if (fields.size() != columns)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(columns) + " fields, got " +
                            std::to_string(fields.size()));
        try {
            fn(fields, lineno);
        } catch (const ParseError& e) {
            throw e.with_context(path.string() + ":" + std::to_string(lineno) + ": ");
        }
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw IoError("short write to " + path.string());
}

} // namespace glore::tsv
