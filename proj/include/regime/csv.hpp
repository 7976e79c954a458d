#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "regime/error.hpp"

namespace regime::csv {

using Row = std::vector<std::string>;

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline Row split_line(std::string_view line) {
    Row out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

/// Reads every non-empty line; strips trailing '\r'.
inline std::vector<Row> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("FileNotFound", "cannot open '" + path.string() + "'");
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    return rows;
}

inline std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Shortest round-trip representation; identical bytes for identical doubles.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Fixed-point rendering for report tables.
inline std::string format_fixed(double v, int decimals) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    std::string out(buf, ptr);
    if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
    return out;
}

inline double parse_double(std::string_view text, const std::string& context) {
    double v = 0.0;
    auto first = text.data();
    auto last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && *(last - 1) == ' ') --last;
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last || !std::isfinite(v)) {
        throw data_error("UnparsableNumber", "cannot parse '" + std::string(text) + "' in " + context);
    }
    return v;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw data_error("WriteFailed", "cannot write '" + path.string() + "'");
    }

    void row(const Row& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(fields[i]);
        }
        out_ << '\n';
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace regime::csv
