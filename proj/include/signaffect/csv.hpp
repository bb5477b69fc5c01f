#pragma once

// Minimal RFC 4180 style reader/writer: comma separated, double-quote escaping,
// quoted fields may contain commas, quotes ("") and newlines.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "signaffect/error.hpp"

namespace signaffect::csv {

struct Row {
    std::size_t line = 0; ///< 1-based physical line where the row starts
    std::vector<std::string> fields;
};

inline std::vector<Row> read(std::string_view text) {
    std::vector<Row> rows;
    std::size_t i = 0, line = 1;
    // Skip a UTF-8 byte order mark.
    if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

    while (i < text.size()) {
        Row row;
        row.line = line;
        std::string field;
        bool in_quotes = false, field_was_quoted = false, row_done = false;
        while (i < text.size() && !row_done) {
            const char c = text[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                        continue;
                    }
                    in_quotes = false;
                } else {
                    if (c == '\n') ++line;
                    field.push_back(c);
                }
                ++i;
                continue;
            }
            switch (c) {
                case '"':
                    if (!field.empty() || field_was_quoted)
                        throw DataError("stray quote on line " + std::to_string(line));
                    in_quotes = field_was_quoted = true;
                    break;
                case ',':
                    row.fields.push_back(std::move(field));
                    field.clear();
                    field_was_quoted = false;
                    break;
                case '\r': break;
                case '\n':
                    ++line;
                    row_done = true;
                    break;
                default:
                    if (field_was_quoted)
                        throw DataError("text after closing quote on line " + std::to_string(line));
                    field.push_back(c);
            }
            ++i;
        }
        if (in_quotes) throw DataError("unterminated quoted field starting on line " + std::to_string(row.line));
        row.fields.push_back(std::move(field));
        const bool blank = row.fields.size() == 1 && row.fields[0].empty() && !field_was_quoted;
        if (!blank) rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos &&
        (field.empty() || (field.front() != ' ' && field.back() != ' ')))
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Appends one CSV line (with trailing newline) to `out`.
inline void write_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t record, std::string_view what) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || p != end)
        throw ParseError(record, "invalid " + std::string(what) + " '" + std::string(s) + "'");
    return v;
}

/// Shortest representation that round-trips to the same double.
inline std::string format_exact(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

/// Fixed-point text rounded half away from zero.
inline std::string format_fixed(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    const double rounded = std::round(v * scale) / scale;
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, rounded + 0.0, std::chars_format::fixed, decimals);
    return std::string(buf, p);
}

} // namespace signaffect::csv
