#pragma once

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "poolsight/errors.hpp"

namespace poolsight::csv {

/// Minimal CSV support: comma separator, double-quote quoting, no embedded
/// newlines. Sufficient for the file formats this project defines.
inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    int require_column(const std::string& name, const std::string& path) const {
        const int c = column(name);
        if (c < 0) throw DataError(path + ": missing required column '" + name + "'");
        return c;
    }
};

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    t.header = split_row(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_row(line);
        if (row.size() != t.header.size()) {
            throw DataError(path + ": row with " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    double v = 0.0;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc{} || r.ptr != e) return std::nullopt;
    return v;
}

/// Shortest representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        auto r = std::from_chars(buf, buf + std::strlen(buf), back);
        if (r.ec == std::errc{} && back == v) break;
    }
    return buf;
}

}  // namespace poolsight::csv
