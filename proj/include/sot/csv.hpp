#pragma once

#include "sot/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sot::csv {

/// One parsed CSV table: optional header names plus numeric rows.
struct Table {
    std::vector<std::string> header; // empty if the file had none
    std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        auto b = field.find_first_not_of(" \t\r");
        auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{}
                                             : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::optional<double> parse_number(const std::string& s) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    double value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

/// Reads a comma-separated file. Lines starting with '#' are comments.
/// A first row with any non-numeric field is taken as the header.
inline Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool first_content_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_line(line);
        if (fields.empty()) continue;

        std::vector<double> row;
        row.reserve(fields.size());
        bool numeric = true;
        bool any_numeric = false;
        for (const auto& f : fields) {
            auto v = parse_number(f);
            if (!v) {
                numeric = false;
                continue;
            }
            any_numeric = true;
            row.push_back(*v);
        }
        if (!numeric) {
            // A row of pure labels at the top is a header; a mixed row is
            // malformed data.
            if (first_content_row && !any_numeric) {
                table.header = fields;
                first_content_row = false;
                continue;
            }
            throw DataError("parse error at row " + std::to_string(lineno) +
                            " of " + path);
        }
        first_content_row = false;
        if (!table.rows.empty() && row.size() != table.rows.front().size())
            throw DataError("inconsistent column count at row " +
                            std::to_string(lineno) + " of " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Fixed numeric formatting so identical runs byte-reproduce their outputs.
inline std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct Writer {
    std::ofstream out;

    explicit Writer(const std::string& path) : out(path) {
        if (!out) throw DataError("cannot open output file: " + path);
    }

    void comment(const std::string& text) { out << "# " << text << "\n"; }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ",";
            out << fields[i];
        }
        out << "\n";
    }

    void numeric_row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out << ",";
            out << format_number(values[i]);
        }
        out << "\n";
    }
};

/// Writes a dense matrix row-major with a one-line dimension comment.
inline void write_matrix(const std::string& path, const Matrix& m,
                         const std::string& label = "matrix") {
    Writer w(path);
    w.comment(label + " " + std::to_string(m.rows()) + " x " +
              std::to_string(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row[static_cast<std::size_t>(j)] = m(i, j);
        w.numeric_row(row);
    }
}

/// FNV-1a over raw bytes; used for provenance headers.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace sot::csv
