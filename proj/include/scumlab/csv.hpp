#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scum {

// 17 significant digits round-trip every double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : "NA"; }

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw std::invalid_argument("csv row width mismatch");
        rows_.push_back(std::move(cells));
    }

    [[nodiscard]] std::string str() const {
        std::ostringstream out;
        write_line(out, header_);
        for (const auto& r : rows_) write_line(out, r);
        return out.str();
    }

    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }

private:
    static void write_line(std::ostringstream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
            if (!quote) {
                out << cells[i];
                continue;
            }
            out << '"';
            for (char c : cells[i]) {
                if (c == '"') out << '"';
                out << c;
            }
            out << '"';
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace scum
