#pragma once

// Columnar text tables. The first line holds the column names separated by
// single tabs; every following line holds one row of the same number of
// tab-separated numbers in shortest round-trip decimal form ("nan", "inf" and
// "-inf" for non-finite values). Lines end with '\n'. Series files are tables
// whose first column is named "time".

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "observables.hpp"
#include "textnum.hpp"

namespace mblz {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != header.size())
            throw FormatError("table: row has " + std::to_string(row.size()) + " values, header has " +
                              std::to_string(header.size()) + " columns");
        rows.push_back(std::move(row));
    }
    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw FormatError("table: no column '" + name + "'");
        const auto c = static_cast<std::size_t>(it - header.begin());
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    bool operator==(const Table&) const = default;
};

inline std::string format_table(const Table& t) {
    if (t.header.empty()) throw FormatError("table: no columns");
    std::string out;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        const auto& h = t.header[c];
        if (h.empty() || h.find_first_of("\t\n\r") != std::string::npos)
            throw FormatError("table: invalid column name '" + h + "'");
        out += (c ? "\t" : "") + h;
    }
    out += '\n';
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) throw FormatError("table: channel-count mismatch in row");
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out += '\t';
            out += format_double(r[c]);
        }
        out += '\n';
    }
    return out;
}

inline Table parse_table(std::string_view text) {
    Table t;
    std::size_t pos = 0;
    int lineno = 0;
    auto split = [](std::string_view line) {
        std::vector<std::string_view> f;
        std::size_t b = 0;
        while (true) {
            const auto tab = line.find('\t', b);
            f.push_back(line.substr(b, tab == std::string_view::npos ? std::string_view::npos : tab - b));
            if (tab == std::string_view::npos) break;
            b = tab + 1;
        }
        return f;
    };
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto fields = split(line);
        if (lineno == 1) {
            for (auto f : fields) {
                if (f.empty()) throw FormatError("table: empty column name in header");
                t.header.emplace_back(f);
            }
            continue;
        }
        if (line.empty()) throw FormatError("table: empty line " + std::to_string(lineno));
        if (fields.size() != t.header.size())
            throw FormatError("table: line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                              " values, header has " + std::to_string(t.header.size()) + " columns");
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto f : fields) {
            const auto v = parse_double(f);
            if (!v) throw FormatError("table: line " + std::to_string(lineno) + ": bad number '" + std::string(f) + "'");
            row.push_back(*v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw FormatError("table: missing header line");
    return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw FormatError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_table(const Table& t, const std::filesystem::path& path) { write_text(path, format_table(t)); }
inline Table read_table(const std::filesystem::path& path) { return parse_table(read_text(path)); }

inline Table series_table(const ObservableSeries& s) {
    Table t;
    t.header.push_back("time");
    for (const auto& n : s.names()) t.header.push_back(n);
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::vector<double> row{s.times()[k]};
        for (std::size_t c = 0; c < s.names().size(); ++c) row.push_back(s.channel(c)[k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline ObservableSeries table_series(const Table& t) {
    if (t.header.empty() || t.header.front() != "time") throw FormatError("series: first column must be 'time'");
    ObservableSeries s(std::vector<std::string>(t.header.begin() + 1, t.header.end()));
    for (const auto& r : t.rows) {
        try {
            s.append(r.front(), std::span<const double>(r.data() + 1, r.size() - 1));
        } catch (const std::invalid_argument& e) {
            throw FormatError(std::string("series: ") + e.what());
        }
    }
    return s;
}

inline std::string format_series(const ObservableSeries& s) { return format_table(series_table(s)); }
inline ObservableSeries parse_series(std::string_view text) { return table_series(parse_table(text)); }

inline void write_series(const ObservableSeries& s, const std::filesystem::path& path) { write_text(path, format_series(s)); }
inline ObservableSeries read_series(const std::filesystem::path& path) { return parse_series(read_text(path)); }

}  // namespace mblz
