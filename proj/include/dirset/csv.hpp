#pragma once

// RFC 4180 CSV reading and loading of estimation datasets from named columns.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dirset/error.hpp"
#include "dirset/estimator.hpp"

namespace dirset {

using CsvRow = std::vector<std::string>;

/// Parses RFC 4180 text: quoted fields, doubled quotes, CRLF or LF records.
/// A trailing newline does not produce an empty record.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false, was_quoted = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                    was_quoted = true;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
            continue;
        }
        switch (ch) {
        case '"':
            if (was_quoted || !field.empty())
                throw ParseError("line " + std::to_string(line) + ": stray quote inside field");
            in_quotes = true;
            break;
        case ',': end_field(); break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            ++line;
            break;
        case '\n':
            end_record();
            ++line;
            break;
        default:
            if (was_quoted)
                throw ParseError("line " + std::to_string(line) + ": characters after closing quote");
            field += ch;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field at end of input");
    if (was_quoted || !field.empty() || !row.empty()) end_record();
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Parses a finite real, surrounding blanks allowed.
inline std::optional<double> parse_real(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

struct CsvDataset {
    std::string path;
    std::string response_column;
    std::vector<std::string> covariate_columns; // empty: every column except the response
    bool header = true;
};

struct LoadedDataset {
    Dataset data;
    std::vector<std::string> covariate_names;
};

inline LoadedDataset load_dataset_text(std::string_view text, const CsvDataset& spec) {
    auto rows = parse_csv(text);
    std::erase_if(rows, [](const CsvRow& r) { return r.size() == 1 && r.front().empty(); });
    if (rows.empty()) throw ParseError("empty CSV input");

    std::vector<std::string> names;
    std::size_t first_data = 0;
    if (spec.header) {
        names = rows.front();
        first_data = 1;
    } else {
        for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("V" + std::to_string(j + 1));
    }
    auto column_index = [&](const std::string& name) {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return j;
        throw ParseError("column '" + name + "' not found");
    };

    const std::size_t response = column_index(spec.response_column);
    std::vector<std::string> covariates = spec.covariate_columns;
    if (covariates.empty())
        for (const auto& nm : names)
            if (nm != spec.response_column) covariates.push_back(nm);
    std::vector<std::size_t> cols;
    for (const auto& c : covariates) {
        if (c == spec.response_column)
            throw ParseError("column '" + c + "' is both the response and a covariate");
        cols.push_back(column_index(c));
    }
    if (cols.empty()) throw ParseError("no covariate columns selected");

    LoadedDataset out;
    out.covariate_names = covariates;
    const std::size_t n = rows.size() - first_data;
    out.data.x = Matrix(n, cols.size());
    out.data.y.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[first_data + r];
        const std::size_t record = first_data + r + 1; // 1-based, counting the header
        if (row.size() != names.size())
            throw ParseError("row " + std::to_string(record) + ": expected " + std::to_string(names.size()) +
                             " fields, found " + std::to_string(row.size()));
        auto cell = [&](std::size_t j) {
            const auto v = parse_real(row[j]);
            if (!v)
                throw ParseError("row " + std::to_string(record) + ", column '" + names[j] + "': cannot parse '" +
                                 row[j] + "' as a finite real");
            return *v;
        };
        out.data.y[r] = cell(response);
        for (std::size_t k = 0; k < cols.size(); ++k) out.data.x(r, k) = cell(cols[k]);
    }
    return out;
}

inline LoadedDataset load_dataset(const CsvDataset& spec) { return load_dataset_text(read_file(spec.path), spec); }

} // namespace dirset
