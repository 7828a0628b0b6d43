#pragma once

// Serialization of simulation tables (CSV, markdown), scenario config JSON,
// and the bundled published reference values used for diffing.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dirset/csv.hpp"
#include "dirset/error.hpp"
#include "dirset/reference_data.hpp"
#include "dirset/simulate.hpp"

namespace dirset {

inline constexpr std::string_view kTableCsvHeader = "case,n,p,rho,method,mean_cos,se_cos,failures";

/// Shortest representation that parses back to the same double; NaN is "NA".
inline std::string format_real(double v) {
    if (std::isnan(v)) return "NA";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return ec == std::errc{} ? std::string(buf.data(), ptr) : std::string("NA");
}

inline std::string format_fixed(double v, int digits = 4) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline void write_table_csv(const SimulationTable& table, std::ostream& out) {
    out << kTableCsvHeader << '\n';
    for (const auto& c : table.cells) {
        out << case_name(c.scenario.case_id) << ',' << c.scenario.n << ',' << c.scenario.p << ','
            << format_real(c.scenario.rho) << ',' << method_tag(c.method) << ',' << format_real(c.mean_cos) << ','
            << format_real(c.se_cos) << ',' << c.failures << '\n';
    }
}

inline std::string table_csv(const SimulationTable& table) {
    std::ostringstream os;
    write_table_csv(table, os);
    return os.str();
}

/// Inverse of write_table_csv. Fields absent from the CSV (reps, seed) keep
/// their defaults.
inline SimulationTable read_table_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw ParseError("empty table CSV");
    std::string header;
    for (std::size_t j = 0; j < rows[0].size(); ++j) header += (j ? "," : "") + rows[0][j];
    if (header != kTableCsvHeader) throw ParseError("unexpected table header '" + header + "'");

    SimulationTable table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "row " + std::to_string(r + 1);
        if (row.size() != 8) throw ParseError(where + ": expected 8 fields");
        CellResult cell;
        const auto cs = parse_case(row[0]);
        if (!cs) throw ParseError(where + ", column 'case': unknown case '" + row[0] + "'");
        cell.scenario.case_id = *cs;
        auto number = [&](std::size_t j, const char* name) {
            if (row[j] == "NA") return std::numeric_limits<double>::quiet_NaN();
            const auto v = parse_real(row[j]);
            if (!v) throw ParseError(where + ", column '" + name + "': cannot parse '" + row[j] + "'");
            return *v;
        };
        cell.scenario.n = static_cast<std::size_t>(number(1, "n"));
        cell.scenario.p = static_cast<std::size_t>(number(2, "p"));
        cell.scenario.rho = number(3, "rho");
        const auto m = parse_method(row[4]);
        if (!m) throw ParseError(where + ", column 'method': unknown method '" + row[4] + "'");
        cell.method = *m;
        cell.scenario.estimators = {*m};
        cell.mean_cos = number(5, "mean_cos");
        cell.se_cos = number(6, "se_cos");
        cell.failures = static_cast<int>(number(7, "failures"));
        table.cells.push_back(std::move(cell));
    }
    return table;
}

/// Equality over the fields the CSV carries (NaN equals NaN).
inline bool same_csv_fields(const CellResult& a, const CellResult& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.scenario.case_id == b.scenario.case_id && a.scenario.n == b.scenario.n && a.scenario.p == b.scenario.p &&
           a.scenario.rho == b.scenario.rho && a.method == b.method && same(a.mean_cos, b.mean_cos) &&
           same(a.se_cos, b.se_cos) && a.failures == b.failures;
}

// ---- published reference values ------------------------------------------------

struct ReferenceValue {
    std::string table;
    Case case_id = Case::I;
    std::size_t n = 0;
    std::size_t p = 0;
    double rho = 0.0;
    Method method = Method::NewCentered;
    double mean_cos = 0.0;
    double se_cos = 0.0;
};

inline const std::vector<ReferenceValue>& reference_values() {
    static const std::vector<ReferenceValue> values = [] {
        std::vector<ReferenceValue> out;
        const auto rows = parse_csv(kReferenceCsv);
        for (const auto& row : rows) {
            if (row.empty() || row[0].starts_with('#') || row[0] == "table") continue;
            ReferenceValue v;
            v.table = row.at(0);
            v.case_id = parse_case(row.at(1)).value();
            v.n = static_cast<std::size_t>(parse_real(row.at(2)).value());
            v.p = static_cast<std::size_t>(parse_real(row.at(3)).value());
            v.rho = parse_real(row.at(4)).value();
            v.method = parse_method(row.at(5)).value();
            v.mean_cos = parse_real(row.at(6)).value();
            v.se_cos = parse_real(row.at(7)).value();
            out.push_back(std::move(v));
        }
        return out;
    }();
    return values;
}

inline std::optional<ReferenceValue> find_reference(Case c, std::size_t n, std::size_t p, double rho, Method m) {
    for (const auto& v : reference_values())
        if (v.case_id == c && v.n == n && v.p == p && std::abs(v.rho - rho) < 1e-9 && v.method == m) return v;
    return std::nullopt;
}

// ---- markdown ---------------------------------------------------------------------

namespace detail {

inline void write_markdown_rows(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
    auto line = [&](const std::vector<std::string>& r) {
        out << '|';
        for (std::size_t j = 0; j < r.size(); ++j) out << ' ' << std::setw(static_cast<int>(width[j])) << r[j] << " |";
        out << '\n';
    };
    line(rows.front());
    out << '|';
    for (std::size_t w : width) out << std::string(w + 1, '-') << ":|";
    out << '\n';
    for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
}

} // namespace detail

/// Aligned markdown table; with `compare_reference`, adds the published
/// values and the difference in mean cos where a matching cell exists.
inline void write_table_markdown(const SimulationTable& table, std::ostream& out, bool compare_reference = false) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"case", "n", "p", "rho", "method", "mean cos", "SE", "failures"};
    if (compare_reference) head.insert(head.end(), {"ref cos", "ref SE", "diff"});
    rows.push_back(head);
    for (const auto& c : table.cells) {
        std::vector<std::string> r{std::string(case_name(c.scenario.case_id)), std::to_string(c.scenario.n),
                                   std::to_string(c.scenario.p), format_real(c.scenario.rho),
                                   std::string(method_tag(c.method)), format_fixed(c.mean_cos),
                                   format_fixed(c.se_cos), std::to_string(c.failures)};
        if (compare_reference) {
            const auto ref = find_reference(c.scenario.case_id, c.scenario.n, c.scenario.p, c.scenario.rho, c.method);
            if (ref) {
                r.push_back(format_fixed(ref->mean_cos));
                r.push_back(format_fixed(ref->se_cos));
                r.push_back(std::isnan(c.mean_cos) ? "NA" : format_fixed(c.mean_cos - ref->mean_cos));
            } else {
                r.insert(r.end(), {"-", "-", "-"});
            }
        }
        rows.push_back(std::move(r));
    }
    detail::write_markdown_rows(out, rows);
    out << "\nseed " << table.metadata.seed << ", generated " << table.metadata.timestamp << ", dirset "
        << table.metadata.version << '\n';
}

// ---- scenario config ----------------------------------------------------------------

/// Scenario list from JSON: an array of objects with keys case, n, p, rho,
/// reps, seed, estimators; optional ms_starts, fixed_beta, mixture
/// (sum | mixture | mixture-sd), noise_scale. Errors name the offending field.
inline std::vector<Scenario> parse_scenarios_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw SchemaError("config must be a JSON array of scenario objects");
    if (doc.empty()) throw SchemaError("config lists no scenarios");

    static const std::vector<std::string> required{"case", "n", "p", "rho", "reps", "seed", "estimators"};
    static const std::vector<std::string> optional{"ms_starts", "fixed_beta", "mixture", "noise_scale"};

    std::vector<Scenario> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& obj = doc[i];
        const std::string at = "scenarios[" + std::to_string(i) + "]";
        if (!obj.is_object()) throw SchemaError(at + ": expected an object");
        for (const auto& [key, _] : obj.items())
            if (std::find(required.begin(), required.end(), key) == required.end() &&
                std::find(optional.begin(), optional.end(), key) == optional.end())
                throw SchemaError(at + "." + key + ": unknown field");
        for (const auto& key : required)
            if (!obj.contains(key)) throw SchemaError(at + "." + key + ": missing required field");

        auto positive_int = [&](const char* key) {
            const auto& v = obj[key];
            if (!v.is_number_integer() || v.get<long long>() < 1)
                throw SchemaError(at + "." + key + ": expected a positive integer");
            return v.get<long long>();
        };

        Scenario sc;
        if (!obj["case"].is_string()) throw SchemaError(at + ".case: expected a string");
        const auto cs = parse_case(obj["case"].get<std::string>());
        if (!cs)
            throw SchemaError(at + ".case: unknown case '" + obj["case"].get<std::string>() +
                              "' (expected I, II, III, C1, C2, C3 or C4)");
        sc.case_id = *cs;
        sc.n = static_cast<std::size_t>(positive_int("n"));
        sc.p = static_cast<std::size_t>(positive_int("p"));
        sc.reps = static_cast<int>(positive_int("reps"));
        if (!obj["rho"].is_number()) throw SchemaError(at + ".rho: expected a number");
        sc.rho = obj["rho"].get<double>();
        if (!(std::abs(sc.rho) < 1.0)) throw SchemaError(at + ".rho: must lie in (-1, 1)");
        if (!obj["seed"].is_number_unsigned() && !(obj["seed"].is_number_integer() && obj["seed"].get<long long>() >= 0))
            throw SchemaError(at + ".seed: expected a nonnegative integer");
        sc.seed = obj["seed"].get<std::uint64_t>();
        if (!obj["estimators"].is_array() || obj["estimators"].empty())
            throw SchemaError(at + ".estimators: expected a nonempty array of method names");
        sc.estimators.clear();
        for (const auto& e : obj["estimators"]) {
            const auto m = e.is_string() ? parse_method(e.get<std::string>()) : std::nullopt;
            if (!m)
                throw SchemaError(at + ".estimators: unknown method " + e.dump() +
                                  " (expected new, new-uncentered, ms, lmrc or probit)");
            sc.estimators.push_back(*m);
        }
        if (obj.contains("ms_starts")) sc.ms_starts = static_cast<int>(positive_int("ms_starts"));
        if (obj.contains("fixed_beta")) {
            if (!obj["fixed_beta"].is_boolean()) throw SchemaError(at + ".fixed_beta: expected a boolean");
            sc.fixed_beta = obj["fixed_beta"].get<bool>();
        }
        if (obj.contains("mixture")) {
            const auto f = obj["mixture"].is_string() ? parse_mixture_form(obj["mixture"].get<std::string>())
                                                      : std::nullopt;
            if (!f) throw SchemaError(at + ".mixture: expected \"sum\", \"mixture\" or \"mixture-sd\"");
            sc.mixture = *f;
        }
        if (obj.contains("noise_scale")) {
            if (!obj["noise_scale"].is_number() || obj["noise_scale"].get<double>() < 0.0)
                throw SchemaError(at + ".noise_scale: expected a nonnegative number");
            sc.noise_scale = obj["noise_scale"].get<double>();
        }
        if (sc.n <= sc.p) throw SchemaError(at + ".n: must exceed p");
        out.push_back(std::move(sc));
    }
    return out;
}

} // namespace dirset
