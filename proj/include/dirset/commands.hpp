#pragma once

// Command implementations behind the dirset CLI. Each returns the process
// exit code: 0 success, 1 user/input error, 2 numerical failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirset/baselines.hpp"
#include "dirset/csv.hpp"
#include "dirset/error.hpp"
#include "dirset/estimator.hpp"
#include "dirset/inference.hpp"
#include "dirset/simulate.hpp"
#include "dirset/synthetic.hpp"
#include "dirset/table_io.hpp"

namespace dirset {

namespace detail {

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// Column means within three standard errors of zero.
inline bool looks_mean_zero(const Matrix& x) {
    const Vector mean = column_means(x);
    const SymMatrix cov = sample_covariance(x);
    const double root_n = std::sqrt(static_cast<double>(x.rows()));
    for (std::size_t j = 0; j < x.cols(); ++j)
        if (std::abs(mean[j]) > 3.0 * std::sqrt(cov(j, j)) / root_n) return false;
    return true;
}

inline DirectionEstimate least_squares_for(const Dataset& data, Method method, bool force) {
    if (method == Method::NewUncentered && !force && !looks_mean_zero(data.x))
        throw InvalidArgument("new-uncentered assumes mean-zero covariates but some column means are "
                              "far from zero; use --method new or pass --force");
    return method == Method::NewUncentered ? estimate_uncentered(data) : estimate_centered(data);
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << text;
}

} // namespace detail

// ---- estimate ------------------------------------------------------------------

struct EstimateOptions {
    CsvDataset csv;
    Method method = Method::NewCentered;
    bool json = false;
    bool force = false; // allow new-uncentered on non-centered designs
    MaxScoreConfig ms;
};

struct EstimateReport {
    std::vector<std::string> names;
    std::size_t n = 0;
    DirectionEstimate estimate;
    std::optional<AsymptoticCovariance> covariance; // least-squares methods only
    std::vector<std::string> warnings;

    static constexpr double kLevel = 0.05;

    std::optional<Vector> standard_errors() const {
        if (!covariance) return std::nullopt;
        return covariance->standard_errors();
    }
};

inline EstimateReport make_estimate_report(const LoadedDataset& loaded, Method method, bool force = false,
                                           const MaxScoreConfig& ms = {}) {
    EstimateReport r;
    r.names = loaded.covariate_names;
    r.n = loaded.data.n();
    switch (method) {
    case Method::NewCentered:
    case Method::NewUncentered:
        r.estimate = detail::least_squares_for(loaded.data, method, force);
        try {
            r.covariance = method == Method::NewCentered ? covariance_centered(loaded.data, r.estimate)
                                                         : covariance_uncentered(loaded.data, r.estimate);
        } catch (const UnstableLambda& e) {
            r.warnings.push_back(std::string("standard errors unavailable: ") + e.what());
        }
        break;
    case Method::MaxScore: r.estimate = maximum_score(loaded.data, ms); break;
    case Method::Lmrc: r.estimate = lmrc(loaded.data); break;
    case Method::Probit: r.estimate = probit_mle(loaded.data); break;
    }
    if (r.covariance && r.covariance->rank != r.names.size() - 1)
        r.warnings.push_back("covariance rank " + std::to_string(r.covariance->rank) + " differs from p - 1");
    return r;
}

inline nlohmann::json to_json(const EstimateReport& r) {
    using nlohmann::json;
    json j;
    j["method"] = std::string(method_tag(r.estimate.method));
    j["n"] = r.n;
    j["p"] = r.names.size();
    j["covariates"] = r.names;
    j["direction"] = r.estimate.direction;
    j["lambda_hat"] = detail::json_number(r.estimate.lambda_hat);
    j["gamma_hat"] = detail::json_number(r.estimate.gamma_hat);
    j["raw_norm"] = detail::json_number(r.estimate.raw_norm);
    if (r.estimate.score) j["score"] = *r.estimate.score;
    if (r.estimate.iterations) j["iterations"] = *r.estimate.iterations;
    if (const auto se = r.standard_errors()) {
        const double crit = std::sqrt(chi_square_upper_quantile(EstimateReport::kLevel, 1));
        json rows = json::array();
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            const double t = (*se)[i] > 0.0 ? r.estimate.direction[i] / (*se)[i] : std::nan("");
            rows.push_back({{"name", r.names[i]},
                            {"estimate", r.estimate.direction[i]},
                            {"se", detail::json_number((*se)[i])},
                            {"t", detail::json_number(t)},
                            {"significant_0.05", std::isfinite(t) && std::abs(t) > crit}});
        }
        j["coefficients"] = rows;
        j["se_kind"] = "plug-in asymptotic SE";
        j["covariance_rank"] = r.covariance->rank;
    }
    j["warnings"] = r.warnings;
    return j;
}

inline void print_text(const EstimateReport& r, std::ostream& out) {
    out << "method: " << method_tag(r.estimate.method) << "   n = " << r.n << "   p = " << r.names.size() << '\n';
    const auto se = r.standard_errors();
    const double crit = std::sqrt(chi_square_upper_quantile(EstimateReport::kLevel, 1));
    std::size_t width = 9;
    for (const auto& nm : r.names) width = std::max(width, nm.size());
    out << std::left << std::setw(static_cast<int>(width)) << "covariate" << std::right << std::setw(11)
        << "direction" << std::setw(11) << "SE" << std::setw(10) << "T" << "  sig(0.05)\n";
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        out << std::left << std::setw(static_cast<int>(width)) << r.names[i] << std::right << std::setw(11)
            << detail::fmt(r.estimate.direction[i]);
        if (se) {
            const double t = r.estimate.direction[i] / (*se)[i];
            out << std::setw(11) << detail::fmt((*se)[i]) << std::setw(10) << detail::fmt(t, 2) << "  "
                << (std::abs(t) > crit ? "*" : "");
        } else {
            out << std::setw(11) << "NA" << std::setw(10) << "NA";
        }
        out << '\n';
    }
    if (is_least_squares(r.estimate.method)) {
        out << "lambda_hat = " << detail::fmt(r.estimate.lambda_hat, 6)
            << "   gamma_hat = " << detail::fmt(r.estimate.gamma_hat, 6) << '\n';
        if (se) out << "SE: plug-in asymptotic SE, sqrt(diag(Sigma_beta) / n)\n";
    }
    if (r.estimate.score) out << "score = " << *r.estimate.score << " of " << r.n << '\n';
    if (r.estimate.iterations) out << "Newton iterations = " << *r.estimate.iterations << '\n';
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

inline int cmd_estimate(const EstimateOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto loaded = load_dataset(opt.csv);
        const auto report = make_estimate_report(loaded, opt.method, opt.force, opt.ms);
        if (opt.json) out << to_json(report).dump(2) << '\n';
        else print_text(report, out);
        return 0;
    });
}

// ---- test ------------------------------------------------------------------------

struct TestOptions {
    CsvDataset csv;
    Vector beta0;
    std::vector<double> alphas{0.05};
    Method method = Method::NewCentered;
    bool json = false;
    bool force = false;
};

struct TestReport {
    std::vector<std::string> names;
    DirectionEstimate estimate;
    AsymptoticCovariance covariance;
    Vector beta0; // normalized
    WaldResult wald;
    std::vector<std::string> warnings;
};

inline TestReport make_test_report(const LoadedDataset& loaded, const TestOptions& opt) {
    if (!is_least_squares(opt.method))
        throw InvalidArgument("the Wald test is available for the new and new-uncentered methods only");
    const std::size_t p = loaded.data.p();
    if (opt.beta0.size() != p)
        throw InvalidNull("beta0 has " + std::to_string(opt.beta0.size()) + " entries but there are " +
                          std::to_string(p) + " covariates");
    TestReport r;
    r.names = loaded.covariate_names;
    const double len = norm2(opt.beta0);
    if (!(len > 0.0)) throw InvalidNull("beta0 must be nonzero");
    r.beta0 = normalized(opt.beta0);
    if (std::abs(len - 1.0) > 1e-8) r.warnings.push_back("beta0 was normalized to unit length");
    r.estimate = detail::least_squares_for(loaded.data, opt.method, opt.force);
    r.covariance = opt.method == Method::NewCentered ? covariance_centered(loaded.data, r.estimate)
                                                     : covariance_uncentered(loaded.data, r.estimate);
    r.wald = wald_test(r.estimate, r.covariance, r.beta0, opt.alphas);
    r.warnings.insert(r.warnings.end(), r.wald.warnings.begin(), r.wald.warnings.end());
    return r;
}

inline nlohmann::json to_json(const TestReport& r) {
    nlohmann::json j;
    j["method"] = std::string(method_tag(r.estimate.method));
    j["covariates"] = r.names;
    j["direction"] = r.estimate.direction;
    j["beta0"] = r.beta0;
    j["statistic"] = r.wald.statistic;
    j["dof"] = r.wald.dof;
    j["p_value"] = r.wald.p_value;
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& [alpha, reject] : r.wald.reject_at)
        decisions.push_back({{"alpha", alpha}, {"reject", reject}});
    j["decisions"] = decisions;
    j["covariance_rank"] = r.covariance.rank;
    j["warnings"] = r.warnings;
    return j;
}

inline void print_text(const TestReport& r, std::ostream& out) {
    out << "Wald test of H0: direction = beta0 (" << method_tag(r.estimate.method) << ")\n";
    out << "W* = " << detail::fmt(r.wald.statistic, 6) << "   dof = " << r.wald.dof
        << "   p-value = " << detail::fmt(r.wald.p_value, 6) << '\n';
    for (const auto& [alpha, reject] : r.wald.reject_at)
        out << "alpha = " << format_real(alpha) << ": " << (reject ? "reject" : "accept") << '\n';
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

inline int cmd_test(const TestOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto report = make_test_report(load_dataset(opt.csv), opt);
        if (opt.json) out << to_json(report).dump(2) << '\n';
        else print_text(report, out);
        return 0;
    });
}

// ---- simulate / reproduce ------------------------------------------------------

struct SimulateOptions {
    std::string config_path;
    std::string out_csv;
    std::string markdown_path; // defaults to out_csv with a .md suffix
    bool fixed_beta = false;
    std::optional<MixtureForm> mixture; // overrides the config when set
    std::optional<unsigned> threads; // DIRSET_THREADS when unset
};

namespace detail {

inline void apply_flags(std::vector<Scenario>& scenarios, bool fixed_beta, std::optional<MixtureForm> mixture) {
    for (auto& sc : scenarios) {
        sc.fixed_beta = sc.fixed_beta || fixed_beta;
        if (mixture) sc.mixture = *mixture;
    }
}

inline std::string markdown_path_for(const std::string& csv, const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    const auto dot = csv.rfind('.');
    const auto slash = csv.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? csv.substr(0, dot) : csv) + ".md";
}

} // namespace detail

inline SimulationTable simulate_config(const SimulateOptions& opt) {
    auto scenarios = parse_scenarios_json(read_file(opt.config_path));
    detail::apply_flags(scenarios, opt.fixed_beta, opt.mixture);
    return run_table(scenarios, opt.threads.value_or(resolve_threads()));
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto table = simulate_config(opt);
        std::ostringstream md;
        write_table_markdown(table, md);
        if (opt.out_csv.empty()) {
            out << md.str();
        } else {
            detail::write_file(opt.out_csv, table_csv(table));
            detail::write_file(detail::markdown_path_for(opt.out_csv, opt.markdown_path), md.str());
            out << "wrote " << table.cells.size() << " cells to " << opt.out_csv << '\n';
        }
        if (table.any_cell_fully_failed()) {
            err << "error: at least one cell failed in every repetition\n";
            return 2;
        }
        return 0;
    });
}

struct ReproduceOptions {
    std::string table = "table1";
    std::uint64_t seed = 1;
    int reps = 100;
    int ms_starts = 200;
    std::string out_csv;
    std::string markdown_path;
    bool fixed_beta = false;
    std::optional<MixtureForm> mixture; // overrides the config when set
    std::optional<unsigned> threads;
};

inline int cmd_reproduce(const ReproduceOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto scenarios = preset_scenarios(opt.table, opt.seed, opt.reps, opt.ms_starts);
        detail::apply_flags(scenarios, opt.fixed_beta, opt.mixture);
        auto table = run_table(scenarios, opt.threads.value_or(resolve_threads()));
        table.metadata.seed = opt.seed;
        std::ostringstream md;
        write_table_markdown(table, md, true);
        if (!opt.out_csv.empty()) detail::write_file(opt.out_csv, table_csv(table));
        if (!opt.markdown_path.empty()) detail::write_file(opt.markdown_path, md.str());
        out << md.str();
        return table.any_cell_fully_failed() ? 2 : 0;
    });
}

// ---- synthetic data ----------------------------------------------------------------

inline void write_dataset_csv(const SyntheticDataset& s, std::ostream& out) {
    out << s.response_name;
    for (const auto& nm : s.covariate_names) out << ',' << nm;
    out << '\n';
    for (std::size_t i = 0; i < s.data.n(); ++i) {
        out << format_real(s.data.y[i]);
        for (std::size_t j = 0; j < s.data.p(); ++j) out << ',' << format_real(s.data.x(i, j));
        out << '\n';
    }
}

inline int cmd_synth(const std::string& path, std::size_t n, std::uint64_t seed, std::ostream& out,
                     std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto s = make_export_dataset(n, seed);
        std::ostringstream csv;
        write_dataset_csv(s, csv);
        if (path.empty()) {
            out << csv.str();
        } else {
            detail::write_file(path, csv.str());
            out << "wrote " << n << " rows to " << path << "; generating direction:";
            for (double b : s.beta) out << ' ' << format_fixed(b);
            out << '\n';
        }
        return 0;
    });
}

} // namespace dirset
