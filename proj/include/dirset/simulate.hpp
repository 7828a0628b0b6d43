#pragma once

// Monte Carlo scenario engine: X ~ N(0, AR(1)), beta uniform on the sphere
// (normalized U(-1,1)^p), and the binary (I-III) and continuous (C1-C4)
// response designs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dirset/baselines.hpp"
#include "dirset/error.hpp"
#include "dirset/estimator.hpp"
#include "dirset/normal.hpp"
#include "dirset/numkit.hpp"

namespace dirset {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Case { I, II, III, C1, C2, C3, C4 };

inline std::string_view case_name(Case c) {
    switch (c) {
    case Case::I: return "I";
    case Case::II: return "II";
    case Case::III: return "III";
    case Case::C1: return "C1";
    case Case::C2: return "C2";
    case Case::C3: return "C3";
    case Case::C4: return "C4";
    }
    return "?";
}

inline std::optional<Case> parse_case(std::string_view s) {
    for (Case c : {Case::I, Case::II, Case::III, Case::C1, Case::C2, Case::C3, Case::C4})
        if (case_name(c) == s) return c;
    return std::nullopt;
}

inline bool is_binary_case(Case c) { return c == Case::I || c == Case::II || c == Case::III; }

enum class ErrorLaw { StdNormal, Cauchy, NormalMixture };

/// Readings of the Case III law 0.4 N(-3, 1) + 0.6 N(2, 2). `Sum` is the
/// weighted sum of independent draws with sd 1 and 2, i.e. N(0, 1.6). The
/// two mixture forms pick a component with probability 0.4 / 0.6 and read the
/// second parameters as variances or as sds.
enum class MixtureForm { Sum, MixtureVariance, MixtureSd };

inline std::string_view mixture_form_tag(MixtureForm f) {
    switch (f) {
    case MixtureForm::Sum: return "sum";
    case MixtureForm::MixtureVariance: return "mixture";
    case MixtureForm::MixtureSd: return "mixture-sd";
    }
    return "?";
}

inline std::optional<MixtureForm> parse_mixture_form(std::string_view s) {
    for (MixtureForm f : {MixtureForm::Sum, MixtureForm::MixtureVariance, MixtureForm::MixtureSd})
        if (s == mixture_form_tag(f)) return f;
    return std::nullopt;
}

inline ErrorLaw error_law_for(Case c) {
    switch (c) {
    case Case::II: return ErrorLaw::Cauchy;
    case Case::III: return ErrorLaw::NormalMixture;
    default: return ErrorLaw::StdNormal;
    }
}

struct Scenario {
    Case case_id = Case::I;
    std::size_t n = 100;
    std::size_t p = 3;
    double rho = 0.0;
    int reps = 100;
    std::uint64_t seed = 0;
    std::vector<Method> estimators{Method::NewCentered};

    bool fixed_beta = false;  // one beta shared by all repetitions
    MixtureForm mixture = MixtureForm::Sum;
    double noise_scale = 1.0; // multiplies every error draw; 0 gives noiseless responses
    int ms_starts = 200;

    void validate() const {
        if (p < 1) throw InvalidArgument("scenario p must be >= 1");
        if (n <= p) throw InvalidArgument("scenario needs n > p");
        if (reps < 1) throw InvalidArgument("scenario reps must be >= 1");
        if (!(std::abs(rho) < 1.0)) throw InvalidArgument("scenario rho must lie in (-1, 1)");
        if (estimators.empty()) throw InvalidArgument("scenario lists no estimators");
        if (!(noise_scale >= 0.0)) throw InvalidArgument("noise_scale must be nonnegative");
        if (ms_starts < 1) throw InvalidArgument("ms_starts must be >= 1");
    }
};

// ---- random streams ------------------------------------------------------------

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ salt);
}

/// Independent generator for (seed, index); identical regardless of thread schedule.
inline Rng stream_for(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(mix_seed(seed, index, salt)),
                      static_cast<std::uint32_t>(mix_seed(seed, index, salt) >> 32),
                      static_cast<std::uint32_t>(salt)};
    return Rng(seq);
}

inline constexpr std::uint64_t kFixedBetaIndex = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kMaxScoreSalt = 0x4d53;

// ---- primitives ------------------------------------------------------------------

/// sigma_ij = rho^|i-j|
inline SymMatrix ar1_covariance(std::size_t p, double rho) {
    if (p < 1) throw InvalidArgument("ar1_covariance needs p >= 1");
    if (!(std::abs(rho) < 1.0)) throw InvalidArgument("ar1_covariance needs |rho| < 1");
    Matrix m(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const auto lag = static_cast<int>(i > j ? i - j : j - i);
            m(i, j) = lag == 0 ? 1.0 : std::pow(rho, lag);
        }
    return SymMatrix(std::move(m));
}

/// s_i ~ U(-1, 1) i.i.d., returned as s / ||s||.
template <class Urbg>
Vector draw_beta(std::size_t p, Urbg& rng) {
    if (p < 1) throw InvalidArgument("draw_beta needs p >= 1");
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector s(p);
    do {
        for (double& v : s) v = unif(rng);
    } while (norm2(s) < 1e-8);
    return normalized(s);
}

/// t(1) is drawn as a ratio of independent standard normals.
template <class Urbg>
Vector draw_error(ErrorLaw law, std::size_t size, Urbg& rng, MixtureForm form = MixtureForm::Sum) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector e(size);
    for (double& v : e) {
        switch (law) {
        case ErrorLaw::StdNormal: v = gauss(rng); break;
        case ErrorLaw::Cauchy: {
            const double num = gauss(rng);
            double den = gauss(rng);
            while (den == 0.0) den = gauss(rng);
            v = num / den;
            break;
        }
        case ErrorLaw::NormalMixture: {
            if (form == MixtureForm::Sum) {
                const double a = -3.0 + gauss(rng);
                const double b = 2.0 + 2.0 * gauss(rng);
                v = 0.4 * a + 0.6 * b;
                break;
            }
            const bool first = unif(rng) < 0.4;
            const double z = gauss(rng);
            if (first) v = -3.0 + z;
            else v = 2.0 + (form == MixtureForm::MixtureSd ? 2.0 : std::numbers::sqrt2) * z;
            break;
        }
        }
    }
    return e;
}

/// Rows i.i.d. N(0, L L').
template <class Urbg>
Matrix draw_gaussian_design(std::size_t n, const Matrix& chol, Urbg& rng) {
    const std::size_t p = chol.rows();
    std::normal_distribution<double> gauss;
    Matrix x(n, p);
    Vector z(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : z) v = gauss(rng);
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= j; ++k) s += chol(j, k) * z[k];
            x(i, j) = s;
        }
    }
    return x;
}

inline double apply_link(Case c, double index, double eps) {
    switch (c) {
    case Case::I:
    case Case::II:
    case Case::III: return index + eps > 0.0 ? 1.0 : 0.0;
    case Case::C1: return index + eps;
    case Case::C2: return normal_cdf(index) + eps;
    case Case::C3: // log(1 + exp(t)), overflow-safe
        return (index > 0.0 ? index + std::log1p(std::exp(-index)) : std::log1p(std::exp(index))) + eps;
    case Case::C4: return 1.0 / (1.0 + std::exp(-index)) + eps;
    }
    return 0.0;
}

struct Sample {
    Dataset data;
    Vector beta;
};

inline Sample generate_with_beta(const Scenario& sc, std::size_t rep, std::span<const double> beta) {
    sc.validate();
    if (beta.size() != sc.p) throw InvalidArgument("beta dimension does not match scenario p");
    Rng rng = stream_for(sc.seed, rep);
    (void)draw_beta(sc.p, rng); // the per-rep beta slot is consumed even when beta is fixed
    const Matrix chol = cholesky_factor(ar1_covariance(sc.p, sc.rho));
    Sample s;
    s.beta.assign(beta.begin(), beta.end());
    s.data.x = draw_gaussian_design(sc.n, chol, rng);
    Vector eps = draw_error(error_law_for(sc.case_id), sc.n, rng, sc.mixture);
    s.data.y.resize(sc.n);
    for (std::size_t i = 0; i < sc.n; ++i)
        s.data.y[i] = apply_link(sc.case_id, dot(s.data.x.row(i), s.beta), sc.noise_scale * eps[i]);
    return s;
}

/// Draws (beta, X, eps) from the substream of (seed, rep).
inline Sample generate(const Scenario& sc, std::size_t rep) {
    sc.validate();
    Vector beta;
    if (sc.fixed_beta) {
        Rng beta_rng = stream_for(sc.seed, kFixedBetaIndex);
        beta = draw_beta(sc.p, beta_rng);
    } else {
        Rng rng = stream_for(sc.seed, rep);
        beta = draw_beta(sc.p, rng);
    }
    return generate_with_beta(sc, rep, beta);
}

inline DirectionEstimate run_estimator(Method m, const Dataset& data, const Scenario& sc, std::size_t rep) {
    switch (m) {
    case Method::NewCentered: return estimate_centered(data);
    case Method::NewUncentered: return estimate_uncentered(data);
    case Method::Lmrc: return lmrc(data);
    case Method::Probit: return probit_mle(data);
    case Method::MaxScore: {
        MaxScoreConfig cfg;
        cfg.n_random_starts = sc.ms_starts;
        cfg.seed = mix_seed(sc.seed, rep, kMaxScoreSalt);
        return maximum_score(data, cfg);
    }
    }
    throw InvalidArgument("unknown method");
}

// ---- tables -------------------------------------------------------------------------

struct CellResult {
    Scenario scenario;
    Method method = Method::NewCentered;
    double mean_cos = std::numeric_limits<double>::quiet_NaN(); // NaN when every repetition failed
    double se_cos = std::numeric_limits<double>::quiet_NaN();   // sd across repetitions
    int failures = 0;
};

struct TableMetadata {
    std::uint64_t seed = 0;
    std::string timestamp;
    std::string version{kVersion};
};

struct SimulationTable {
    std::vector<CellResult> cells;
    TableMetadata metadata;

    bool any_cell_fully_failed() const {
        for (const auto& c : cells)
            if (c.failures >= c.scenario.reps) return true;
        return false;
    }
};

/// Threads from DIRSET_THREADS, defaulting to the hardware concurrency.
inline unsigned resolve_threads() {
    if (const char* env = std::getenv("DIRSET_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline bool same_cell_key(const Scenario& a, const Scenario& b) {
    return a.case_id == b.case_id && a.n == b.n && a.p == b.p && a.rho == b.rho;
}

/// Runs every (scenario, estimator) cell. Each repetition's data comes from
/// its own substream and every estimator of the scenario sees the same data;
/// results are reduced in repetition order after all work completes.
inline SimulationTable run_table(const std::vector<Scenario>& scenarios, unsigned threads = resolve_threads()) {
    if (scenarios.empty()) throw InvalidArgument("run_table needs at least one scenario");
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        scenarios[s].validate();
        for (std::size_t t = 0; t < s; ++t)
            if (same_cell_key(scenarios[s], scenarios[t]))
                for (Method m : scenarios[s].estimators)
                    for (Method o : scenarios[t].estimators)
                        if (m == o)
                            throw InvalidArgument("duplicate cell: case " + std::string(case_name(scenarios[s].case_id)) +
                                                  ", n " + std::to_string(scenarios[s].n) + ", method " +
                                                  std::string(method_tag(m)));
    }

    struct Task {
        std::size_t scenario, rep;
    };
    std::vector<Task> tasks;
    // cos values, NaN marks a failed repetition: [scenario][method][rep]
    std::vector<std::vector<std::vector<double>>> cosines(scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        const auto& sc = scenarios[s];
        cosines[s].assign(sc.estimators.size(), std::vector<double>(static_cast<std::size_t>(sc.reps)));
        for (int r = 0; r < sc.reps; ++r) tasks.push_back({s, static_cast<std::size_t>(r)});
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
            const auto& sc = scenarios[tasks[t].scenario];
            const std::size_t rep = tasks[t].rep;
            const Sample sample = generate(sc, rep);
            for (std::size_t m = 0; m < sc.estimators.size(); ++m) {
                double c = std::numeric_limits<double>::quiet_NaN();
                try {
                    c = cosine_to(run_estimator(sc.estimators[m], sample.data, sc, rep).direction, sample.beta);
                } catch (const Error&) {
                }
                cosines[tasks[t].scenario][m][rep] = c;
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    SimulationTable table;
    table.metadata.seed = scenarios.front().seed;
    table.metadata.timestamp = utc_timestamp();
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        for (std::size_t m = 0; m < scenarios[s].estimators.size(); ++m) {
            CellResult cell;
            cell.scenario = scenarios[s];
            cell.method = scenarios[s].estimators[m];
            double sum = 0.0;
            int ok = 0;
            for (double c : cosines[s][m]) {
                if (std::isnan(c)) ++cell.failures;
                else {
                    sum += c;
                    ++ok;
                }
            }
            if (ok > 0) {
                cell.mean_cos = sum / ok;
                double ss = 0.0;
                for (double c : cosines[s][m])
                    if (!std::isnan(c)) ss += (c - cell.mean_cos) * (c - cell.mean_cos);
                cell.se_cos = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
            }
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

// ---- presets ---------------------------------------------------------------------------

inline constexpr double kRhoGrid[] = {-0.6, -0.3, 0.0, 0.3, 0.6};

/// Scenario lists for the three comparison tables: "table1" (binary Cases
/// I-III, p = 3), "table2" (Case II, p = 10 and 15, n = 500) and "table3"
/// (continuous Cases C1-C4). Maximum score only runs at p = 3.
inline std::vector<Scenario> preset_scenarios(std::string_view table, std::uint64_t seed, int reps = 100,
                                              int ms_starts = 200) {
    std::vector<Scenario> out;
    auto add = [&](Case c, std::size_t n, std::size_t p, double rho, std::vector<Method> methods) {
        Scenario sc;
        sc.case_id = c;
        sc.n = n;
        sc.p = p;
        sc.rho = rho;
        sc.reps = reps;
        sc.seed = mix_seed(seed, out.size());
        sc.estimators = std::move(methods);
        sc.ms_starts = ms_starts;
        out.push_back(std::move(sc));
    };
    if (table == "table1") {
        for (Case c : {Case::I, Case::II, Case::III})
            for (std::size_t n : {100, 300, 500})
                for (double rho : kRhoGrid)
                    add(c, n, 3, rho, {Method::NewCentered, Method::MaxScore, Method::Lmrc, Method::Probit});
    } else if (table == "table2") {
        for (std::size_t p : {10, 15})
            for (double rho : kRhoGrid) add(Case::II, 500, p, rho, {Method::NewCentered, Method::Lmrc, Method::Probit});
    } else if (table == "table3") {
        for (std::size_t n : {100, 300, 500})
            for (double rho : {-0.3, 0.0, 0.3})
                for (Case c : {Case::C1, Case::C2, Case::C3, Case::C4})
                    add(c, n, 3, rho, {Method::NewCentered, Method::Lmrc});
    } else {
        throw InvalidArgument("unknown preset '" + std::string(table) + "' (expected table1, table2 or table3)");
    }
    return out;
}

} // namespace dirset
