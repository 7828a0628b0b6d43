// dirset: command-line front end for single-index direction estimation.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dirset/commands.hpp"

namespace {

dirset::CsvDataset dataset_spec(const std::string& input, const std::string& response,
                                const std::vector<std::string>& covariates, bool no_header) {
    return {input, response, covariates, !no_header};
}

} // namespace

int main(int argc, char** argv) {
    using namespace dirset;

    CLI::App app{"Direction estimation for binary and single-index models"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string input, response, method_name = "new";
    std::vector<std::string> covariates;
    bool json = false, force = false, no_header = false;

    auto add_data_options = [&](CLI::App* sub) {
        sub->add_option("--input", input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        sub->add_option("--response", response, "response column")->required();
        sub->add_option("--covariates", covariates, "covariate columns (default: all others)")->delimiter(',');
        sub->add_flag("--no-header", no_header, "columns are named V1, V2, ...");
        sub->add_flag("--json", json, "machine-readable output");
        sub->add_flag("--force", force, "allow new-uncentered on non-centered covariates");
    };

    auto* estimate = app.add_subcommand("estimate", "estimate the index direction");
    add_data_options(estimate);
    estimate->add_option("--method", method_name, "new | new-uncentered | ms | lmrc | probit");
    MaxScoreConfig ms;
    estimate->add_option("--ms-starts", ms.n_random_starts, "random starts for ms");
    estimate->add_option("--seed", ms.seed, "seed for ms starts");

    auto* test = app.add_subcommand("test", "Wald test of a hypothesised direction");
    add_data_options(test);
    test->add_option("--method", method_name, "new | new-uncentered");
    std::vector<double> beta0, alphas;
    test->add_option("--beta0", beta0, "comma-separated null direction")->required()->delimiter(',');
    test->add_option("--alpha", alphas, "significance levels (default 0.05)")->delimiter(',');

    SimulateOptions sim;
    std::uint32_t threads = 0;
    std::string mixture;
    bool mixture_sd = false;
    const auto mixture_check = CLI::IsMember({"sum", "mixture", "mixture-sd"});
    const char* mixture_help = "Case III error reading: sum | mixture | mixture-sd";
    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo study from a JSON config");
    simulate->add_option("--config", sim.config_path, "scenario list")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out_csv, "CSV output (markdown written alongside)");
    simulate->add_option("--markdown", sim.markdown_path, "markdown output path");
    simulate->add_flag("--fixed-beta", sim.fixed_beta, "draw beta once per scenario");
    auto* simulate_mix = simulate->add_option("--case3-error", mixture, mixture_help)->check(mixture_check);
    simulate->add_flag("--mixture-sd", mixture_sd, "same as --case3-error mixture-sd")->excludes(simulate_mix);
    simulate->add_option("--threads", threads, "worker threads (default: DIRSET_THREADS or all cores)");

    ReproduceOptions rep;
    auto* reproduce = app.add_subcommand("reproduce", "rerun a built-in comparison table");
    reproduce->add_option("table", rep.table, "table1 | table2 | table3")
        ->required()
        ->check(CLI::IsMember({"table1", "table2", "table3"}));
    reproduce->add_option("--seed", rep.seed, "master seed");
    reproduce->add_option("--reps", rep.reps, "repetitions per cell")->check(CLI::PositiveNumber);
    reproduce->add_option("--ms-starts", rep.ms_starts, "random starts for ms")->check(CLI::PositiveNumber);
    reproduce->add_option("--out", rep.out_csv, "CSV output");
    reproduce->add_option("--markdown", rep.markdown_path, "markdown output");
    reproduce->add_flag("--fixed-beta", rep.fixed_beta, "draw beta once per scenario");
    auto* reproduce_mix = reproduce->add_option("--case3-error", mixture, mixture_help)->check(mixture_check);
    reproduce->add_flag("--mixture-sd", mixture_sd, "same as --case3-error mixture-sd")->excludes(reproduce_mix);
    reproduce->add_option("--threads", threads, "worker threads");

    std::string synth_out;
    std::size_t synth_n = 1614;
    std::uint64_t synth_seed = 2006;
    auto* synth = app.add_subcommand("synth", "write a synthetic export-participation dataset");
    synth->add_option("--out", synth_out, "CSV path (default: stdout)");
    synth->add_option("--n", synth_n, "rows")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "seed");

    try {
        app.parse(argc, argv);
        if (mixture_sd) mixture = "mixture-sd";
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto parsed = parse_method(method_name);
    if (!parsed) {
        std::cerr << "error: unknown method '" << method_name << "'\n";
        return 1;
    }
    const Method method = *parsed;

    if (*estimate) {
        EstimateOptions opt{dataset_spec(input, response, covariates, no_header), method, json, force, ms};
        return cmd_estimate(opt, std::cout, std::cerr);
    }
    if (*test) {
        TestOptions opt;
        opt.csv = dataset_spec(input, response, covariates, no_header);
        opt.beta0 = beta0;
        if (!alphas.empty()) opt.alphas = alphas;
        opt.method = method;
        opt.json = json;
        opt.force = force;
        return cmd_test(opt, std::cout, std::cerr);
    }
    if (*simulate) {
        if (threads > 0) sim.threads = threads;
        if (!mixture.empty()) sim.mixture = parse_mixture_form(mixture);
        return cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*reproduce) {
        if (threads > 0) rep.threads = threads;
        if (!mixture.empty()) rep.mixture = parse_mixture_form(mixture);
        return cmd_reproduce(rep, std::cout, std::cerr);
    }
    return cmd_synth(synth_out, synth_n, synth_seed, std::cout, std::cerr);
}
