// reldep: relevant-dependence tests on CSV data and Monte Carlo studies.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reldep/reldep.hpp"

namespace {

using namespace reldep;

struct TestArgs {
    std::string kernel = "kendall";
    double delta = 0.1;
    double alpha = 0.1;
    std::string variant = "normalized";
    std::string method = "bootstrap";
    std::string direction = "relevant";
    int boot = 100;
    std::uint64_t seed = 0;
    bool signed_truncation = false;
    std::string boot_sigma = "resample";
};

void add_test_options(CLI::App* cmd, TestArgs& a) {
    cmd->add_option("--kernel", a.kernel, "covariance|kendall|spearman|hoeffding-d|bkr-r|tau-star")
        ->capture_default_str();
    cmd->add_option("--delta", a.delta, "Relevance threshold")->capture_default_str();
    cmd->add_option("--alpha", a.alpha, "Nominal level")->capture_default_str();
    cmd->add_option("--variant", a.variant, "normalized|nv|abs")->capture_default_str();
    cmd->add_option("--method", a.method, "asymptotic|bootstrap")->capture_default_str();
    cmd->add_option("--direction", a.direction, "relevant|interchanged|classical")->capture_default_str();
    cmd->add_option("--boot", a.boot, "Bootstrap replications")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_flag("--signed-truncation", a.signed_truncation, "Truncate V at sign(V) * delta");
    cmd->add_option("--boot-sigma", a.boot_sigma, "resample|original: sigma used by normalized bootstrap draws")
        ->capture_default_str();
}

TestConfig to_config(const TestArgs& a) {
    TestConfig c;
    c.delta = a.delta;
    c.alpha = a.alpha;
    c.variant = parse_variant(a.variant);
    c.method = parse_method(a.method);
    c.direction = parse_direction(a.direction);
    c.boot_reps = a.boot;
    c.seed = a.seed;
    c.signed_truncation = a.signed_truncation;
    c.boot_sigma = parse_boot_sigma(a.boot_sigma);
    return c;
}

struct SimArgs {
    std::size_t n = 50;
    std::size_t p = 100;
    std::string model = "m1";
    std::string dist = "normal";
    std::vector<std::size_t> m3_pair{1, 2};
    int reps = 1000;
    int threads = 0;
    bool timing = false;
    std::string out;
};

void add_sim_options(CLI::App* cmd, SimArgs& s) {
    cmd->add_option("--n", s.n, "Sample size")->capture_default_str();
    cmd->add_option("--p", s.p, "Dimension")->capture_default_str();
    cmd->add_option("--model", s.model, "m1|m2|m3")->capture_default_str();
    cmd->add_option("--dist", s.dist, "normal|t3 (t<dof>)")->capture_default_str();
    cmd->add_option("--m3-pair", s.m3_pair, "Correlated pair for m3 (one-based)")->expected(2);
    cmd->add_option("--reps", s.reps, "Monte Carlo replications")->capture_default_str();
    cmd->add_option("--threads", s.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_flag("--timing", s.timing, "Record wall time in the output");
    cmd->add_option("--out", s.out, "Write CSV here instead of stdout");
}

SimConfig to_sim(const SimArgs& s, const TestArgs& t, const std::string& kernel) {
    SimConfig c;
    c.n = s.n;
    c.p = s.p;
    c.model.tag = parse_model(s.model);
    c.model.p = s.p;
    c.model.pair = {s.m3_pair.at(0), s.m3_pair.at(1)};
    c.dist = parse_distribution(s.dist);
    c.kernel = parse_kernel(kernel);
    c.test = to_config(t);
    c.reps = s.reps;
    c.threads = s.threads;
    c.record_time = s.timing;
    return c;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
}

std::vector<double> parse_grid(const std::string& spec) {
    const auto parts = detail::split(spec, ':');
    double a = 0, b = 0, step = 0;
    if (parts.size() != 3 || !detail::parse_double(parts[0], a) || !detail::parse_double(parts[1], b) ||
        !detail::parse_double(parts[2], step) || !(step > 0.0) || b < a)
        throw UsageError("--tau-grid expects a:b:step with a <= b and step > 0");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long k = 0; k <= count; ++k) grid.push_back(a + static_cast<double>(k) * step);
    return grid;
}

nlohmann::json report_json(const TestReport& r, const Sample& s, const TestConfig& cfg, KernelId k,
                           bool with_draws) {
    nlohmann::json j;
    j["n"] = s.n();
    j["p"] = s.p();
    j["kernel"] = kernel_name(k);
    j["variant"] = variant_name(cfg.variant);
    j["direction"] = direction_name(cfg.direction);
    j["method"] = method_name(cfg.method);
    j["delta"] = r.delta;
    j["alpha"] = r.alpha;
    j["statistic"] = r.statistic;
    j["critical_value"] = r.critical_value;
    j["reject"] = r.reject;
    if (r.boot_pvalue) j["boot_pvalue"] = *r.boot_pvalue;
    auto& ex = j["exceedances"] = nlohmann::json::array();
    for (const auto& e : r.exceedances) ex.push_back({{"i", e.i}, {"j", e.j}, {"u", e.u}});
    if (with_draws) j["boot_draws"] = r.boot_draws;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tests for relevant pairwise dependence in high-dimensional samples"};
    app.require_subcommand(1);

    TestArgs test_args;
    std::string input;
    bool header = false;
    bool with_draws = false;
    int test_threads = 1;
    auto* test_cmd = app.add_subcommand("test", "Run a test on a CSV sample");
    test_cmd->add_option("--input", input, "CSV file, rows are observations")->required();
    test_cmd->add_flag("--header", header, "First row is a header");
    test_cmd->add_flag("--draws", with_draws, "Include bootstrap draws in the output");
    test_cmd->add_option("--threads", test_threads, "Threads for bootstrap draws")->capture_default_str();
    add_test_options(test_cmd, test_args);

    TestArgs sim_test;
    SimArgs sim_args;
    std::optional<double> sim_rho, sim_tau;
    auto* sim_cmd = app.add_subcommand("simulate", "Estimate a rejection rate for one design cell");
    add_test_options(sim_cmd, sim_test);
    add_sim_options(sim_cmd, sim_args);
    auto* rho_opt = sim_cmd->add_option("--rho", sim_rho, "Model correlation");
    sim_cmd->add_option("--tau", sim_tau, "Model Kendall tau (rho = sin(pi tau / 2))")->excludes(rho_opt);

    TestArgs pow_test;
    SimArgs pow_args;
    std::string grid;
    auto* pow_cmd = app.add_subcommand("power", "Rejection rates over a grid of Kendall tau values");
    add_test_options(pow_cmd, pow_test);
    add_sim_options(pow_cmd, pow_args);
    pow_cmd->add_option("--tau-grid", grid, "a:b:step")->required();

    std::string spec_path, table_out;
    int table_threads = -1;
    bool table_timing = false;
    auto* table_cmd = app.add_subcommand("table", "Run every cell of a table spec");
    table_cmd->add_option("--spec", spec_path, "key = value spec file")->required();
    table_cmd->add_option("--out", table_out, "Output CSV (stdout if omitted)");
    table_cmd->add_option("--threads", table_threads, "Override the spec's thread count");
    table_cmd->add_flag("--timing", table_timing, "Record wall time in the output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*test_cmd) {
            const Sample s = load_csv(input, header);
            TestConfig cfg = to_config(test_args);
            cfg.threads = test_threads;
            const KernelId k = parse_kernel(test_args.kernel);
            const TestReport r = run_full_test(s, k, cfg);
            std::cout << report_json(r, s, cfg, k, with_draws).dump(2) << '\n';
        } else if (*sim_cmd) {
            SimConfig c = to_sim(sim_args, sim_test, sim_test.kernel);
            c.model.rho = sim_rho ? *sim_rho : rho_from_tau(sim_tau ? *sim_tau : c.test.delta);
            const SimResult r = run_cell(c);
            emit(results_csv(std::span<const SimResult>(&r, 1)), sim_args.out);
        } else if (*pow_cmd) {
            const SimConfig c = to_sim(pow_args, pow_test, pow_test.kernel);
            const auto taus = parse_grid(grid);
            emit(results_csv(run_power_curve(c, taus)), pow_args.out);
        } else if (*table_cmd) {
            emit(run_table(spec_path, table_timing, table_threads), table_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
