#pragma once

// CSV input/output and the Monte Carlo driver for rejection-rate studies.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "reldep/datagen.hpp"
#include "reldep/errors.hpp"
#include "reldep/parallel.hpp"
#include "reldep/rng.hpp"
#include "reldep/sample.hpp"
#include "reldep/testing.hpp"

namespace reldep {

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

} // namespace detail

inline Sample parse_csv(std::string_view text, bool has_header) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto cells = detail::split(line, ',');
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw ParseError("line " + std::to_string(line_no) + ": row has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(width));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double x = 0.0;
            if (!detail::parse_double(cells[c], x))
                throw ParseError("line " + std::to_string(line_no) + ", field " + std::to_string(c + 1) +
                                 ": not a finite number: '" + std::string(detail::trim(cells[c])) + "'");
            values.push_back(x);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows found");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * width + c];
    return Sample(std::move(m));
}

inline Sample load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), has_header);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// 17 significant digits, so parse_csv(write_csv(s)) == s.
inline std::string write_csv(const Sample& s) {
    std::string out;
    char buf[32];
    for (std::size_t r = 0; r < s.n(); ++r) {
        for (std::size_t c = 0; c < s.p(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", s(r, c));
            if (c) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simulation

struct SimConfig {
    std::size_t n = 50;
    std::size_t p = 100;
    CorrelationModel model{};
    Distribution dist{};
    KernelId kernel = KernelId::KendallTau;
    TestConfig test{};
    int reps = 1000;
    int threads = 0; // 0: hardware concurrency
    bool record_time = false;
};

struct SimResult {
    SimConfig config;
    std::size_t rejected = 0;
    double reject_rate = 0.0;
    double mc_stderr = 0.0;
    double wall_time_s = 0.0;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.reps < 1) throw UsageError("reps must be >= 1");
    if (cfg.model.p != cfg.p) throw UsageError("model dimension does not match p");
    validate(cfg.test);
}

/// reps independent replications of data generation followed by the test.
/// Replication r draws its data from stream (seed, r) and its bootstrap draws
/// from (seed, r, b); the reduction is a count, so output is independent of
/// the thread count.
inline SimResult run_cell(const SimConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd chol = cholesky_factor(model_matrix(cfg.model));
    const auto reps = static_cast<std::size_t>(cfg.reps);
    std::vector<unsigned char> rejected(reps, 0);
    TestConfig test = cfg.test;
    parallel_for(reps, resolve_threads(cfg.threads), [&](std::size_t r) {
        Engine rng = data_stream(test.seed, r);
        const Sample s = sample_from_factor(cfg.dist, chol, cfg.n, rng);
        rejected[r] = run_full_test(s, cfg.kernel, test, r).reject ? 1 : 0;
    });

    SimResult out;
    out.config = cfg;
    for (unsigned char x : rejected) out.rejected += x;
    out.reject_rate = static_cast<double>(out.rejected) / static_cast<double>(reps);
    out.mc_stderr = std::sqrt(out.reject_rate * (1.0 - out.reject_rate) / static_cast<double>(reps));
    if (cfg.record_time)
        out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// One cell per tau, with the model correlation set to rho_from_tau(tau).
inline std::vector<SimResult> run_power_curve(const SimConfig& cfg, std::span<const double> tau_grid) {
    std::vector<SimResult> out;
    out.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        if (!(tau >= 0.0 && tau < 1.0)) throw UsageError("power-curve tau values must lie in [0, 1)");
        SimConfig cell = cfg;
        cell.model.rho = rho_from_tau(tau);
        out.push_back(run_cell(cell));
    }
    return out;
}

inline constexpr std::string_view kResultHeader =
    "n,p,model,dist,kernel,variant,direction,method,delta,alpha,tau,reps,boot,reject_rate,mc_stderr,seed,wall_time_s";

namespace detail {
inline std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}
inline std::string fmt_fixed(double x, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}
} // namespace detail

inline std::string result_row(const SimResult& r) {
    const SimConfig& c = r.config;
    std::string row;
    row += std::to_string(c.n) + ',' + std::to_string(c.p) + ',' + model_name(c.model.tag) + ',' +
           dist_name(c.dist) + ',' + std::string(kernel_name(c.kernel)) + ',' +
           std::string(variant_name(c.test.variant)) + ',' + std::string(direction_name(c.test.direction)) + ',' +
           std::string(method_name(c.test.method)) + ',' + detail::fmt_g(c.test.delta) + ',' +
           detail::fmt_g(c.test.alpha) + ',' + detail::fmt_g(tau_from_rho(c.model.rho)) + ',' +
           std::to_string(c.reps) + ',' + std::to_string(c.test.boot_reps) + ',' +
           detail::fmt_fixed(r.reject_rate, 4) + ',' + detail::fmt_fixed(r.mc_stderr, 4) + ',' +
           std::to_string(c.test.seed) + ',' + detail::fmt_fixed(r.wall_time_s, 3);
    return row;
}

inline std::string results_csv(std::span<const SimResult> rows) {
    std::string out(kResultHeader);
    out += '\n';
    for (const auto& r : rows) out += result_row(r) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Table specifications: flat `key = value` lines, `#` comments.

struct TableSpec {
    std::vector<std::pair<std::size_t, std::size_t>> sizes; // (n, p)
    std::vector<ModelTag> models{ModelTag::M1, ModelTag::M2, ModelTag::M3};
    std::vector<Distribution> dists{{DistTag::Normal, 3.0}, {DistTag::StudentT, 3.0}};
    SimConfig base{};
    std::optional<double> rho;
    std::optional<double> tau;
};

namespace detail {

inline std::vector<std::string> list_items(std::string_view value) {
    std::vector<std::string> out;
    for (auto item : split(value, ',')) {
        item = trim(item);
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, std::string_view value) {
    value = trim(value);
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ParseError("key '" + key + "': cannot parse '" + std::string(value) + "'");
    return out;
}

} // namespace detail

/// Parses a table spec. Required: sizes (e.g. "50x100, 100x100"). Optional:
/// models, dists, kernel, delta, alpha, variant, direction, method, rho | tau,
/// reps (default 1000), boot (default 100), boot_sigma, seed, threads, m3_pair.
inline TableSpec parse_table_spec(std::string_view text) {
    TableSpec spec;
    spec.base.reps = 1000;
    spec.base.test.boot_reps = 100;
    bool have_sizes = false;
    std::map<std::string, int> seen;
    const auto lines = detail::split(text, '\n');
    for (std::size_t line_no = 1; line_no <= lines.size(); ++line_no) {
        std::string_view line = lines[line_no - 1];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (seen[key]++) throw ParseError("key '" + key + "' given twice");
        try {
            if (key == "sizes") {
                for (const auto& item : detail::list_items(value)) {
                    const auto x = item.find('x');
                    if (x == std::string::npos) throw ParseError("key 'sizes': expected NxP, got '" + item + "'");
                    spec.sizes.emplace_back(detail::parse_number<std::size_t>(key, std::string_view(item).substr(0, x)),
                                            detail::parse_number<std::size_t>(key, std::string_view(item).substr(x + 1)));
                }
                have_sizes = !spec.sizes.empty();
            } else if (key == "models") {
                spec.models.clear();
                for (const auto& item : detail::list_items(value)) spec.models.push_back(parse_model(item));
            } else if (key == "dists") {
                spec.dists.clear();
                for (const auto& item : detail::list_items(value)) spec.dists.push_back(parse_distribution(item));
            } else if (key == "kernel") {
                spec.base.kernel = parse_kernel(value);
            } else if (key == "delta") {
                spec.base.test.delta = detail::parse_number<double>(key, value);
            } else if (key == "alpha") {
                spec.base.test.alpha = detail::parse_number<double>(key, value);
            } else if (key == "variant") {
                spec.base.test.variant = parse_variant(value);
            } else if (key == "direction") {
                spec.base.test.direction = parse_direction(value);
            } else if (key == "method") {
                spec.base.test.method = parse_method(value);
            } else if (key == "rho") {
                spec.rho = detail::parse_number<double>(key, value);
            } else if (key == "tau") {
                spec.tau = detail::parse_number<double>(key, value);
            } else if (key == "reps") {
                spec.base.reps = detail::parse_number<int>(key, value);
            } else if (key == "boot") {
                spec.base.test.boot_reps = detail::parse_number<int>(key, value);
            } else if (key == "boot_sigma") {
                spec.base.test.boot_sigma = parse_boot_sigma(value);
            } else if (key == "seed") {
                spec.base.test.seed = detail::parse_number<std::uint64_t>(key, value);
            } else if (key == "threads") {
                spec.base.threads = detail::parse_number<int>(key, value);
            } else if (key == "m3_pair") {
                const auto items = detail::list_items(value);
                if (items.size() != 2) throw ParseError("key 'm3_pair': expected 'i, j'");
                spec.base.model.pair = {detail::parse_number<std::size_t>(key, items[0]),
                                        detail::parse_number<std::size_t>(key, items[1])};
            } else {
                throw ParseError("unknown key '" + key + "'");
            }
        } catch (const UsageError& e) {
            throw ParseError("key '" + key + "': " + e.what());
        }
    }
    if (!have_sizes) throw ParseError("missing required key 'sizes'");
    if (spec.rho && spec.tau) throw ParseError("keys 'rho' and 'tau' are mutually exclusive");
    if (spec.models.empty()) throw ParseError("key 'models': empty list");
    if (spec.dists.empty()) throw ParseError("key 'dists': empty list");
    return spec;
}

/// Default correlation: the boundary rho = sin(pi Delta / 2), i.e. tau = Delta.
inline double spec_rho(const TableSpec& spec) {
    if (spec.rho) return *spec.rho;
    if (spec.tau) return rho_from_tau(*spec.tau);
    return rho_from_tau(spec.base.test.delta);
}

/// Every (n, p) x model x distribution cell, in that nesting order.
inline std::vector<SimConfig> table_cells(const TableSpec& spec) {
    std::vector<SimConfig> cells;
    const double rho = spec_rho(spec);
    for (const auto& [n, p] : spec.sizes)
        for (ModelTag m : spec.models)
            for (const Distribution& d : spec.dists) {
                SimConfig c = spec.base;
                c.n = n;
                c.p = p;
                c.model.tag = m;
                c.model.p = p;
                c.model.rho = rho;
                c.dist = d;
                cells.push_back(c);
            }
    return cells;
}

inline std::string run_table(const TableSpec& spec, bool record_time = false, int threads_override = -1) {
    std::vector<SimResult> rows;
    for (SimConfig c : table_cells(spec)) {
        c.record_time = record_time;
        if (threads_override >= 0) c.threads = threads_override;
        rows.push_back(run_cell(c));
    }
    return results_csv(rows);
}

inline std::string run_table(const std::string& spec_path, bool record_time = false, int threads_override = -1) {
    std::ifstream in(spec_path, std::ios::binary);
    if (!in) throw ParseError("cannot open table spec '" + spec_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return run_table(parse_table_spec(buf.str()), record_time, threads_override);
}

} // namespace reldep
