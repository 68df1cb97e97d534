#include <cmath>
#include <random>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "reldep/harness.hpp"

using namespace reldep;

namespace {

std::string error_text(std::string_view spec) {
    try {
        parse_table_spec(spec);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

SimConfig small_cell() {
    SimConfig c;
    c.n = 20;
    c.p = 6;
    c.model = {ModelTag::M1, 6, 0.3, {1, 2}};
    c.reps = 24;
    c.test.boot_reps = 20;
    c.test.variant = Variant::Abs;
    c.test.seed = 2024;
    return c;
}

} // namespace

TEST_CASE("csv parsing", "[harness]") {
    const Sample s = parse_csv("x,y\n1,2\n3.5,-4e-1\n", true);
    REQUIRE(s.n() == 2);
    REQUIRE(s.p() == 2);
    CHECK(s(1, 0) == 3.5);
    CHECK(s(1, 1) == -0.4);

    const Sample crlf = parse_csv("\xEF\xBB\xBF" "1, 2\r\n3,4\r\n\r\n", false);
    CHECK(crlf.n() == 2);
    CHECK(crlf(0, 1) == 2.0);

    CHECK_THROWS_AS(parse_csv("", false), ParseError);
    CHECK_THROWS_AS(parse_csv("a,b\n", true), ParseError);
    CHECK_THROWS_WITH(parse_csv("1,2\n3\n", false), Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(parse_csv("1,2\n3,abc\n", false),
                      Catch::Matchers::ContainsSubstring("line 2, field 2"));
    CHECK_THROWS_AS(parse_csv("1,nan\n", false), ParseError);
    CHECK_THROWS_AS(parse_csv("x,y\n1,2\n", false), ParseError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", false), ParseError);
}

TEST_CASE("csv round trip is exact", "[harness][property]") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 20; ++t) {
        const Sample s = oracle::random_sample(rng, 1 + t, 1 + t % 5);
        CHECK(parse_csv(write_csv(s), false) == s);
    }
}

TEST_CASE("simulation cells are reproducible across thread counts", "[harness]") {
    SimConfig c = small_cell();
    c.threads = 1;
    const SimResult one = run_cell(c);
    c.threads = 4;
    const SimResult four = run_cell(c);
    CHECK(one.rejected == four.rejected);
    CHECK(result_row(one) == result_row(four));
    CHECK(one.reject_rate == static_cast<double>(one.rejected) / 24.0);
    CHECK(one.mc_stderr == std::sqrt(one.reject_rate * (1 - one.reject_rate) / 24.0));
    CHECK(one.wall_time_s == 0.0);

    c.test.seed = 2025;
    CHECK(run_cell(c).config.test.seed == 2025);
}

TEST_CASE("cells whose alternative is strong reject every time", "[harness]") {
    SimConfig c = small_cell();
    c.n = 60;
    c.model.rho = 0.9;
    c.test.delta = 0.1;
    const SimResult r = run_cell(c);
    CHECK(r.reject_rate == 1.0);
    CHECK(r.mc_stderr == 0.0);
}

TEST_CASE("result rows", "[harness]") {
    SimResult r;
    r.config = small_cell();
    r.config.model.rho = rho_from_tau(0.1);
    r.rejected = 3;
    r.reject_rate = 0.125;
    r.mc_stderr = std::sqrt(0.125 * 0.875 / 24);
    CHECK(result_row(r) == "20,6,m1,normal,kendall,abs,relevant,bootstrap,0.1,0.1,0.1,24,20,0.1250,0.0675,2024,0.000");
    const std::string csv = results_csv(std::span<const SimResult>(&r, 1));
    CHECK(csv.rfind(std::string(kResultHeader) + "\n", 0) == 0);
}

TEST_CASE("power curve", "[harness]") {
    SimConfig c = small_cell();
    c.reps = 10;
    const std::vector<double> grid{0.0, 0.5};
    const auto rows = run_power_curve(c, grid);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].config.model.rho == 0.0);
    CHECK(std::abs(tau_from_rho(rows[1].config.model.rho) - 0.5) <= 1e-15);
    CHECK(rows[1].reject_rate >= rows[0].reject_rate);
    const std::vector<double> bad{1.0};
    CHECK_THROWS_AS(run_power_curve(c, bad), UsageError);
}

TEST_CASE("table specs", "[harness]") {
    const TableSpec spec = parse_table_spec("# cells\nsizes = 50x100, 100x100\nvariant = nv\nseed = 9\n");
    CHECK(spec.base.reps == 1000);
    CHECK(spec.base.test.boot_reps == 100);
    CHECK(spec.base.test.seed == 9);
    CHECK(spec.base.test.variant == Variant::NonNormalizedSq);
    const auto cells = table_cells(spec);
    REQUIRE(cells.size() == 12);
    CHECK(cells[0].n == 50);
    CHECK(cells[0].model.tag == ModelTag::M1);
    CHECK(cells[0].dist.tag == DistTag::Normal);
    CHECK(cells[1].dist.tag == DistTag::StudentT);
    CHECK(cells[2].model.tag == ModelTag::M2);
    CHECK(cells[6].n == 100);
    for (const auto& c : cells) {
        CHECK(c.model.p == c.p);
        CHECK(std::abs(tau_from_rho(c.model.rho) - 0.1) <= 1e-15);
    }
    CHECK(table_cells(parse_table_spec("sizes=10x3\nrho=0.5\n"))[0].model.rho == 0.5);
    CHECK(spec.base.test.boot_sigma == BootSigma::Resample);
    CHECK(parse_table_spec("sizes=10x3\nboot_sigma=original\n").base.test.boot_sigma == BootSigma::Original);
}

TEST_CASE("table spec errors name the offending key", "[harness]") {
    CHECK_THAT(error_text("sizes = 10x3\ncolour = red\n"), Catch::Matchers::ContainsSubstring("colour"));
    CHECK_THAT(error_text("sizes = 10x3\nalpha = lots\n"), Catch::Matchers::ContainsSubstring("alpha"));
    CHECK_THAT(error_text("sizes = 10x3\nmodels = m4\n"), Catch::Matchers::ContainsSubstring("models"));
    CHECK_THAT(error_text("sizes = 10by3\n"), Catch::Matchers::ContainsSubstring("sizes"));
    CHECK_THAT(error_text("sizes = 10x3\nsizes = 5x5\n"), Catch::Matchers::ContainsSubstring("sizes"));
    CHECK_THAT(error_text("sizes = 10x3\nrho = 0.1\ntau = 0.1\n"), Catch::Matchers::ContainsSubstring("tau"));
    CHECK_THAT(error_text("reps = 5\n"), Catch::Matchers::ContainsSubstring("sizes"));
    CHECK_THAT(error_text("sizes = 10x3\njunk\n"), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("small table runs and is deterministic", "[harness]") {
    const TableSpec spec = parse_table_spec("sizes = 15x4\nmodels = m1, m3\ndists = normal\nreps = 8\nboot = 20\n"
                                            "variant = abs\nseed = 5\n");
    const std::string a = run_table(spec, false, 1);
    const std::string b = run_table(spec, false, 3);
    CHECK(a == b);
    std::size_t lines = 0;
    for (char ch : a) lines += ch == '\n';
    CHECK(lines == 3);
}
