#include "catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "magictrap/cli.hpp"
#include "magictrap/io.hpp"

using namespace magictrap;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::string data_dir = MAGICTRAP_DATA_DIR;

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "magictrap");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

double field(const std::string& doc, const std::string& key)
{
    return io::KeyValueDocument::parse(doc).number(key);
}

std::filesystem::path scratch()
{
    auto dir = std::filesystem::temp_directory_path() / "magictrap_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("number formatting")
{
    CHECK(io::format_number(1.5) == "1.5");
    CHECK(io::format_number(-4197276.123456789, 9) == "-4197276.12");
    CHECK(io::format_number(std::nan("")) == "nan");
    CHECK(io::format_number(-INFINITY) == "-inf");
    CHECK(io::parse_number(" 2.5e-3 ", "x") == 2.5e-3);
    CHECK_THROWS_AS(io::parse_number("2.5x", "x"), Error);
}

TEST_CASE("coefficient documents round trip")
{
    const auto doc = io::to_document(presets::theory, 17);
    const auto back = io::coefficients_from_document(io::KeyValueDocument::parse(doc.str()));
    CHECK(back.beta2 == presets::theory.beta2);
    CHECK(back.beta4 == presets::theory.beta4);
    const auto file = io::read_coefficients(data_dir + "/exp.toml");
    CHECK(file.beta2 == presets::experimental.beta2);
    CHECK_THROWS_AS(io::coefficients_from_document(io::KeyValueDocument::parse("beta1 = 1\nbeta5 = 2\n")),
                    Error);
    CHECK_THROWS_AS(io::KeyValueDocument::parse("no equals sign"), Error);
}

TEST_CASE("csv parsing")
{
    const auto t = io::parse_csv("t_s,p,sigma\n0,1,0.05\n0.1, 0.7 ,0.05\n");
    CHECK(t.header == std::vector<std::string>{"t_s", "p", "sigma"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == 0.7);
    const auto s = io::time_samples_from_csv(t, "p");
    CHECK(s[1].sigma == 0.05);
    CHECK_THROWS_AS(io::time_samples_from_csv(t, "visibility"), Error);
    CHECK_THROWS_AS(io::parse_csv("a,b\n1\n"), Error);
    const auto sets = io::dls_datasets_from_csv(
        io::parse_csv("b_field_gauss,depth_mk,dls_hz\n1,0.1,-30\n2,0.1,-25\n1,0.2,-55\n"));
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].points.size() == 2);
    CHECK(sets[0].points[1].depth_hz == depth_hz_from_mk(0.2));
}

TEST_CASE("timeline documents")
{
    const auto doc = io::parse_timeline(io::read_file(data_dir + "/transfer.json"));
    CHECK(doc.timeline.segments.size() == 5);
    CHECK(doc.post_transfer_temperature_k == Catch::Approx(16e-6));
    const auto r = coherence_budget(doc.timeline, *doc.post_transfer_temperature_k);
    CHECK_THAT(r.fractional_tau_loss, WithinAbs(0.091, 0.01));
    CHECK_THROWS_AS(io::parse_timeline("{\"t1_s\": 4}"), Error);
    CHECK_THROWS_AS(io::parse_timeline("[1,2"), Error);
    CHECK_THROWS_AS(io::parse_timeline(R"({"t1_s":4,"t2prime_s":0.3,"segments":[{"phase":"Warp"}]})"), Error);
}

TEST_CASE("cli: magic")
{
    const auto r = run({"magic", "--b-field", "3.115", "--coeffs", data_dir + "/exp.toml"});
    REQUIRE(r.code == 0);
    CHECK_THAT(field(r.out, "u_m_hz"), WithinRel(-4.197e6, 1e-3));
    CHECK_THAT(field(r.out, "depth_mk"), WithinRel(0.201, 0.005));
    CHECK_THAT(field(r.out, "dls_min_hz"), WithinAbs(-81.0, 0.1));
    CHECK_THAT(field(r.out, "zero_crossing_gauss"), WithinRel(3.505, 1e-3));
    CHECK(r.err.empty());
}

TEST_CASE("cli: usage errors exit with 2")
{
    CHECK(run({"magic", "--bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    const auto missing = run({"ramsey", "--b-field", "3.115"});
    CHECK(missing.code == 2);
    CHECK_THAT(missing.err, ContainsSubstring("--temp-uk"));
    CHECK(run({"beff", "--depth-mk", "-0.2"}).code == 2);
    CHECK(run({"magic", "--b-field", "3", "--preset", "theory", "--coeffs", "x"}).code == 2);
    CHECK(run({"--constants"}).code == 2);
    CHECK(run({"magic", "--help"}).code == 0);
}

TEST_CASE("cli: domain errors exit with 1 and one line")
{
    const auto r = run({"fit-dls", "--input", "missing.csv"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, StartsWith("error: io-error: "));
    CHECK_THAT(r.err, ContainsSubstring("not found"));
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const auto lin = run({"magic", "--b-field", "3.115", "--preset", "linear"});
    CHECK(lin.code == 1);
    CHECK_THAT(lin.err, StartsWith("error: no-magic-point: "));
}

TEST_CASE("cli: t2star example")
{
    const auto r = run({"t2star", "--temp-uk", "17", "--depth-mk", "0.201", "--b-field", "3.115",
                        "--coeffs", data_dir + "/exp.toml", "--t1-s", "4", "--t2prime-s", "0.3"});
    REQUIRE(r.code == 0);
    CHECK_THAT(field(r.out, "t2_star_s"), WithinRel(1.5, 0.3));
    CHECK(field(r.out, "tau_s") > 0.2);
}

TEST_CASE("cli: beff, convert and version")
{
    const auto b = run({"beff", "--depth-mk", "0.6"});
    REQUIRE(b.code == 0);
    CHECK_THAT(field(b.out, "b_eff_gauss"), WithinRel(1.12, 0.01));
    const auto c = run({"convert", "--depth-mk", "0.2", "--temp-uk", "17"});
    REQUIRE(c.code == 0);
    CHECK_THAT(field(c.out, "depth_hz"), WithinRel(depth_hz_from_mk(0.2), 1e-8));
    CHECK(run({"convert"}).code == 1);
    const auto v = run({"--version", "--constants"});
    CHECK(v.code == 0);
    CHECK_THAT(v.out, ContainsSubstring("planck_h = 6.62607015e-34"));
}

TEST_CASE("cli: output is byte-identical across runs")
{
    const std::vector<std::string> args{"coherence-curve", "--temp-uk", "17", "--b-field", "3.115",
                                        "--ratio-min", "0.9", "--ratio-max", "1.1", "--ratio-step", "0.1"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("cli: synthetic DLS data round trip through fit-dls")
{
    const auto dir = scratch();
    const auto csv = (dir / "dls.csv").string();
    const auto svg = (dir / "dls.svg").string();
    const auto gen = run({"dls-curve", "--b-field", "0.5", "--b-field", "3.115", "--points", "20",
                          "--noise-hz", "0.2", "--seed", "11", "--out", csv, "--plot", svg});
    REQUIRE(gen.code == 0);
    const auto fit = run({"fit-dls", "--input", csv, "--b-field", "3.115", "--plot", svg});
    REQUIRE(fit.code == 0);
    const double b4 = field(fit.out, "beta4");
    CHECK(std::abs(b4 - 4.6e-12) < 4 * field(fit.out, "beta4_stderr"));
    CHECK(field(fit.out, "magic_depth_stderr_hz") > 0);
    CHECK_THAT(io::read_file(svg), StartsWith("<svg"));
}

TEST_CASE("cli: synthetic Ramsey data round trip through fit-ramsey")
{
    const auto dir = scratch();
    const auto csv = (dir / "ramsey.csv").string();
    const auto gen = run({"ramsey", "--temp-uk", "17", "--b-field", "3.115", "--detuning-hz", "10",
                          "--t-max-s", "2", "--points", "401", "--noise", "0.01", "--seed", "5",
                          "--out", csv});
    REQUIRE(gen.code == 0);
    const auto fit = run({"fit-ramsey", "--input", csv, "--model", "damped"});
    REQUIRE(fit.code == 0);
    // carrier: detuning plus the ensemble-mean shift near the vertex (about -80.6 Hz)
    CHECK_THAT(std::abs(field(fit.out, "delta")), WithinAbs(70.6, 1.0));
    CHECK(field(fit.out, "tau") > 0.5);

    const auto vcsv = (dir / "vis.csv").string();
    REQUIRE(run({"visibility", "--temp-uk", "17", "--b-field", "3.115", "--t-max-s", "2", "--out", vcsv}).code == 0);
    const auto env = run({"fit-ramsey", "--input", vcsv, "--model", "envelope"});
    REQUIRE(env.code == 0);
    CHECK(field(env.out, "tau") > 0.5);
}

TEST_CASE("cli: transfer budget")
{
    const auto dir = scratch();
    const auto csv = (dir / "budget.csv").string();
    const auto r = run({"transfer", "--input", data_dir + "/transfer.json", "--out", csv});
    REQUIRE(r.code == 0);
    CHECK_THAT(field(r.out, "fractional_tau_loss"), WithinAbs(0.091, 0.01));
    CHECK_THAT(io::read_file(csv), StartsWith("index,phase,"));
}
