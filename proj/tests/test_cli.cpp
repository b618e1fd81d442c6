#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "inline_snspd/cli.hpp"
#include "inline_snspd/pnr.hpp"

namespace fs = std::filesystem;
using namespace inline_snspd;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_tool(std::vector<std::string> args)
{
    args.insert(args.begin(), "inline-snspd");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "inline_snspd_cli";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<double>> csv_rows(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

// key=value items separated by any whitespace.
std::map<std::string, std::string> key_values(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string item;
    while (in >> item) {
        const auto eq = item.find('=');
        if (eq != std::string::npos) {
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    return kv;
}

// A lossless, noiseless two-wire 50/50 splitter with a terminating absorber.
std::vector<std::string> ideal_hbt()
{
    return {"--set", "cascade.conditional=0.5,1", "--set", "detector.eta_int=1", "--set", "detector.dark_rate_hz=0",
            "--set", "detector.dead_time_ps=0",     "--set", "detector.jitter_fwhm_ps=0",
            "--set", "run.trigger_jitter_fwhm_ps=0", "--set", "run.readout_jitter_fwhm_ps=0"};
}

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra)
{
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

}  // namespace

TEST_CASE("design")
{
    const auto five = run_tool({"--set", "cascade.n=5", "design"});
    REQUIRE(five.code == cli::exit_ok);
    const auto rows = csv_rows(five.out);
    REQUIRE(rows.size() == 5);
    const double expected[] = {1.563, 2.015, 2.840, 4.855, 48.39};
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(std::abs(rows[k][1] - expected[k]) < 0.01);
    }
    CHECK(five.err.find("wires=5") != std::string::npos);
    CHECK(five.err.find("cap_applied=yes") != std::string::npos);

    const auto curve = scratch("curve.csv");
    const auto two = run_tool({"design", "--curve", curve.string()});
    CHECK(two.code == cli::exit_ok);
    CHECK(csv_rows(two.out).size() == 2);
    const auto points = csv_rows(slurp(curve));
    CHECK(points.size() == 41);
    CHECK(points.back()[1] == doctest::Approx(0.9995).epsilon(1e-6));

    const auto bad = run_tool({"--set", "cascade.fractions=0.6,0.6", "design"});
    CHECK(bad.code == cli::exit_config_error);
    CHECK(bad.err.find("[cascade]") != std::string::npos);
}

TEST_CASE("simulate is byte-identical across runs and worker counts")
{
    const auto a = scratch("a.bin");
    const auto b = scratch("b.bin");
    const auto c = scratch("c.bin");
    const std::vector<std::string> common{"--set", "run.n_triggers=50000", "--set", "source.kind=thermal",
                                          "--seed", "17"};
    REQUIRE(run_tool(with(common, {"--workers", "1", "--out", a.string(), "simulate"})).code == 0);
    REQUIRE(run_tool(with(common, {"--workers", "1", "--out", b.string(), "simulate"})).code == 0);
    REQUIRE(run_tool(with(common, {"--workers", "4", "--out", c.string(), "simulate"})).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) == slurp(c));
    CHECK(slurp(a).size() > 1000);

    CHECK(run_tool({"simulate"}).code == cli::exit_config_error);
}

TEST_CASE("Fock(1) on an ideal splitter")
{
    const auto path = scratch("fock.csv");
    const auto r = run_tool(with(ideal_hbt(), {"--set", "source.kind=fock", "--set", "source.n=1", "--set",
                                               "run.n_triggers=1e6", "--out", path.string(), "simulate"}));
    REQUIRE(r.code == 0);
    const auto kv = key_values(r.out);
    const double ch1 = std::stod(kv.at("ch1"));
    const double ch2 = std::stod(kv.at("ch2"));
    CHECK(ch1 + ch2 == 1e6);
    CHECK(std::abs(ch1 - 5e5) < 3.0 * std::sqrt(0.25 * 1e6));
}

TEST_CASE("zero triggers give a header-only file")
{
    const auto path = scratch("empty.csv");
    REQUIRE(run_tool({"--set", "run.n_triggers=0", "--out", path.string(), "simulate"}).code == 0);
    std::istringstream in(slurp(path));
    std::string line;
    int data_lines = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#' && line != "channel,t_ps") {
            ++data_lines;
        }
    }
    CHECK(data_lines == 0);
}

TEST_CASE("heralded conditional g2 dips at zero delay")
{
    const auto path = scratch("spdc.bin");
    REQUIRE(run_tool({"--set", "source.kind=spdc", "--set", "source.pair_rate_hz=1e6", "--set",
                      "run.duration_s=0.2", "--out", path.string(), "simulate"})
                .code == 0);
    const auto r = run_tool({"analyze", "correlate", path.string(), "--conditional"});
    REQUIRE(r.code == 0);
    bool found = false;
    for (const auto& row : csv_rows(r.out)) {
        if (row[0] == 0.0) {
            found = true;
            CHECK(row[1] < 0.05);
        }
    }
    CHECK(found);
}

TEST_CASE("pnr sweep and analysis")
{
    const auto sweep = run_tool({"--set", "run.n_triggers=100000", "--set", "analysis.nbar_points=3", "pnr"});
    REQUIRE(sweep.code == 0);
    const auto rows = csv_rows(sweep.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == doctest::Approx(0.01));
    CHECK(rows[2][0] == doctest::Approx(3.0));
    for (const auto& row : rows) {
        REQUIRE(row.size() == 7);
        for (std::size_t k = 0; k < 3; ++k) {
            const double p = row[4 + k];
            CHECK(std::abs(row[1 + k] - p) < 5.0 * std::sqrt(p * (1.0 - p) / 1e5) + 1e-12);
        }
    }

    const auto path = scratch("coherent.bin");
    REQUIRE(run_tool({"--set", "run.n_triggers=200000", "--out", path.string(), "simulate"}).code == 0);
    const auto estimated = run_tool({"analyze", "pnr", path.string()});
    REQUIRE(estimated.code == 0);
    const auto est = csv_rows(estimated.out);
    REQUIRE(est.size() == 1);
    CHECK(std::abs(est[0][0] - 1.0) < 0.03);
    const auto given = run_tool({"analyze", "pnr", path.string(), "--nbar", "1"});
    CHECK(csv_rows(given.out)[0][0] == 1.0);
    CHECK(run_tool({"analyze", "pnr", path.string(), "--nbar", "1,2"}).code == cli::exit_config_error);
}

TEST_CASE("jitter analysis recovers the system FWHM")
{
    const auto path = scratch("jitter.bin");
    REQUIRE(run_tool({"--set", "source.kind=fock", "--set", "source.n=1", "--set", "cascade.n=1", "--set",
                      "run.n_triggers=200000", "--out", path.string(), "simulate"})
                .code == 0);
    const auto hist = scratch("jitter_hist.csv");
    const auto r = run_tool({"analyze", "jitter", path.string(), "--hist", hist.string()});
    REQUIRE(r.code == 0);
    const auto kv = key_values(r.out);
    CHECK(kv.at("converged") == "true");
    CHECK(std::abs(std::stod(kv.at("fwhm")) - 75.0) < 1.0);
    CHECK(csv_rows(slurp(hist)).size() == 1000);
}

TEST_CASE("fit and correlate")
{
    const auto data = scratch("line.csv");
    {
        std::ofstream o(data);
        o << "x,y\n";
        for (int i = 0; i <= 10; ++i) {
            o << 0.1 * i << ',' << 1.0 - 2.6 * 0.1 * i << '\n';
        }
    }
    const auto r = run_tool({"fit", "line", data.string()});
    REQUIRE(r.code == 0);
    const auto kv = key_values(r.out);
    CHECK(std::stod(kv.at("slope")) == doctest::Approx(-2.6));
    CHECK(run_tool({"fit", "gaussian", data.string(), "--init", "1,2"}).code == cli::exit_config_error);
    CHECK(run_tool({"fit", "line", scratch("missing.csv").string()}).code == cli::exit_runtime_error);

    const auto tags = scratch("corr.bin");
    REQUIRE(run_tool({"--set", "run.n_triggers=100000", "--out", tags.string(), "simulate"}).code == 0);
    const auto corr = run_tool({"correlate", tags.string(), "--bin", "1000", "--range", "100000"});
    REQUIRE(corr.code == 0);
    CHECK(csv_rows(corr.out).size() == 201);
    CHECK(run_tool({"correlate", tags.string(), "--b", "9"}).code == cli::exit_runtime_error);
}

TEST_CASE("exit codes of the installed binary")
{
    const char* tool = std::getenv("INLINE_SNSPD_TOOL");
    if (tool == nullptr) {
        return;
    }
    const std::string quiet = " > /dev/null 2>&1";
    auto status = [&](const std::string& args) {
        const int raw = std::system((std::string(tool) + " " + args + quiet).c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("design") == 0);
    CHECK(status("--help") == 0);
    CHECK(status("--set cascade.fractions=0.6,0.6 design") == 2);
    CHECK(status("--bogus design") == 2);
    CHECK(status("analyze jitter /nonexistent.bin") == 1);
}
