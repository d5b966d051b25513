#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "artifacts.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
public:
    TempDir()
    {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("qrobust-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path &p, const std::string &text) { std::ofstream(p, std::ios::binary) << text; }

struct Run {
    int code = -1;
    std::string err;
};

Run cli(const TempDir &dir, const std::string &args)
{
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + QR_CLI_PATH + "' " + args + " > /dev/null 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream cs(line);
        std::string cell;
        while (std::getline(cs, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(cells);
    }
    return rows;
}

std::string harmonic_config(const TempDir &dir, const std::string &extra = "")
{
    const fs::path p = dir / "harmonic.json";
    spit(p, "{\"model\": \"harmonic\"" + extra + "}");
    return "--config '" + p.string() + "' --out '" + (dir / "out").string() + "'";
}

} // namespace

TEST_CASE("config parsing")
{
    const auto lz = qrcli::parse_config("{}");
    CHECK(lz.model == "landau_zener");
    CHECK(lz.samples == 128);
    CHECK(lz.objective == QR_PHASE_SENSITIVE);

    const auto h = qrcli::parse_config(R"({"model": "harmonic", "grid": {"N": 64}, "seed": 5})");
    CHECK(h.model == "harmonic");
    CHECK(h.samples == 64);
    CHECK(h.seed == 5);
    CHECK(h.fit_mode == QR_FIT_FIXED_HALF);
    CHECK(h.objective == QR_OVERLAP);

    const auto echoed = qrcli::parse_config(qrcli::config_to_json(h).dump());
    CHECK(qrcli::config_to_json(echoed) == qrcli::config_to_json(h));

    CHECK_THROWS_AS(qrcli::parse_config(R"({"colour": 1})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config(R"({"grid": {"N": 64, "dt": 0.1}})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config(R"({"ensemble": {"sampler": {"law": "normal"}}})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config(R"({"model": "qutrit"})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config(R"({"grid": {"N": "many"}})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config(R"({"ensemble": {"target_infidelity": 0.5}})"), qrcli::ConfigError);
    CHECK_THROWS_AS(qrcli::parse_config("{"), qrcli::ConfigError);
    try {
        qrcli::parse_config(R"({"grid": {"N": 2}})");
        FAIL("expected a config error");
    } catch (const qrcli::ConfigError &e) {
        CHECK(std::string(e.what()).find("grid.N") != std::string::npos);
    }
}

TEST_CASE("status to exit code mapping")
{
    CHECK(qrcli::exit_code_for(QR_OK) == 0);
    CHECK(qrcli::exit_code_for(QR_INVALID_GRID) == 1);
    CHECK(qrcli::exit_code_for(QR_IO_ERROR) == 1);
    CHECK(qrcli::exit_code_for(QR_NO_OPTIMUM_FOUND) == 2);
    CHECK(qrcli::exit_code_for(QR_INSUFFICIENT_DATA) == 2);
    CHECK(qrcli::exit_code_for(QR_NOT_AT_OPTIMUM) == 2);
}

TEST_CASE("staged artifact directories")
{
    TempDir dir;
    {
        qrcli::StagedDir out(dir / "cmd");
        out.write("a.csv", "1\n");
    }
    CHECK(!fs::exists(dir / "cmd"));
    {
        qrcli::StagedDir out(dir / "cmd");
        out.write("a.csv", "1\n");
        out.commit();
    }
    CHECK(slurp(dir / "cmd" / "a.csv") == "1\n");
    {
        qrcli::StagedDir out(dir / "cmd");
        out.write("b.csv", "2\n");
        out.commit();
    }
    CHECK(!fs::exists(dir / "cmd" / "a.csv"));
    CHECK(slurp(dir / "cmd" / "b.csv") == "2\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir.path())) {
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("usage and configuration errors exit with 1")
{
    TempDir dir;
    const std::string out = " --out '" + (dir / "out").string() + "'";
    CHECK(cli(dir, "").code == 1);
    CHECK(cli(dir, "frobnicate" + out).code == 1);
    CHECK(cli(dir, "--backend newton optimize" + out).code == 1);
    CHECK(cli(dir, "--threads 0 optimize" + out).code == 1);
    CHECK(cli(dir, "--config '" + (dir / "missing.json").string() + "' optimize" + out).code == 1);

    spit(dir / "n2.json", R"({"grid": {"N": 2}})");
    const auto r = cli(dir, "--config '" + (dir / "n2.json").string() + "' optimize" + out);
    CHECK(r.code == 1);
    CHECK(r.err.find("grid.N") != std::string::npos);
    spit(dir / "extra.json", R"({"optimiser": {}})");
    CHECK(cli(dir, "--config '" + (dir / "extra.json").string() + "' optimize" + out).code == 1);
    CHECK(!fs::exists(dir / "out"));

    const auto missing = cli(dir, "hessian" + out);
    CHECK(missing.code == 1);
    CHECK(missing.err.find("run `optimize` first") != std::string::npos);
    CHECK(!fs::exists(dir / "out" / "hessian"));
    CHECK(cli(dir, "reproduce fig9" + out).code == 1);
}

TEST_CASE("harmonic optimize and hessian")
{
    TempDir dir;
    const std::string base = harmonic_config(dir);
    REQUIRE(cli(dir, base + " optimize").code == 0);
    const auto manifest = json::parse(slurp(dir / "out" / "optimize" / "manifest.json"));
    CHECK(manifest.at("result").at("infidelity").get<double>() <= 1e-10);
    CHECK(manifest.at("success").get<bool>());
    CHECK(fs::exists(dir / "out" / "optimize" / "pulse.csv"));

    REQUIRE(cli(dir, base + " hessian").code == 0);
    const auto spectrum = json::parse(slurp(dir / "out" / "hessian" / "spectrum.json"));
    CHECK(spectrum.at("M").get<int>() >= 1);
    CHECK(spectrum.at("M").get<int>() <= 2);
    const auto hm = json::parse(slurp(dir / "out" / "hessian" / "manifest.json"));
    CHECK(hm.at("rank_one").contains("discrepancy"));
    CHECK(hm.at("symmetry_error").get<double>() <= 1e-8);

    const std::string compare = harmonic_config(dir, R"(, "hessian": {"compare_with": "gateaux"})");
    REQUIRE(cli(dir, compare + " --backend fd hessian").code == 0);
    const auto report = json::parse(slurp(dir / "out" / "hessian" / "compare.json"));
    CHECK(report.at("agree").get<bool>());
    CHECK(report.at("relative_difference").get<double>() <= 1e-4);
    // optimize output is untouched by later commands
    CHECK(json::parse(slurp(dir / "out" / "optimize" / "manifest.json")) == manifest);
}

TEST_CASE("Landau-Zener optimize writes a monotone trace")
{
    TempDir dir;
    REQUIRE(cli(dir, "--out '" + (dir / "out").string() + "' optimize").code == 0);
    const auto rows = read_csv(dir / "out" / "optimize" / "trace.csv");
    REQUIRE(rows.size() >= 3);
    CHECK(rows[0] == std::vector<std::string>{"iteration", "cost"});
    for (std::size_t k = 2; k < rows.size(); ++k) {
        CHECK(std::stod(rows[k][1]) <= std::stod(rows[k - 1][1]));
    }
    CHECK(std::stod(rows.back()[1]) <= 1e-4);

    spit(dir / "short.json", R"({"optimizer": {"max_iters": 1}})");
    const auto r = cli(dir, "--config '" + (dir / "short.json").string() + "' --out '" + (dir / "o2").string() +
                                "' optimize");
    CHECK(r.code == 2);
}

TEST_CASE("full pipeline is deterministic in the seed")
{
    TempDir dir;
    auto pipeline = [&](const std::string &name, const std::string &seed) {
        const std::string args = "--seed " + seed + " --out '" + (dir / name).string() + "' ";
        for (const char *cmd : {"optimize", "hessian", "calibrate", "ensemble", "verify"}) {
            CAPTURE(cmd);
            REQUIRE(cli(dir, args + cmd).code == 0);
        }
    };
    pipeline("a", "42");
    pipeline("b", "42");
    pipeline("c", "43");

    std::size_t csvs = 0;
    for (const auto &e : fs::directory_iterator(dir / "a" / "ensemble")) {
        if (e.path().extension() == ".csv") {
            ++csvs;
            CHECK(slurp(e.path()) == slurp(dir / "b" / "ensemble" / e.path().filename()));
        }
    }
    CHECK(csvs >= 3);
    CHECK(slurp(dir / "a" / "verify" / "verification.csv") == slurp(dir / "b" / "verify" / "verification.csv"));
    CHECK(slurp(dir / "a" / "ensemble" / "ensemble.csv") != slurp(dir / "c" / "ensemble" / "ensemble.csv"));

    const auto report = json::parse(slurp(dir / "a" / "verify" / "report.json"));
    CHECK(report.at("report").at("pass_fraction").get<double>() >= 0.9);
    const auto manifest = json::parse(slurp(dir / "a" / "ensemble" / "manifest.json"));
    CHECK(manifest.at("ensemble").at("seed").get<std::uint64_t>() == 42);
}

TEST_CASE("ensemble without accepted draws exits with 2")
{
    TempDir dir;
    spit(dir / "hot.json", R"({"ensemble": {"count": 10, "sampler": {"strength_min": 5, "strength_max": 6}}})");
    const std::string args = "--config '" + (dir / "hot.json").string() + "' --out '" + (dir / "out").string() + "' ";
    REQUIRE(cli(dir, args + "optimize").code == 0);
    REQUIRE(cli(dir, args + "hessian").code == 0);
    REQUIRE(cli(dir, args + "calibrate").code == 0);
    CHECK(cli(dir, args + "ensemble").code == 2);
    CHECK(cli(dir, args + "verify").code == 2);
}

TEST_CASE("figure reproduction")
{
    TempDir dir;
    const std::string out = "--out '" + (dir / "out").string() + "' ";
    REQUIRE(cli(dir, out + "reproduce fig3").code == 0);
    const auto fig3 = read_csv(dir / "out" / "reproduce" / "fig3" / "fig3.csv");
    REQUIRE(fig3.size() == 51);
    CHECK(fig3[0] == std::vector<std::string>{"draw", "criterion_I", "exact_infidelity", "threshold"});
    for (std::size_t k = 1; k < fig3.size(); ++k) {
        CHECK(fig3[k].size() == 4);
        CHECK(std::stod(fig3[k][3]) == 0.01);
    }

    REQUIRE(cli(dir, out + "reproduce fig2a").code == 0);
    const auto fig2a = read_csv(dir / "out" / "reproduce" / "fig2a" / "fig2a.csv");
    bool saw_zero = false;
    for (std::size_t k = 1; k < fig2a.size(); ++k) {
        if (std::stod(fig2a[k][1]) == 0.0) {
            saw_zero = true;
            CHECK(std::stod(fig2a[k][2]) <= 1e-12);
            CHECK(std::stod(fig2a[k][3]) == 0.0);
        }
    }
    CHECK(saw_zero);

    REQUIRE(cli(dir, out + "reproduce fig2b").code == 0);
    const auto m = json::parse(slurp(dir / "out" / "reproduce" / "fig2b" / "manifest.json"));
    for (const char *key : {"a", "b", "c"}) {
        CHECK(m.at("fit").contains(key));
    }
    CHECK(fs::exists(dir / "out" / "reproduce" / "fig3" / "fig3.csv"));
}
