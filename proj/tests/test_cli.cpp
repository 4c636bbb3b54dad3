#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string cli = MIMTWIN_CLI_PATH;

struct Scratch {
    fs::path dir;

    explicit Scratch(const std::string& name)
        : dir(fs::temp_directory_path() / ("mimtwin_cli_" + name + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    fs::path operator/(const std::string& leaf) const { return dir / leaf; }
};

int run(const std::string& args)
{
    const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            header.push_back(cell);
    }
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::map<std::string, std::string> row;
        for (const auto& h : header) {
            if (!std::getline(ss, cell, ','))
                cell.clear();
            row[h] = cell;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::map<std::string, double> read_summary(const fs::path& path)
{
    std::map<std::string, double> out;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            out[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    }
    return out;
}

const std::string small_series = R"({"series": {"power_range_w": [1e-6, 1e-5, 5], "detunings_hz": [-1.5e6]}})";

} // namespace

TEST_CASE("design report")
{
    Scratch s("design");
    REQUIRE(run("design --out " + s.dir.string()) == 0);
    const auto d = read_summary(s / "design.txt");
    CHECK(d.at("fsr_hz") == doctest::Approx(6.245e9).epsilon(1e-3));
    CHECK(d.at("kappa_hz") == doctest::Approx(2.0e6).epsilon(1e-6));
    CHECK(d.at("g0_max_hz") == doctest::Approx(8.0).epsilon(0.1));
    CHECK(d.at("membrane_reflectivity") == doctest::Approx(0.47).epsilon(0.01));
    CHECK(d.at("clipping_within_budget") == 1.0);
    CHECK(d.at("tilt_double_pass_rad") == doctest::Approx(0.52e-3).epsilon(0.01));
}

TEST_CASE("sweep-position: period and the transparent membrane")
{
    Scratch s("sweep");
    REQUIRE(run("sweep-position --n-modes 48 --out " + s.dir.string()) == 0);
    const auto modes = read_csv(s / "modes.csv");
    REQUIRE(modes.size() == 48);
    double scale = 0.0;
    for (const auto& m : modes)
        scale = std::max(scale, std::abs(std::stod(m.at("delta_fsr_hz"))));
    for (std::size_t i = 0; i + 24 < modes.size(); ++i)
        CHECK(std::abs(std::stod(modes[i + 24].at("delta_fsr_hz")) - std::stod(modes[i].at("delta_fsr_hz")))
              <= 1e-6 * scale);
    CHECK_FALSE(read_csv(s / "coupling.csv").empty());

    write_text(s / "clear.json", R"({"membrane": {"refractive_index": 1.0}})");
    const fs::path out = s / "clear";
    REQUIRE(run("sweep-position --config " + (s / "clear.json").string() + " --out " + out.string()) == 0);
    for (const auto& m : read_csv(out / "modes.csv"))
        CHECK(std::stod(m.at("delta_fsr_hz")) == 0.0);

    CHECK(run("sweep-position --n-modes 1 --out " + s.dir.string()) == 2);
}

TEST_CASE("simulate-series: outputs, determinism and re-fit")
{
    Scratch s("series");
    write_text(s / "small.json", small_series);
    const std::string cfg = " --config " + (s / "small.json").string();
    REQUIRE(run("simulate-series" + cfg + " --out " + (s / "a").string()) == 0);
    REQUIRE(run("simulate-series" + cfg + " --out " + (s / "b").string()) == 0);

    for (const char* name : {"report.csv", "summary.txt", "frequency_shift.csv", "background.csv", "linewidth.csv",
                             "occupation.csv", "config.json", "pdh_sweep.csv"}) {
        CHECK(fs::exists(s / "a" / name));
        CHECK(slurp(s / "a" / name) == slurp(s / "b" / name));
    }
    const auto summary = read_summary(s / "a" / "summary.txt");
    CHECK(summary.at("alpha") - summary.at("slope_s") == 1.0);
    CHECK(std::isfinite(summary.at("t_bath_mk")));

    std::vector<std::string> spectra;
    for (const auto& e : fs::directory_iterator(s / "a" / "spectra"))
        spectra.push_back(e.path().string());
    REQUIRE(spectra.size() == 5);
    CHECK(slurp(spectra.front()) == slurp(s / "b" / "spectra" / fs::path(spectra.front()).filename()));

    std::string files;
    for (const auto& f : spectra)
        files += " " + f;
    REQUIRE(run("fit --powerlaw" + files + " --out " + (s / "refit").string()) == 0);
    const auto refit = read_summary(s / "refit" / "powerlaw.txt");
    CHECK(refit.at("slope_s") == doctest::Approx(summary.at("slope_s")).epsilon(1e-9));
    CHECK(refit.at("alpha") - refit.at("slope_s") == 1.0);

    REQUIRE(run("fit --pdh " + (s / "a" / "pdh_sweep.csv").string() + " --out " + (s / "pdh").string()) == 0);
    const auto pdh = read_csv(s / "pdh" / "fit_pdh.csv");
    REQUIRE(pdh.size() == 1);
    CHECK(std::stod(pdh[0].at("kappa_hz")) == doctest::Approx(2.0e6).epsilon(0.02));
}

TEST_CASE("seed override changes the spectra")
{
    Scratch s("seed");
    write_text(s / "small.json", small_series);
    const std::string cfg = " --config " + (s / "small.json").string();
    REQUIRE(run("simulate-series" + cfg + " --seed 1 --out " + (s / "a").string()) == 0);
    REQUIRE(run("simulate-series" + cfg + " --seed 2 --out " + (s / "b").string()) == 0);
    CHECK(slurp(s / "a" / "report.csv") != slurp(s / "b" / "report.csv"));
}

TEST_CASE("fit: a corrupt file is reported per file")
{
    Scratch s("corrupt");
    write_text(s / "small.json", small_series);
    REQUIRE(run("simulate-series --config " + (s / "small.json").string() + " --out " + (s / "run").string()) == 0);
    const fs::path good = s / "run" / "spectra" / "point_000.csv";
    write_text(s / "bad.csv", "# kind=spectrum\n# rbw_hz=1\nfreq_hz,psd\n1,-2\n2,3\n");
    CHECK(run("fit " + good.string() + " " + (s / "bad.csv").string() + " --out " + (s / "fit").string()) == 2);
    const auto rows = read_csv(s / "fit" / "fit.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].at("status") == "ok");
    CHECK(rows[1].at("status") == "error");
}

TEST_CASE("exit codes for invalid input and missing reports")
{
    Scratch s("codes");
    write_text(s / "typo.json", R"({"cavity": {"lenght_m": 0.024}})");
    CHECK(run("design --config " + (s / "typo.json").string()) == 2);
    write_text(s / "zpf.json", R"({"mechanical": {"x_zpf_m": 1e-12}})");
    CHECK(run("design --config " + (s / "zpf.json").string()) == 2);
    CHECK(run("design --config " + (s / "missing.json").string()) == 2);
    CHECK(run("design --preset nope") == 2);
    CHECK(run("no-such-command") == 2);

    write_text(s / "blue.json",
               R"({"series": {"powers_w": [1e-4, 2e-4, 4e-4], "detunings_hz": [1.5e6]}})");
    CHECK(run("simulate-series --config " + (s / "blue.json").string() + " --out " + (s / "blue").string()) == 4);
}
