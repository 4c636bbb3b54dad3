// Command-line front end: design report, position sweep, cooling-series
// simulation and re-fitting of stored spectra.

#include "mimtwin/analysis.hpp"
#include "mimtwin/config.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"
#include "mimtwin/optics.hpp"
#include "mimtwin/report.hpp"
#include "mimtwin/spectrum_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace mimtwin;
using constants::two_pi;
using spectra::format_double;

namespace {

enum Exit : int { ok = 0, input_error = 2, numerical_error = 3, no_report = 4 };

// Clipping losses below this keep the cavity sideband resolved.
constexpr double clipping_budget = 1e-5;

struct Common {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

config::RunConfig load(const Common& c)
{
    std::optional<config::RunConfig> base;
    if (!c.preset_name.empty())
        base = config::preset(c.preset_name);
    config::RunConfig cfg = c.config_path.empty() ? (base ? *base : config::preset("paper-fig5"))
                                                  : config::load_config(c.config_path, base);
    if (c.seed)
        cfg.seed = *c.seed;
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot write");
    out << text;
}

// Output goes to stdout when no directory is given.
class Sink {
public:
    explicit Sink(std::string dir) : dir_(std::move(dir))
    {
        if (!dir_.empty())
            fs::create_directories(dir_);
    }

    void emit(const std::string& name, const std::string& text) const
    {
        if (dir_.empty())
            std::cout << "## " << name << '\n' << text;
        else
            write_file(fs::path(dir_) / name, text);
    }

    bool to_files() const { return !dir_.empty(); }
    fs::path path(const std::string& name) const { return fs::path(dir_) / name; }

private:
    std::string dir_;
};

int cmd_design(const Common& common)
{
    const config::RunConfig cfg = load(common);
    const optics::CavityProps props = cfg.cavity_props();
    const auto sheet = optics::membrane_coefficients(cfg.membrane, cfg.cavity.wavelength);
    const double r = std::abs(sheet.r);
    const double spot = props.mode.spot_radius_at(cfg.membrane.position);
    const double clip = optics::clipping_loss(spot, cfg.membrane.defect_diameter);
    const double g0max = optics::g0_max_analytic(cfg.cavity, r, cfg.mech.x_zpf, cfg.membrane.mode_overlap);

    std::ostringstream os;
    os << "fsr_hz=" << format_double(props.fsr_hz) << '\n'
       << "kappa_hz=" << format_double(props.kappa / two_pi) << '\n'
       << "kappa_ext_hz=" << format_double(props.kappa_ext / two_pi) << '\n'
       << "finesse=" << format_double(props.finesse) << '\n'
       << "waist_m=" << format_double(props.mode.waist) << '\n'
       << "rayleigh_range_m=" << format_double(props.mode.rayleigh_range) << '\n'
       << "spot_at_membrane_m=" << format_double(spot) << '\n'
       << "membrane_reflectivity=" << format_double(r) << '\n'
       << "x_zpf_m=" << format_double(cfg.mech.x_zpf) << '\n'
       << "g0_max_hz=" << format_double(g0max / two_pi) << '\n'
       << "clipping_loss=" << format_double(clip) << '\n'
       << "clipping_within_budget=" << (clip < clipping_budget ? 1 : 0) << '\n'
       << "tilt_double_pass_rad="
       << format_double(optics::tilt_from_fringes(cfg.alignment.wavelength, cfg.alignment.fringe_period)) << '\n'
       << "tilt_single_pass_rad="
       << format_double(optics::tilt_from_fringes_single_pass(cfg.alignment.wavelength, cfg.alignment.fringe_period))
       << '\n';
    Sink(common.out_dir).emit("design.txt", os.str());
    return Exit::ok;
}

int cmd_sweep_position(const Common& common, int n_modes)
{
    if (n_modes < 2) {
        std::cerr << "sweep-position: --n-modes must be at least 2\n";
        return Exit::input_error;
    }
    const config::RunConfig cfg = load(common);
    const auto sheet = optics::membrane_coefficients(cfg.membrane, cfg.cavity.wavelength);
    const long first = optics::nearest_mode_index(cfg.cavity);
    const auto modes = optics::mim_resonances(cfg.cavity, sheet, cfg.membrane.position, first, first + n_modes - 1);

    std::ostringstream table;
    table << "mode,omega_rad_s,delta_fsr_hz\n";
    for (const auto& m : modes)
        table << m.mode << ',' << format_double(m.omega) << ',' << format_double(m.delta_fsr_hz) << '\n';

    const auto profile = optics::coupling_vs_position(cfg.cavity, cfg.membrane, cfg.mech);
    std::ostringstream curve;
    curve << "z_m,g0_hz,domega_dz_rad_s_per_m\n";
    for (const auto& s : profile.samples)
        curve << format_double(s.z) << ',' << format_double(s.g0 / two_pi) << ',' << format_double(s.domega_dz)
              << '\n';

    const Sink sink(common.out_dir);
    sink.emit("modes.csv", table.str());
    sink.emit("coupling.csv", curve.str());
    return Exit::ok;
}

int cmd_simulate_series(const Common& common)
{
    const config::RunConfig cfg = load(common);
    const Sink sink(common.out_dir.empty() ? std::string("series_out") : common.out_dir);
    fs::create_directories(sink.path("spectra"));

    analysis::SeriesOptions options;
    options.n_bins = cfg.series.n_bins;
    options.span_linewidths = cfg.series.span_linewidths;
    options.on_spectrum = [&](std::size_t index, const spectra::Spectrum& spectrum) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%03zu.csv", index);
        spectra::save_spectrum(sink.path("spectra") / name, spectrum);
    };

    analysis::ThermometryReport report;
    try {
        report = analysis::run_cooling_series(cfg.scene_template(), cfg.series.powers, cfg.series.detunings, options);
    } catch (const NumericalError& e) {
        std::cerr << "simulate-series: " << e.what() << '\n';
        return Exit::no_report;
    }
    for (std::size_t i = 0; i < report.points.size(); ++i)
        if (!report.points[i].ok)
            std::cerr << "point " << i << ": " << report.points[i].error << '\n';

    try {
        report.t_bath_estimate = analysis::run_gorodetsky_protocol(cfg.scene_template(), cfg.gorodetsky).t_bath;
    } catch (const std::exception& e) {
        std::cerr << "gorodetsky calibration: " << e.what() << '\n';
    }

    const auto render = [&](auto writer) {
        std::ostringstream os;
        writer(os, report);
        return os.str();
    };
    sink.emit("report.csv", render(analysis::write_report_table));
    sink.emit("summary.txt", render(analysis::write_report_summary));
    sink.emit("frequency_shift.csv", render(analysis::write_frequency_shift_table));
    sink.emit("background.csv", render(analysis::write_background_table));
    sink.emit("linewidth.csv", render(analysis::write_linewidth_table));
    sink.emit("occupation.csv", render(analysis::write_occupation_table));
    sink.emit("config.json", config::to_json(cfg));

    // Linewidth calibration sweep taken alongside the series.
    const auto scene = cfg.scene_template();
    const auto sweep = spectra::synthesize_error_sweep(scene.kappa, scene.drive.kappa_ext,
                                                       two_pi * cfg.pdh.mod_freq_hz, cfg.pdh.span_hz,
                                                       cfg.pdh.n_points, cfg.pdh.noise_rel, cfg.seed);
    std::ostringstream pdh_text;
    spectra::write_error_sweep(pdh_text, sweep);
    sink.emit("pdh_sweep.csv", pdh_text.str());
    std::cout << render(analysis::write_report_summary);
    return Exit::ok;
}

struct FitRow {
    std::string file;
    std::string status = "ok";
    std::optional<spectra::SpectrumMetadata> meta;
    analysis::LorentzianFit fit;
};

int cmd_fit(const std::vector<std::string>& files, bool powerlaw, bool pdh, const std::string& out_dir)
{
    if (files.empty()) {
        std::cerr << "fit: no input files\n";
        return Exit::input_error;
    }
    int code = Exit::ok;
    std::ostringstream os;

    if (pdh) {
        os << "file,status,kappa_hz,kappa_err_hz,offset_hz,gain\n";
        for (const auto& file : files) {
            try {
                std::ifstream in(file);
                if (!in)
                    throw std::runtime_error("cannot open");
                const auto sweep = spectra::read_error_sweep(in);
                const auto fit = analysis::fit_pdh(sweep);
                os << file << ',' << (fit.converged ? "ok" : "not_converged") << ','
                   << format_double(fit.kappa / two_pi) << ',' << format_double(fit.kappa_err / two_pi) << ','
                   << format_double(fit.offset / two_pi) << ',' << format_double(fit.gain) << '\n';
                if (!fit.converged)
                    code = std::max(code, static_cast<int>(Exit::numerical_error));
            } catch (const std::exception& e) {
                std::cerr << file << ": " << e.what() << '\n';
                os << file << ",error,,,,\n";
                code = Exit::input_error;
            }
        }
        Sink(out_dir).emit("fit_pdh.csv", os.str());
        return code;
    }

    std::vector<FitRow> rows;
    for (const auto& file : files) {
        FitRow row;
        row.file = file;
        try {
            const auto spectrum = spectra::load_spectrum(file);
            row.meta = spectrum.metadata();
            row.fit = analysis::fit_lorentzian(spectrum);
            if (!row.fit.converged)
                row.status = "not_converged";
        } catch (const std::exception& e) {
            std::cerr << file << ": " << e.what() << '\n';
            row.status = "error";
            code = Exit::input_error;
        }
        rows.push_back(std::move(row));
    }

    os << "file,status,power_w,detuning_hz,center_hz,center_err_hz,fwhm_hz,fwhm_err_hz,area,area_err,background,"
          "background_err\n";
    for (const auto& r : rows) {
        os << r.file << ',' << r.status;
        if (r.meta) {
            const auto& f = r.fit;
            os << ',' << format_double(r.meta->power_w) << ',' << format_double(r.meta->detuning_hz) << ','
               << format_double(f.center) << ',' << format_double(f.center_err) << ',' << format_double(f.fwhm) << ','
               << format_double(f.fwhm_err) << ',' << format_double(f.area) << ',' << format_double(f.area_err) << ','
               << format_double(f.background) << ',' << format_double(f.background_err);
        } else {
            os << ",,,,,,,,,,";
        }
        os << '\n';
    }
    const Sink sink(out_dir);
    sink.emit("fit.csv", os.str());

    if (powerlaw) {
        std::map<double, std::vector<analysis::PowerLawPoint>> groups;
        for (const auto& r : rows)
            if (r.status == "ok" && r.meta && r.meta->power_w > 0.0) {
                const double p2 = r.meta->power_w * r.meta->power_w;
                groups[r.meta->detuning_hz].push_back({r.meta->power_w, r.fit.area / p2, r.fit.area_err / p2});
            }
        std::vector<std::vector<analysis::PowerLawPoint>> list;
        for (auto& [detuning, pts] : groups)
            if (pts.size() >= 3)
                list.push_back(std::move(pts));
        std::ostringstream summary;
        try {
            const auto fit = analysis::fit_powerlaw_grouped(list);
            summary << "slope_s=" << format_double(fit.exponent_s) << '\n'
                    << "sigma_s=" << format_double(fit.sigma_s) << '\n'
                    << "alpha=" << format_double(1.0 + fit.exponent_s) << '\n'
                    << "n_points=" << fit.n_points << '\n';
        } catch (const std::exception& e) {
            std::cerr << "powerlaw: " << e.what() << '\n';
            return code == Exit::ok ? static_cast<int>(Exit::no_report) : code;
        }
        sink.emit("powerlaw.txt", summary.str());
        if (sink.to_files())
            std::cout << summary.str();
    }
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Membrane-in-the-middle optomechanics digital twin"};
    app.require_subcommand(1);

    Common common;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--preset", common.preset_name, "paper-fig5 | no-heating | literature-heating");
        sub->add_option("--seed", common.seed, "random seed override");
        sub->add_option("--out", common.out_dir, "output directory");
    };

    CLI::App* design = app.add_subcommand("design", "cavity, membrane and coupling design report");
    add_common(design);

    int n_modes = 24;
    CLI::App* sweep = app.add_subcommand("sweep-position", "mode table and coupling versus membrane position");
    add_common(sweep);
    sweep->add_option("--n-modes", n_modes, "number of consecutive cavity modes");

    CLI::App* series = app.add_subcommand("simulate-series", "synthesize and analyse a cooling power series");
    add_common(series);

    std::vector<std::string> files;
    bool powerlaw = false;
    bool pdh = false;
    std::string fit_out;
    CLI::App* fit = app.add_subcommand("fit", "fit stored spectra or PDH sweeps");
    fit->add_option("files", files, "input files")->required();
    fit->add_flag("--powerlaw", powerlaw, "fit A/P^2 versus power across files");
    fit->add_flag("--pdh", pdh, "inputs are PDH error-signal sweeps");
    fit->add_option("--out", fit_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(Exit::input_error);
    }

    try {
        if (*design)
            return cmd_design(common);
        if (*sweep)
            return cmd_sweep_position(common, n_modes);
        if (*series)
            return cmd_simulate_series(common);
        if (*fit)
            return cmd_fit(files, powerlaw, pdh, fit_out);
    } catch (const config::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return Exit::input_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return Exit::numerical_error;
    } catch (const InstabilityError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return Exit::numerical_error;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return Exit::input_error;
    }
    return Exit::input_error;
}
