#include "mimtwin/config.hpp"

#include "mimtwin/backaction.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mimtwin::config {

using constants::two_pi;
using nlohmann::json;

namespace {

constexpr double omega_mech = two_pi * 1.30e6;
constexpr double m_eff_default = 2.1e-11;

// Reads an object's keys, tracking the field path and rejecting leftovers.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    void finish() const
    {
        for (const auto& [key, value] : node_.items())
            if (!seen_.contains(key))
                throw ConfigError(path_ + "." + key + ": unknown key");
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    std::string path(const std::string& key) const { return path_ + "." + key; }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number())
                throw ConfigError(path(key) + ": expected a number");
            out = v->get<double>();
            if (!std::isfinite(out))
                throw ConfigError(path(key) + ": must be finite");
        }
    }

    // Value in Hz stored as rad/s.
    void angular(const std::string& key, double& out)
    {
        double hz = out / two_pi;
        number(key, hz);
        out = two_pi * hz;
    }

    template <class Int>
    void integer(const std::string& key, Int& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (std::is_unsigned_v<Int> && v->get<long long>() < 0))
                throw ConfigError(path(key) + ": expected a non-negative integer");
            out = v->get<Int>();
        }
    }

    void text(const std::string& key, std::string& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_string())
                throw ConfigError(path(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }

    void list(const std::string& key, std::vector<double>& out, double scale = 1.0)
    {
        if (const json* v = find(key)) {
            if (!v->is_array())
                throw ConfigError(path(key) + ": expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number())
                    throw ConfigError(path(key) + "[" + std::to_string(i) + "]: expected a number");
                out.push_back(scale * (*v)[i].get<double>());
            }
        }
    }

    Section child(const std::string& key)
    {
        seen_.insert(key);
        return Section(node_.at(key), path(key));
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> log_spaced(double lo, double hi, std::size_t n)
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = lo * std::pow(hi / lo, t);
    }
    return out;
}

template <class F>
void wrap(const std::string& path, F&& check)
{
    try {
        check();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void read_into(const json& doc, RunConfig& cfg)
{
    Section root(doc, "config");
    root.find("preset");
    root.integer("seed", cfg.seed);

    if (root.has("cavity")) {
        Section s = root.child("cavity");
        s.number("length_m", cfg.cavity.length);
        s.number("roc_m", cfg.cavity.roc);
        s.number("wavelength_m", cfg.cavity.wavelength);
        s.number("t1", cfg.cavity.t1);
        s.number("t2", cfg.cavity.t2);
        s.number("internal_loss", cfg.cavity.internal_loss);
        s.finish();
    }
    if (root.has("membrane")) {
        Section s = root.child("membrane");
        s.number("thickness_m", cfg.membrane.thickness);
        s.number("refractive_index", cfg.membrane.refractive_index);
        s.number("position_m", cfg.membrane.position);
        s.number("defect_diameter_m", cfg.membrane.defect_diameter);
        s.number("tilt_rad", cfg.membrane.tilt);
        s.number("mode_overlap", cfg.membrane.mode_overlap);
        s.finish();
    }
    if (root.has("mechanical")) {
        Section s = root.child("mechanical");
        double f = cfg.mech.omega_m / two_pi;
        double q = cfg.mech.quality_factor;
        double m = cfg.mech.m_eff;
        s.number("frequency_hz", f);
        s.number("quality_factor", q);
        s.number("m_eff_kg", m);
        std::optional<double> x_zpf;
        if (s.has("x_zpf_m")) {
            double x = 0.0;
            s.number("x_zpf_m", x);
            x_zpf = x;
        }
        wrap("config.mechanical", [&] { cfg.mech = MechanicalMode::from_mass(two_pi * f, q, m); });
        if (x_zpf && !(std::abs(*x_zpf - cfg.mech.x_zpf) <= 1e-6 * cfg.mech.x_zpf))
            throw ConfigError(s.path("x_zpf_m") + ": inconsistent with m_eff_kg and frequency_hz (expected "
                              + spectra::format_double(cfg.mech.x_zpf) + ")");
        s.finish();
    }
    if (root.has("drive")) {
        Section s = root.child("drive");
        s.number("input_power_w", cfg.drive.input_power);
        s.angular("detuning_hz", cfg.drive.detuning);
        s.number("mode_match", cfg.drive.mode_match);
        s.number("kappa_ext_ratio", cfg.drive.kappa_ext_ratio);
        s.finish();
    }
    if (root.has("heating")) {
        Section s = root.child("heating");
        std::string name = cfg.heating_preset;
        s.text("preset", name);
        if (name != cfg.heating_preset) {
            wrap(s.path("preset"), [&] { cfg.heating = heating::preset(name); });
            cfg.heating_preset = name;
        }
        s.number("n_base", cfg.heating.n_base);
        s.number("p_ref_w", cfg.heating.p_ref);
        s.number("heat_coeff", cfg.heating.heat_coeff);
        s.number("beta_temp", cfg.heating.beta_temp);
        s.number("beta_damp", cfg.heating.beta_damp);
        s.angular("gamma_ref_hz", cfg.heating.gamma_ref);
        s.finish();
    }
    if (root.has("scene")) {
        Section s = root.child("scene");
        s.angular("g0_hz", cfg.scene.g0);
        s.number("transduction_k", cfg.scene.transduction_k);
        s.number("shot_coeff", cfg.scene.shot_coeff);
        s.integer("n_averages", cfg.scene.n_averages);
        s.finish();
    }
    if (root.has("series")) {
        Section s = root.child("series");
        s.list("powers_w", cfg.series.powers);
        if (s.has("power_range_w")) {
            if (s.has("powers_w"))
                throw ConfigError(s.path("power_range_w") + ": give either powers_w or power_range_w");
            std::vector<double> range;
            s.list("power_range_w", range);
            if (range.size() != 3 || !(range[0] > 0.0) || !(range[1] > range[0]) || !(range[2] >= 2.0))
                throw ConfigError(s.path("power_range_w") + ": expected [min, max, count] with 0 < min < max");
            cfg.series.powers = log_spaced(range[0], range[1], static_cast<std::size_t>(range[2]));
        }
        s.list("detunings_hz", cfg.series.detunings, two_pi);
        s.integer("n_bins", cfg.series.n_bins);
        s.number("span_linewidths", cfg.series.span_linewidths);
        s.finish();
    }
    if (root.has("pdh")) {
        Section s = root.child("pdh");
        s.number("mod_freq_hz", cfg.pdh.mod_freq_hz);
        s.number("span_hz", cfg.pdh.span_hz);
        s.integer("n_points", cfg.pdh.n_points);
        s.number("noise_rel", cfg.pdh.noise_rel);
        s.finish();
    }
    if (root.has("gorodetsky")) {
        Section s = root.child("gorodetsky");
        s.number("t_calibration_k", cfg.gorodetsky.t_calibration);
        s.number("t_bath_k", cfg.gorodetsky.t_bath);
        s.number("power_w", cfg.gorodetsky.power);
        s.number("beta", cfg.gorodetsky.beta);
        s.number("tone_offset_linewidths", cfg.gorodetsky.tone_offset_linewidths);
        s.integer("n_bins", cfg.gorodetsky.n_bins);
        s.finish();
    }
    if (root.has("alignment")) {
        Section s = root.child("alignment");
        s.number("fringe_period_m", cfg.alignment.fringe_period);
        s.number("wavelength_m", cfg.alignment.wavelength);
        s.finish();
    }
    root.finish();
}

} // namespace

void RunConfig::validate() const
{
    wrap("config.cavity", [&] { cavity.validate(); });
    wrap("config.membrane", [&] { membrane.validate(cavity); });
    wrap("config.mechanical", [&] { mech.validate(1e-6); });
    if (!(drive.input_power > 0.0))
        throw ConfigError("config.drive.input_power_w: must be positive");
    if (!(drive.mode_match > 0.0 && drive.mode_match <= 1.0))
        throw ConfigError("config.drive.mode_match: must lie in (0, 1]");
    if (!(drive.kappa_ext_ratio > 0.0 && drive.kappa_ext_ratio <= 1.0))
        throw ConfigError("config.drive.kappa_ext_ratio: must lie in (0, 1]");
    wrap("config.heating", [&] { heating.validate(); });
    if (!(scene.g0 > 0.0))
        throw ConfigError("config.scene.g0_hz: must be positive");
    if (!(gorodetsky.t_calibration > 0.0) || !(gorodetsky.t_bath > 0.0) || !(gorodetsky.power > 0.0))
        throw ConfigError("config.gorodetsky: temperatures and power must be positive");
    if (!(alignment.fringe_period > 0.0) || !(alignment.wavelength > 0.0))
        throw ConfigError("config.alignment: fringe period and wavelength must be positive");
    if (series.powers.empty() || series.detunings.empty())
        throw ConfigError("config.series: need at least one power and one detuning");
    for (std::size_t i = 0; i < series.powers.size(); ++i)
        if (!(series.powers[i] > 0.0) || (i > 0 && !(series.powers[i] > series.powers[i - 1])))
            throw ConfigError("config.series.powers_w: must be positive and strictly ascending");
    if (series.n_bins < 64)
        throw ConfigError("config.series.n_bins: need at least 64 bins");
    if (!(series.span_linewidths > 2.0))
        throw ConfigError("config.series.span_linewidths: must exceed 2");
    if (!(pdh.mod_freq_hz > 0.0) || !(pdh.span_hz > 0.0) || pdh.n_points < 16 || !(pdh.noise_rel >= 0.0))
        throw ConfigError("config.pdh: invalid modulation, span, point count or noise level");
    wrap("config.scene", [&] { scene_template().validate(); });
}

optics::CavityProps RunConfig::cavity_props() const
{
    return optics::empty_cavity_props(cavity);
}

double RunConfig::laser_omega() const
{
    return two_pi * constants::speed_of_light / cavity.wavelength;
}

spectra::SpectrumScene RunConfig::scene_template() const
{
    const optics::CavityProps props = cavity_props();
    spectra::SpectrumScene s;
    s.kappa = props.kappa;
    s.fsr_hz = props.fsr_hz;
    s.mech = mech;
    s.drive.input_power = drive.input_power;
    s.drive.detuning = drive.detuning;
    s.drive.mode_match = drive.mode_match;
    s.drive.kappa_ext = drive.kappa_ext_ratio * props.kappa;
    s.drive.laser_omega = laser_omega();
    s.heating = heating;
    s.g0 = scene.g0;
    s.transduction_k = scene.transduction_k;
    s.shot_coeff = scene.shot_coeff;
    s.n_averages = scene.n_averages;
    s.rng_seed = seed;
    return s;
}

std::vector<std::string> preset_names()
{
    return {"paper-fig5", "no-heating", "literature-heating"};
}

RunConfig preset(std::string_view name)
{
    RunConfig cfg;
    cfg.preset = std::string(name);

    // kappa/2pi = 2.0 MHz with 95 % of the loss through the input mirror
    cfg.cavity.length = 24e-3;
    cfg.cavity.roc = 25e-3;
    cfg.cavity.wavelength = 805e-9;
    const double loss = two_pi * 2.0e6 / (constants::speed_of_light / (2.0 * cfg.cavity.length));
    cfg.cavity.t1 = 0.95 * loss;
    cfg.cavity.t2 = 0.025 * loss;
    cfg.cavity.internal_loss = 0.025 * loss;

    cfg.membrane.thickness = 50e-9;
    cfg.membrane.refractive_index = 2.0;
    cfg.membrane.position = 1e-3;
    cfg.membrane.defect_diameter = 230e-6;
    cfg.membrane.tilt = 0.0;
    cfg.membrane.mode_overlap = 1.0;

    cfg.mech = MechanicalMode::from_mass(omega_mech, 1e9, m_eff_default);

    cfg.drive.input_power = 5e-6;
    cfg.drive.detuning = -two_pi * 1.5e6;
    cfg.drive.mode_match = 0.8;
    cfg.drive.kappa_ext_ratio = 0.95;

    cfg.scene.g0 = two_pi * 1.2;

    cfg.series.powers = log_spaced(0.5e-6, 10e-6, 12);
    cfg.series.detunings = {-two_pi * 1.0e6, -two_pi * 1.5e6, -two_pi * 2.0e6};

    cfg.seed = 20240601;

    if (name == "paper-fig5")
        cfg.heating_preset = "measured";
    else if (name == "no-heating")
        cfg.heating_preset = "none";
    else if (name == "literature-heating")
        cfg.heating_preset = "literature";
    else
        throw ConfigError("preset: unknown name '" + std::string(name) + "'");
    cfg.heating = heating::preset(cfg.heating_preset);
    return cfg;
}

RunConfig parse_config(std::string_view json_text, std::optional<RunConfig> base)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("config: expected a JSON object");
    RunConfig cfg;
    if (doc.contains("preset")) {
        if (!doc["preset"].is_string())
            throw ConfigError("config.preset: expected a string");
        cfg = preset(doc["preset"].get<std::string>());
    } else {
        cfg = base ? *base : preset("paper-fig5");
    }
    read_into(doc, cfg);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<RunConfig> base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_json(const RunConfig& cfg)
{
    json doc;
    doc["preset"] = cfg.preset;
    doc["seed"] = cfg.seed;
    doc["cavity"] = {{"length_m", cfg.cavity.length},   {"roc_m", cfg.cavity.roc},
                     {"wavelength_m", cfg.cavity.wavelength}, {"t1", cfg.cavity.t1},
                     {"t2", cfg.cavity.t2},             {"internal_loss", cfg.cavity.internal_loss}};
    doc["membrane"] = {{"thickness_m", cfg.membrane.thickness},
                       {"refractive_index", cfg.membrane.refractive_index},
                       {"position_m", cfg.membrane.position},
                       {"defect_diameter_m", cfg.membrane.defect_diameter},
                       {"tilt_rad", cfg.membrane.tilt},
                       {"mode_overlap", cfg.membrane.mode_overlap}};
    doc["mechanical"] = {{"frequency_hz", cfg.mech.omega_m / two_pi},
                         {"quality_factor", cfg.mech.quality_factor},
                         {"m_eff_kg", cfg.mech.m_eff},
                         {"x_zpf_m", cfg.mech.x_zpf}};
    doc["drive"] = {{"input_power_w", cfg.drive.input_power},
                    {"detuning_hz", cfg.drive.detuning / two_pi},
                    {"mode_match", cfg.drive.mode_match},
                    {"kappa_ext_ratio", cfg.drive.kappa_ext_ratio}};
    doc["heating"] = {{"preset", cfg.heating_preset},         {"n_base", cfg.heating.n_base},
                      {"p_ref_w", cfg.heating.p_ref},           {"heat_coeff", cfg.heating.heat_coeff},
                      {"beta_temp", cfg.heating.beta_temp},     {"beta_damp", cfg.heating.beta_damp},
                      {"gamma_ref_hz", cfg.heating.gamma_ref / two_pi}};
    doc["scene"] = {{"g0_hz", cfg.scene.g0 / two_pi},
                    {"transduction_k", cfg.scene.transduction_k},
                    {"shot_coeff", cfg.scene.shot_coeff},
                    {"n_averages", cfg.scene.n_averages}};
    std::vector<double> det_hz;
    for (double d : cfg.series.detunings)
        det_hz.push_back(d / two_pi);
    doc["series"] = {{"powers_w", cfg.series.powers},
                     {"detunings_hz", det_hz},
                     {"n_bins", cfg.series.n_bins},
                     {"span_linewidths", cfg.series.span_linewidths}};
    doc["pdh"] = {{"mod_freq_hz", cfg.pdh.mod_freq_hz},
                  {"span_hz", cfg.pdh.span_hz},
                  {"n_points", cfg.pdh.n_points},
                  {"noise_rel", cfg.pdh.noise_rel}};
    doc["gorodetsky"] = {{"t_calibration_k", cfg.gorodetsky.t_calibration},
                         {"t_bath_k", cfg.gorodetsky.t_bath},
                         {"power_w", cfg.gorodetsky.power},
                         {"beta", cfg.gorodetsky.beta},
                         {"tone_offset_linewidths", cfg.gorodetsky.tone_offset_linewidths},
                         {"n_bins", cfg.gorodetsky.n_bins}};
    doc["alignment"] = {{"fringe_period_m", cfg.alignment.fringe_period},
                        {"wavelength_m", cfg.alignment.wavelength}};
    return doc.dump(2) + "\n";
}

} // namespace mimtwin::config
