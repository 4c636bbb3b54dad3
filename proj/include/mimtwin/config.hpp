#pragma once

#include "mimtwin/analysis.hpp"
#include "mimtwin/heating.hpp"
#include "mimtwin/mechanics.hpp"
#include "mimtwin/optics.hpp"
#include "mimtwin/spectra.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mimtwin::config {

struct DriveSettings {
    double input_power = 5e-6; // W
    double detuning = 0.0;     // rad/s
    double mode_match = 0.8;
    double kappa_ext_ratio = 0.95;
};

struct SceneSettings {
    double g0 = 0.0; // rad/s, coupling realised in the experiment
    double transduction_k = 4e8;
    double shot_coeff = 1.0;
    int n_averages = 100;
};

struct SeriesSettings {
    std::vector<double> powers;     // W, ascending
    std::vector<double> detunings;  // rad/s
    std::size_t n_bins = 512;
    double span_linewidths = 60.0;
};

struct PdhSettings {
    double mod_freq_hz = 20e6;
    double span_hz = 30e6;
    std::size_t n_points = 601;
    double noise_rel = 0.01;
};

struct AlignmentSettings {
    double fringe_period = 0.8e-3; // m
    double wavelength = 830e-9;    // m
};

struct RunConfig {
    std::string preset;
    optics::CavityGeometry cavity;
    optics::MembraneSpec membrane;
    MechanicalMode mech;
    DriveSettings drive;
    std::string heating_preset;
    heating::HeatingModel heating;
    SceneSettings scene;
    SeriesSettings series;
    PdhSettings pdh;
    analysis::GorodetskyProtocol gorodetsky;
    AlignmentSettings alignment;
    std::uint64_t seed = 0;

    // Throws ConfigError naming the offending section.
    void validate() const;

    optics::CavityProps cavity_props() const;
    double laser_omega() const;
    // Scene at the configured drive; series runs vary power and detuning.
    spectra::SpectrumScene scene_template() const;
};

// Invalid configuration; what() starts with the field path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string> preset_names();
RunConfig preset(std::string_view name);

// JSON document overlaid on `base` (or on the preset named by its "preset"
// key). Unknown keys and type mismatches are ConfigErrors.
RunConfig parse_config(std::string_view json_text, std::optional<RunConfig> base = std::nullopt);
RunConfig load_config(const std::filesystem::path& path, std::optional<RunConfig> base = std::nullopt);
std::string to_json(const RunConfig& cfg);

} // namespace mimtwin::config
